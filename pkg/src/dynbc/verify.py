"""Numerical verification of the comparison-function conclusions on solutions.

The doubled-variable scan forms, over grid triples (t, x, y) with
0 < x - y <= kappa0,

    w~(t,x,y)  = exp(-t) (u(t,x) - u(t,y) - h(x-y))
    w~1(t,x,y) = exp(-t) (u(t,y) - u(t,x) - h(x-y))

where h is the barrier arc interpolated from its certificate table.  For a
solution within the certificate's budget both maxima stay below a grid
tolerance (the continuum statement is <= 0); on the diagonal x = y the
comparison value is exactly 0 because h(0) = 0 exactly.

Derived slacks: gradient_slack = q1 - sup|u_x|, modulus_slack =
min h(|x-y|) - |u(t,x) - u(t,y)| over in-range pairs, sup_slack = budget
minus sup|u|.  Negative slacks are findings, not errors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .certificate import BarrierCertificate, PsiSpec, SupBoundCertificate
from .errors import CertificateMismatch, DivergentIntegral, PreconditionFailed
from .numerics import tail_probe
from .solver import BlowUpDetected, Completed, Solution

__all__ = [
    "DoublingResult", "VerificationReport", "BlowupCheck",
    "doubling_check", "bounds_check", "blowup_inequality",
    "MAX_TIME_SLICES",
]

MAX_TIME_SLICES = 128


@dataclass
class DoublingResult:
    max_w_tilde: float
    max_w1_tilde: float
    witness_w: dict
    witness_w1: dict

    def as_dict(self) -> dict:
        return {"max_w_tilde": self.max_w_tilde, "max_w1_tilde": self.max_w1_tilde,
                "witness_w": self.witness_w, "witness_w1": self.witness_w1}


@dataclass
class VerificationReport:
    max_w_tilde: float | None
    max_w1_tilde: float | None
    gradient_slack: float
    modulus_slack: float
    sup_slack: float | None
    sup_slack_paper: float | None
    blowup_lhs: float | None
    witnesses: dict
    tolerance: float

    def as_dict(self) -> dict:
        return {"max_w_tilde": self.max_w_tilde, "max_w1_tilde": self.max_w1_tilde,
                "gradient_slack": self.gradient_slack, "modulus_slack": self.modulus_slack,
                "sup_slack": self.sup_slack, "sup_slack_paper": self.sup_slack_paper,
                "blowup_lhs": self.blowup_lhs, "witnesses": self.witnesses,
                "tolerance": self.tolerance}


@dataclass
class BlowupCheck:
    lhs: float
    rhs: float
    consistent: bool

    def as_dict(self) -> dict:
        return {"lhs": self.lhs, "rhs": self.rhs, "consistent": self.consistent}


def _time_subsample(times: np.ndarray, cap: int = MAX_TIME_SLICES) -> np.ndarray:
    if times.size <= cap:
        return np.arange(times.size)
    idx = np.linspace(0, times.size - 1, cap).round().astype(int)
    return np.unique(idx)


def _pair_mask(nodes: np.ndarray, kappa0: float):
    """Indices (j, k) with 0 < x_j - x_k <= kappa0; includes the corner pair
    (+ell, -ell) when kappa0 >= 2 ell and the near-band pairs otherwise."""
    dm = nodes[:, None] - nodes[None, :]
    mask = (dm > 0.0) & (dm <= kappa0 * (1.0 + 1e-12))
    jj, kk = np.nonzero(mask)
    return jj, kk, dm[jj, kk]


def doubling_check(sol: Solution, cert: BarrierCertificate,
                   max_time_slices: int = MAX_TIME_SLICES) -> DoublingResult:
    """Scan the doubled domain for positive comparison values.

    Requires a completed run and a certificate that covers it
    (M >= sup|u|); otherwise the comparison has no claim to check.
    """
    if not isinstance(sol.status, Completed):
        raise PreconditionFailed("doubling_check needs a completed solution")
    sup_u = sol.sup_u
    if sup_u > cert.M * (1.0 + 1e-9) + 1e-12:
        raise CertificateMismatch(
            f"certificate budget M = {cert.M} below sup|u| = {sup_u}")

    nodes = sol.grid.nodes
    times = sol.grid.times
    jj, kk, offsets = _pair_mask(nodes, cert.kappa0)
    if jj.size == 0:
        # kappa0 below the grid spacing: only the diagonal remains, where
        # the comparison value is exactly 0
        zero = {"t": float(times[0]), "x": float(nodes[0]), "y": float(nodes[0])}
        return DoublingResult(0.0, 0.0, dict(zero), dict(zero))

    curve = cert.h_curve()
    h_vals = curve(offsets)
    tidx = _time_subsample(times, max_time_slices)

    best_w = -math.inf
    best_w1 = -math.inf
    wit_w: dict = {}
    wit_w1: dict = {}
    for i in tidx:
        row = sol.grid.values[i]
        diffs = row[jj] - row[kk]
        damp = math.exp(-times[i])
        w = damp * (diffs - h_vals)
        w1 = damp * (-diffs - h_vals)
        m = int(np.argmax(w))
        if w[m] > best_w:
            best_w = float(w[m])
            wit_w = {"t": float(times[i]), "x": float(nodes[jj[m]]), "y": float(nodes[kk[m]])}
        m1 = int(np.argmax(w1))
        if w1[m1] > best_w1:
            best_w1 = float(w1[m1])
            wit_w1 = {"t": float(times[i]), "x": float(nodes[jj[m1]]), "y": float(nodes[kk[m1]])}
    return DoublingResult(best_w, best_w1, wit_w, wit_w1)


def bounds_check(sol: Solution, cert: BarrierCertificate,
                 sup_cert: SupBoundCertificate | None = None,
                 doubling: DoublingResult | None = None) -> VerificationReport:
    """Assemble the slack report; negative slacks are findings, not errors.

    The comparison maxima are filled from `doubling` when given, computed
    when the certificate covers the solution, and left None otherwise.
    sup_slack compares against the amplified budget (M_proof);
    sup_slack_paper against the bare-infimum variant (M_paper).
    """
    if not isinstance(sol.status, Completed):
        raise PreconditionFailed("bounds_check needs a completed solution")

    times = sol.grid.times
    nodes = sol.grid.nodes
    values = sol.grid.values
    witnesses: dict = {}

    it, ix = np.unravel_index(int(np.argmax(np.abs(sol.ux.values))), sol.ux.values.shape)
    gradient_slack = cert.q1 - float(np.abs(sol.ux.values[it, ix]))
    witnesses["gradient"] = {"t": float(times[it]), "x": float(nodes[ix]),
                             "ux": float(sol.ux.values[it, ix])}

    jj, kk, offsets = _pair_mask(nodes, cert.kappa0)
    if jj.size:
        curve = cert.h_curve()
        h_vals = curve(offsets)
        # every stored slice enters the modulus scan (the slice cap applies
        # only to the doubled scan); the wide guard is for pathological runs
        tidx = _time_subsample(times, cap=32_768)
        modulus_slack = math.inf
        for i in tidx:
            row = values[i]
            slack_row = h_vals - np.abs(row[jj] - row[kk])
            m = int(np.argmin(slack_row))
            if slack_row[m] < modulus_slack:
                modulus_slack = float(slack_row[m])
                witnesses["modulus"] = {"t": float(times[i]), "x": float(nodes[jj[m]]),
                                        "y": float(nodes[kk[m]])}
    else:
        modulus_slack = 0.0
        witnesses["modulus"] = {"note": "kappa0 below grid spacing; diagonal only"}

    sup_u = sol.sup_u
    iu, ju = np.unravel_index(int(np.argmax(np.abs(values))), values.shape)
    witnesses["sup"] = {"t": float(times[iu]), "x": float(nodes[ju]), "u": float(values[iu, ju])}
    sup_slack = sup_cert.M_proof - sup_u if sup_cert is not None else None
    sup_slack_paper = sup_cert.M_paper - sup_u if sup_cert is not None else None

    max_w = max_w1 = None
    if doubling is None and sup_u <= cert.M * (1.0 + 1e-9) + 1e-12:
        doubling = doubling_check(sol, cert)
    if doubling is not None:
        max_w = doubling.max_w_tilde
        max_w1 = doubling.max_w1_tilde
        witnesses["w"] = doubling.witness_w
        witnesses["w1"] = doubling.witness_w1

    tolerance = 5.0 * (sol.dx + sol.dt_max_accepted) * (1.0 + cert.q1)
    return VerificationReport(
        max_w_tilde=max_w, max_w1_tilde=max_w1,
        gradient_slack=gradient_slack, modulus_slack=modulus_slack,
        sup_slack=sup_slack, sup_slack_paper=sup_slack_paper,
        blowup_lhs=None, witnesses=witnesses, tolerance=tolerance)


def blowup_inequality(sol: Solution, psi: PsiSpec, tol: float = 1e-9) -> BlowupCheck:
    """Check half the (convergent) budget integral against sup|u| at blow-up.

    A divergent budget integral contradicts gradient blow-up of a bounded
    solution, so that case raises DivergentIntegral rather than returning
    a report.
    """
    if not isinstance(sol.status, BlowUpDetected):
        raise PreconditionFailed("blowup_inequality needs a blow-up run")
    fn = psi.fn()
    probe = tail_probe(lambda r: r / fn(r), 0.0)
    if not probe.converged:
        raise DivergentIntegral(
            "budget integral of rho/psi diverges: gradient blow-up of a bounded "
            "solution is inconsistent with the mixed-boundary gradient bound")
    lhs = 0.5 * probe.value
    rhs = sol.sup_u
    return BlowupCheck(lhs=lhs, rhs=rhs, consistent=bool(lhs <= rhs + tol))
