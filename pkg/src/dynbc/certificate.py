"""Gradient-barrier certificates and hypothesis checking.

The a-priori machinery revolves around a gauge psi >= 1 limiting the
right-hand side through |f| <= a * psi(|p|).  Given a sup budget M and a
floor slope q0 at least the Lipschitz constant of the initial data, the
top slope q1 solves

    integral_{q0}^{q1} rho / psi(rho) d rho = 2 M,

and the barrier h is the concave arc with h(0) = 0, h'(0) = q1 and
h'' = -psi(h'), integrated until h' falls to q0; the stopping abscissa
kappa0 equals integral_{q0}^{q1} d rho / psi(rho) and h(kappa0) = 2M.
The barrier majorizes the spatial modulus of continuity of any solution
within budget, and |u_x| <= h'(0) = q1 is the resulting gradient bound.

Hypothesis checks are dense-sampling falsifiers over the stated boxes:
they report signed worst margins (violation iff margin > 0) with witness
points, not proofs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConditionViolated, PreconditionFailed
from .expr import Expr, compile_expr, diff, evaluate, free_variables, parse, to_str
from .numerics import PchipCurve, adaptive_simpson, brent, golden_section, tail_probe
from .problem import DirichletBC, DynamicBC, ProblemSpec

__all__ = [
    "PsiSpec", "BarrierCertificate", "ConditionCheck", "ConditionReport",
    "SupBoundCertificate", "find_q1", "build_barrier", "estimate_lipschitz",
    "check_compatibility", "check_hypotheses", "sup_bound",
]

# q0 >= K is accepted up to this relative slack; the Lipschitz estimator's
# safety factor (1e-6) must not reject exact-equality setups like K = q0
K_SLACK = 1e-5

QUAD_TOL = 1e-12


# ---------------------------------------------------------------------------
# psi gauge

@dataclass(frozen=True)
class PsiSpec:
    """Growth gauge rho -> psi(rho), psi C^1 and >= 1 on [0, inf)."""

    expr: Expr

    def __post_init__(self):
        bad = free_variables(self.expr) - {"p"}
        if bad:
            raise PreconditionFailed(f"psi may depend on p only, found {sorted(bad)}")
        fn = compile_expr(self.expr)
        dfn = compile_expr(diff(self.expr, "p"))
        rho = np.concatenate([np.linspace(0.0, 10.0, 401), np.geomspace(10.0, 1e3, 101)])
        with np.errstate(all="ignore"):
            vals = np.broadcast_to(np.asarray(fn(p=rho), dtype=float), rho.shape)
            dvals = np.broadcast_to(np.asarray(dfn(p=rho), dtype=float), rho.shape)
        if not np.all(np.isfinite(vals)) or not np.all(np.isfinite(dvals)):
            raise PreconditionFailed("psi must be C^1 and finite on the sampled range")
        if np.min(vals) < 1.0 - 1e-12:
            k = int(np.argmin(vals))
            raise PreconditionFailed(
                f"psi must map into [1, inf); psi({rho[k]}) = {vals[k]}")

    @classmethod
    def from_text(cls, text: str) -> "PsiSpec":
        return cls(parse(text))

    def fn(self):
        f = compile_expr(self.expr)
        return lambda rho: float(f(p=float(rho)))

    def vec_fn(self):
        f = compile_expr(self.expr)
        return lambda rho: np.broadcast_to(np.asarray(f(p=rho), dtype=float), np.shape(rho)).copy() \
            if np.ndim(rho) else float(f(p=rho))

    @property
    def text(self) -> str:
        return to_str(self.expr)


# ---------------------------------------------------------------------------
# certificates

@dataclass
class BarrierCertificate:
    """Concave barrier arc and the numbers that license it."""

    q0: float
    q1: float
    kappa0: float
    M: float
    K: float
    xi: np.ndarray     # table abscissae, xi[0] = 0, xi[-1] = kappa0
    h: np.ndarray      # h(xi), h[0] = 0, h[-1] = 2M (up to quadrature tol)
    hp: np.ndarray     # h'(xi), decreasing from q1 to q0
    psi_text: str

    @property
    def gradient_bound(self) -> float:
        return self.q1

    def h_curve(self) -> PchipCurve:
        """Shape-preserving cubic through the table with its exact slopes."""
        return PchipCurve(self.xi, self.h, dys=self.hp)

    def as_dict(self) -> dict:
        return {"q0": self.q0, "q1": self.q1, "kappa0": self.kappa0, "M": self.M,
                "K": self.K, "gradient_bound": self.gradient_bound, "psi": self.psi_text,
                "table_rows": int(self.xi.size)}


@dataclass
class ConditionCheck:
    name: str
    satisfied: bool
    worst_violation: float
    witness: dict

    def as_dict(self) -> dict:
        return {"name": self.name, "satisfied": self.satisfied,
                "worst_violation": self.worst_violation, "witness": self.witness}


@dataclass
class ConditionReport:
    entries: list[ConditionCheck] = field(default_factory=list)

    @property
    def all_satisfied(self) -> bool:
        return all(e.satisfied for e in self.entries)

    @property
    def violated(self) -> list[str]:
        return [e.name for e in self.entries if not e.satisfied]

    def entry(self, name: str) -> ConditionCheck:
        for e in self.entries:
            if e.name == name:
                return e
        raise KeyError(name)

    def as_dict(self) -> dict:
        return {"all_satisfied": self.all_satisfied,
                "violated": self.violated,
                "entries": [e.as_dict() for e in self.entries]}


@dataclass
class SupBoundCertificate:
    """Sup-norm budget from the growth gauge of the zero-gradient sources.

    Two variants of the infimum are kept: M_paper is the bare form without
    horizon amplification, M_proof carries the exp(lambda T) factor the
    maximum-principle argument actually produces.  Both are reported;
    M_proof is the bound this package treats as licensed.
    """

    phi_text: str
    B: float
    u0_sup: float
    T: float
    M_paper: float
    M_proof: float
    lambda_star: float

    def as_dict(self) -> dict:
        return {"Phi": self.phi_text, "B": self.B, "u0_sup": self.u0_sup, "T": self.T,
                "M_paper": self.M_paper, "M_proof": self.M_proof,
                "lambda_star": self.lambda_star}


# ---------------------------------------------------------------------------
# slope budget

def find_q1(psi: PsiSpec, q0: float, M: float) -> float:
    """Top slope q1 > q0 with integral_{q0}^{q1} rho/psi = 2M.

    Raises ConditionViolated when the improper integral converges to a
    value <= 2M, i.e. the budget cannot be met by any finite q1.
    """
    if not (q0 > 0):
        raise PreconditionFailed(f"q0 must be positive, got {q0}")
    if not (M > 0):
        raise PreconditionFailed(f"M must be positive, got {M}")
    fn = psi.fn()
    integrand = lambda r: r / fn(r)
    target = 2.0 * M

    probe = tail_probe(integrand, q0, stop_above=target)
    if probe.converged and probe.value <= target:
        raise ConditionViolated(
            f"integral of rho/psi over [{q0}, inf) converges to ~{probe.value:.6g}"
            f" <= 2M = {target:.6g}; no finite q1 exists")

    def budget(q: float) -> float:
        return adaptive_simpson(integrand, q0, q, tol=QUAD_TOL) - target

    # bracket: walk doubling window widths until the budget turns positive
    hi = max(1.0, q0) * 2.0
    lo = q0
    while budget(hi) < 0.0:
        lo = hi
        hi *= 2.0
        if hi > 1e30:  # cannot happen after a passing probe; defensive
            raise ConditionViolated("budget not reached while expanding bracket")
    q1 = brent(budget, lo, hi, xtol=1e-15, ftol=1e-11 * (1.0 + target))
    return float(q1)


# ---------------------------------------------------------------------------
# barrier arc

def build_barrier(psi: PsiSpec, q0: float, M: float, K: float) -> BarrierCertificate:
    """Integrate h'' = -psi(h'), h(0) = 0, h'(0) = q1 until h' reaches q0.

    Classical RK4 on (h, h') with steps sized so h' moves by about
    1e-4 * (q1 - q0) per step; the h' = q0 stop is localized by bisection
    on the cubic dense output of the final step.
    """
    if K > q0 * (1.0 + K_SLACK):
        raise PreconditionFailed(f"K = {K} exceeds q0 = {q0}; barrier needs q0 >= K")
    q1 = find_q1(psi, q0, M)
    fn = psi.fn()

    dq = 1e-4 * (q1 - q0)
    xi_rows = [0.0]
    h_rows = [0.0]
    hp_rows = [q1]
    xi, h, hp = 0.0, 0.0, q1

    def rhs(y):
        return (y[1], -fn(y[1]))

    steps = 0
    while hp > q0:
        steps += 1
        if steps > 2_000_000:  # defensive; ~2e4 steps is typical
            raise PreconditionFailed("barrier integration did not terminate")
        # slope moves ~delta per step: the absolute resolution bound, refined
        # relatively so extreme q1/q0 ratios stay accurate near the small end
        delta = min(dq, 1e-3 * max(hp, q0))
        step = delta / fn(hp)
        y0 = (h, hp)
        k1 = rhs(y0)
        k2 = rhs((h + 0.5 * step * k1[0], hp + 0.5 * step * k1[1]))
        k3 = rhs((h + 0.5 * step * k2[0], hp + 0.5 * step * k2[1]))
        k4 = rhs((h + step * k3[0], hp + step * k3[1]))
        h_new = h + step / 6.0 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
        hp_new = hp + step / 6.0 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
        if hp_new <= q0:
            # localize h' = q0 on the Hermite dense output of this step
            d0, d1 = -fn(hp), -fn(hp_new)

            def hp_dense(s: float) -> float:
                tt = s / step
                h00 = (1 + 2 * tt) * (1 - tt) ** 2
                h10 = tt * (1 - tt) ** 2
                h01 = tt * tt * (3 - 2 * tt)
                h11 = tt * tt * (tt - 1)
                return h00 * hp + h10 * step * d0 + h01 * hp_new + h11 * step * d1

            s_lo, s_hi = 0.0, step
            for _ in range(80):
                s_mid = 0.5 * (s_lo + s_hi)
                if hp_dense(s_mid) > q0:
                    s_lo = s_mid
                else:
                    s_hi = s_mid
            s_star = 0.5 * (s_lo + s_hi)
            tt = s_star / step
            h00 = (1 + 2 * tt) * (1 - tt) ** 2
            h10 = tt * (1 - tt) ** 2
            h01 = tt * tt * (3 - 2 * tt)
            h11 = tt * tt * (tt - 1)
            h_star = h00 * h + h10 * step * hp + h01 * h_new + h11 * step * hp_new
            xi_rows.append(xi + s_star)
            h_rows.append(h_star)
            hp_rows.append(q0)
            xi, h, hp = xi + s_star, h_star, q0
            break
        xi += step
        h, hp = h_new, hp_new
        xi_rows.append(xi)
        h_rows.append(h)
        hp_rows.append(hp)

    return BarrierCertificate(
        q0=q0, q1=q1, kappa0=xi, M=M, K=K,
        xi=np.asarray(xi_rows), h=np.asarray(h_rows), hp=np.asarray(hp_rows),
        psi_text=psi.text)


def estimate_lipschitz(u0: Expr, ell: float, samples: int = 10_000) -> float:
    """Sampled Lipschitz constant of the initial data: max |u0'| over a
    uniform grid times a (1 + 1e-6) safety factor."""
    du = compile_expr(diff(u0, "x"))
    xs = np.linspace(-ell, ell, samples)
    with np.errstate(all="ignore"):
        vals = np.broadcast_to(np.asarray(du(x=xs), dtype=float), xs.shape)
    if not np.all(np.isfinite(vals)):
        raise PreconditionFailed("u0 derivative not finite on the sample grid")
    return float(np.max(np.abs(vals)) * (1.0 + 1e-6))


# ---------------------------------------------------------------------------
# compatibility of initial and boundary evolution laws

def check_compatibility(problem: ProblemSpec) -> dict:
    """Residual of the t = 0 balance between the interior equation and each
    boundary law, evaluated at x = +-ell.

    Dynamic end:    | (-/+ b p + g [+ g1]) - (a u0'' + f [+ f1]) |
    Dirichlet end:  | u0(end) - value(0) |
    """
    u0x = diff(problem.u0, "x")
    u0xx = diff(u0x, "x")

    def residual(x_end: float, bc, sign: float) -> float:
        z = evaluate(problem.u0, x=x_end)
        p = evaluate(u0x, x=x_end)
        if isinstance(bc, DirichletBC):
            return abs(z - evaluate(bc.value, t=0.0))
        rhs = (evaluate(problem.a, t=0.0, x=x_end, z=z, p=p) * evaluate(u0xx, x=x_end)
               + evaluate(problem.f, t=0.0, x=x_end, z=z, p=p))
        if problem.f1 is not None:
            rhs += evaluate(problem.f1, t=0.0, x=x_end, z=z, p=p)
        lhs = sign * evaluate(bc.b, t=0.0, x=x_end, z=z, p=p) * p \
            + evaluate(bc.g, t=0.0, x=x_end, z=z, p=p)
        if bc.g1 is not None:
            lhs += evaluate(bc.g1, t=0.0, x=x_end, z=z, p=p)
        return abs(lhs - rhs)

    return {
        "residual_plus": residual(problem.ell, problem.bc_plus, -1.0),
        "residual_minus": residual(-problem.ell, problem.bc_minus, +1.0),
    }


# ---------------------------------------------------------------------------
# dense-sampling hypothesis checks

def _vec(e: Expr):
    f = compile_expr(e)

    def call(**kw):
        with np.errstate(all="ignore"):
            out = f(**kw)
        return np.asarray(out, dtype=float)

    return call


def _box_worst(values: np.ndarray, shape: tuple, axes: dict) -> tuple[float, dict]:
    """Max of a margin array over a box, with the argmax sample point."""
    arr = np.broadcast_to(np.asarray(values, dtype=float), shape)
    flat = np.argmax(arr)
    idx = np.unravel_index(flat, shape)
    witness = {name: float(grid[i]) for (name, grid), i in zip(axes.items(), idx)}
    return float(arr[idx]), witness


def _probe_entry(name: str, integrand, lower: float, want_divergent: bool = True) -> ConditionCheck:
    probe = tail_probe(integrand, lower)
    satisfied = (not probe.converged) if want_divergent else probe.converged
    return ConditionCheck(
        name=name, satisfied=satisfied,
        worst_violation=-1.0 if satisfied else 1.0,
        witness={"integral_estimate": probe.value, "upper_limit": probe.upper,
                 "classified": probe.classification})


def _cummax2(a: np.ndarray, axis0_forward: bool, axis1_forward: bool) -> np.ndarray:
    out = a
    out = np.maximum.accumulate(out, axis=0) if axis0_forward else \
        np.maximum.accumulate(out[::-1, :], axis=0)[::-1, :]
    out = np.maximum.accumulate(out, axis=1) if axis1_forward else \
        np.maximum.accumulate(out[:, ::-1], axis=1)[:, ::-1]
    return out


def _cummin2(a: np.ndarray, axis0_forward: bool, axis1_forward: bool) -> np.ndarray:
    return -_cummax2(-a, axis0_forward, axis1_forward)


def check_hypotheses(problem: ProblemSpec, M: float, q0: float, psi: PsiSpec,
                     pmax: float | None = None, *, n_samples: int = 33,
                     phi: Expr | None = None, B: float | None = None,
                     zmax: float | None = None, compat_tol: float = 1e-8) -> ConditionReport:
    """Dense-sampling check of every licensing condition.

    Margins are signed: satisfied iff worst_violation <= 0.  Boxes follow
    the stated quantifiers, clipped to [-M, M] in z and [-pmax, pmax] in p
    (pmax defaults to 4 q1 when the slope budget closes, else 100).
    Checks over ordered tuples run at full n_samples resolution through
    running-extremum reductions.  Divergence conditions report +-1 sentinel
    margins with the probe data as witness.
    """
    if pmax is None:
        try:
            pmax = 4.0 * find_q1(psi, q0, M)
        except ConditionViolated:
            pmax = 100.0
    n = n_samples
    ell, T = problem.ell, problem.T
    ts = np.linspace(0.0, T, n)
    xs = np.linspace(-ell, ell, n)
    zs = np.linspace(-M, M, n)
    ps = np.linspace(-pmax, pmax, n if n % 2 else n + 1)  # symmetric about 0
    pos = np.linspace(q0, pmax, n)

    a_fn, f_fn = _vec(problem.a), _vec(problem.f)
    psi_vec = psi.vec_fn()
    entries: list[ConditionCheck] = []

    # (6): |f| <= a psi(|p|) on [0,T] x [-ell,ell] x [-M,M] x [-pmax,pmax]
    shape4 = (n, n, n, ps.size)
    tt = ts[:, None, None, None]
    xx = xs[None, :, None, None]
    zz = zs[None, None, :, None]
    pp = ps[None, None, None, :]
    margin6 = np.abs(f_fn(t=tt, x=xx, z=zz, p=pp)) - a_fn(t=tt, x=xx, z=zz, p=pp) * psi_vec(np.abs(pp))
    worst, wit = _box_worst(margin6, shape4, {"t": ts, "x": xs, "z": zs, "p": ps})
    entries.append(ConditionCheck("(6)", worst <= 0.0, worst, wit))

    # (9): integral_{q0}^inf rho/psi > 2M
    fn_scalar = psi.fn()
    probe = tail_probe(lambda r: r / fn_scalar(r), q0, stop_above=2.0 * M)
    margin9 = 2.0 * M - probe.value
    entries.append(ConditionCheck(
        "(9)", not (probe.converged and margin9 >= 0.0), margin9 if probe.converged else -abs(margin9),
        {"integral_estimate": probe.value, "upper_limit": probe.upper,
         "classified": probe.classification}))

    # (9bNEU): boundary fluxes dominate the boundary sources at slopes >= q0
    bneu = _boundary_sign_margins(problem, ts, zs, pos)
    if bneu is not None:
        worst, wit = bneu
        entries.append(ConditionCheck("(9bNEU)", worst <= 0.0, worst, wit))

    # (10): sampled Lipschitz constant of u0 fits under q0
    K_est = estimate_lipschitz(problem.u0, ell)
    du0 = _vec(diff(problem.u0, "x"))
    xs_k = np.linspace(-ell, ell, 10_000)
    slopes = np.abs(np.broadcast_to(du0(x=xs_k), xs_k.shape))
    entries.append(ConditionCheck(
        "(10)", K_est <= q0 * (1.0 + K_SLACK), K_est - q0 * (1.0 + K_SLACK),
        {"K_estimate": K_est, "q0": q0, "x": float(xs_k[int(np.argmax(slopes))])}))

    # (upc): a > 0 everywhere; at dynamic ends d_p(b) p + b -/+ d_p(g) > 0
    # (margin 0.0 from exact degeneracy still counts as satisfied per the
    # signed-margin convention; strict positivity failures show up > 0)
    worst, wit = _upc_margins(problem, ts, xs, zs, ps)
    entries.append(ConditionCheck("(upc)", worst <= 0.0, worst, wit))

    # (66): zero-time balance between interior and boundary laws
    res = check_compatibility(problem)
    worst66 = max(res["residual_plus"], res["residual_minus"]) - compat_tol
    entries.append(ConditionCheck("(66)", worst66 <= 0.0, worst66, dict(res)))

    # split right-hand side monotonicity conditions
    if problem.has_split_rhs:
        entries.extend(_split_rhs_entries(problem, ts, xs, zs, pos, n))

    # sup-bound growth conditions when a gauge is supplied
    if phi is not None and B is not None:
        entries.append(_condition_209b(problem, phi, B, ts, xs, ps,
                                       zmax if zmax is not None else max(10.0, 4.0 * M)))
        phi_fn = compile_expr(phi)
        entries.append(_probe_entry("(phi)", lambda r: 1.0 / float(phi_fn(z=r, p=r, x=r, t=r)), 0.0))

    # (266): strengthened budget, integral of rho/psi diverges
    entries.append(_probe_entry("(266)", lambda r: r / fn_scalar(r), max(q0, 0.0)))

    return ConditionReport(entries)


def _boundary_sign_margins(problem: ProblemSpec, ts, zs, pos):
    """Worst margin of the four sign variants of the boundary domination
    condition over dynamic ends; None when no end is dynamic."""
    worst = -math.inf
    wit: dict = {}
    shape = (ts.size, zs.size, pos.size)
    tt = ts[:, None, None]
    zz = zs[None, :, None]
    qq = pos[None, None, :]
    found = False
    for x_end, bc, outward in ((problem.ell, problem.bc_plus, +1.0),
                               (-problem.ell, problem.bc_minus, -1.0)):
        if not isinstance(bc, DynamicBC):
            continue
        found = True
        b_fn, g_fn = _vec(bc.b), _vec(bc.g)
        for s in (+1.0, -1.0):
            # at +ell: s*g(t,ell,z,s p) <= b(t,ell,z,s p) p
            # at -ell: -s*g(t,-ell,z,s p) <= b(t,-ell,z,s p) p
            gv = g_fn(t=tt, x=x_end, z=zz, p=s * qq)
            bv = b_fn(t=tt, x=x_end, z=zz, p=s * qq)
            margin = (outward * s) * gv - bv * qq
            w, isample = _box_worst(margin, shape, {"t": ts, "z": zs, "p": pos})
            if w > worst:
                worst = w
                wit = {"end": "+ell" if outward > 0 else "-ell", "sign": s, **isample}
    if not found:
        return None
    return worst, wit


def _upc_margins(problem: ProblemSpec, ts, xs, zs, ps):
    """Positivity margins: interior a and the dynamic-end flux derivative."""
    shape4 = (ts.size, xs.size, zs.size, ps.size)
    tt = ts[:, None, None, None]
    xx = xs[None, :, None, None]
    zz = zs[None, None, :, None]
    pp = ps[None, None, None, :]
    a_fn = _vec(problem.a)
    neg_a = -a_fn(t=tt, x=xx, z=zz, p=pp)
    worst, wit = _box_worst(neg_a, shape4, {"t": ts, "x": xs, "z": zs, "p": ps})
    wit = {"part": "a", **wit}

    shape3 = (ts.size, zs.size, ps.size)
    t3 = ts[:, None, None]
    z3 = zs[None, :, None]
    p3 = ps[None, None, :]
    for x_end, bc, sign in ((problem.ell, problem.bc_plus, -1.0),
                            (-problem.ell, problem.bc_minus, +1.0)):
        if not isinstance(bc, DynamicBC):
            continue
        bp = _vec(diff(bc.b, "p"))
        b_fn = _vec(bc.b)
        gp = _vec(diff(bc.g, "p"))
        expr = (bp(t=t3, x=x_end, z=z3, p=p3) * p3 + b_fn(t=t3, x=x_end, z=z3, p=p3)
                + sign * gp(t=t3, x=x_end, z=z3, p=p3))
        w, isample = _box_worst(-expr, shape3, {"t": ts, "z": zs, "p": ps})
        if w > worst:
            worst = w
            wit = {"part": "boundary at " + ("+ell" if sign < 0 else "-ell"), **isample}
    return worst, wit


def _split_rhs_entries(problem: ProblemSpec, ts, xs, zs, pos, n) -> list[ConditionCheck]:
    """Ordered-tuple monotonicity conditions for the split right-hand side.

    Each worst case over (x <= y, z1 <= z2) or (z1 <= z2, p1 <= p2) pairs is
    found exactly on the sample grid with running-extremum tables, so the
    full n-per-axis resolution is kept without materializing pair products.
    """
    zero = parse("0")
    f1 = problem.f1 if problem.f1 is not None else zero
    f1_fn = _vec(f1)
    entries = []

    # (225): f1(t, y, z1, +-p) >= f1(t, x, z2, +-p) for x <= y, z1 <= z2, p >= 0
    p_nonneg = np.linspace(0.0, pos[-1], n)
    worst, wit = -math.inf, {}
    for s in (+1.0, -1.0):
        vals = f1_fn(t=ts[:, None, None, None], x=xs[None, :, None, None],
                     z=zs[None, None, :, None], p=s * p_nonneg[None, None, None, :])
        vals = np.broadcast_to(vals, (ts.size, xs.size, zs.size, p_nonneg.size))
        for it in range(ts.size):
            for ip in range(p_nonneg.size):
                A = vals[it, :, :, ip]  # A[i, j] = f1(x_i, z_j)
                P = _cummax2(A, axis0_forward=True, axis1_forward=False)
                viol = P - A  # at (k, j1): best f1(x<=y_k, z2>=z1_j1) minus f1(y_k, z1_j1)
                k, j1 = np.unravel_index(np.argmax(viol), viol.shape)
                w = float(viol[k, j1])
                if w > worst:
                    sub = A[:k + 1, j1:]
                    i, j2o = np.unravel_index(np.argmax(sub), sub.shape)
                    worst = w
                    wit = {"t": float(ts[it]), "p": float(s * p_nonneg[ip]),
                           "x": float(xs[i]), "y": float(xs[k]),
                           "z1": float(zs[j1]), "z2": float(zs[j1 + j2o])}
    entries.append(ConditionCheck("(225)", worst <= 0.0, worst, wit))

    # (226)/(227) couple f1 with the boundary additions g1
    ent226 = _condition_226(problem, f1_fn, ts, xs, zs, pos)
    if ent226 is not None:
        entries.append(ent226)
    ent227 = _condition_227(problem, f1_fn, ts, xs, zs, pos)
    if ent227 is not None:
        entries.append(ent227)
    return entries


def _bc_g1_fn(bc) -> "callable | None":
    if not isinstance(bc, DynamicBC):
        return None
    return _vec(bc.g1 if bc.g1 is not None else parse("0"))


def _condition_226(problem, f1_fn, ts, xs, zs, pos):
    """f1(t, x, z1, +-p1) >= g1(t, +ell, z2, +-p2) for z1 <= z2, q0 <= p1 <= p2."""
    g1_fn = _bc_g1_fn(problem.bc_plus)
    if g1_fn is None:
        return None
    worst, wit = -math.inf, {}
    for s in (+1.0, -1.0):
        fvals = f1_fn(t=ts[:, None, None, None], x=xs[None, :, None, None],
                      z=zs[None, None, :, None], p=s * pos[None, None, None, :])
        fvals = np.broadcast_to(fvals, (ts.size, xs.size, zs.size, pos.size))
        fmin = fvals.min(axis=1)  # over x -> (t, z1, p1)
        gvals = g1_fn(t=ts[:, None, None], x=problem.ell,
                      z=zs[None, :, None], p=s * pos[None, None, :])
        gvals = np.broadcast_to(gvals, (ts.size, zs.size, pos.size))
        for it in range(ts.size):
            Q = _cummin2(fmin[it], axis0_forward=True, axis1_forward=True)
            viol = gvals[it] - Q  # at (j2, m2): g1(z2, p2) - min f1(z1<=z2, p1<=p2)
            j2, m2 = np.unravel_index(np.argmax(viol), viol.shape)
            w = float(viol[j2, m2])
            if w > worst:
                sub = fmin[it][:j2 + 1, :m2 + 1]
                j1, m1 = np.unravel_index(np.argmin(sub), sub.shape)
                ix = int(np.argmin(fvals[it, :, j1, m1]))
                worst = w
                wit = {"t": float(ts[it]), "sign": s, "x": float(xs[ix]),
                       "z1": float(zs[j1]), "z2": float(zs[j2]),
                       "p1": float(s * pos[m1]), "p2": float(s * pos[m2])}
    return ConditionCheck("(226)", worst <= 0.0, worst, wit)


def _condition_227(problem, f1_fn, ts, xs, zs, pos):
    """g1(t, +ell, z1, -p1) >= f1(t, x, z2, -p2) and
    g1(t, -ell, z1, p1) >= f1(t, x, z2, p2), for z1 <= z2, q0 <= p2 <= p1."""
    checks = []
    gp = _bc_g1_fn(problem.bc_plus)
    if gp is not None:
        checks.append((problem.ell, gp, -1.0))
    gm = _bc_g1_fn(problem.bc_minus)
    if gm is not None:
        checks.append((-problem.ell, gm, +1.0))
    if not checks:
        return None
    worst, wit = -math.inf, {}
    for x_end, g1_fn, s in checks:
        fvals = f1_fn(t=ts[:, None, None, None], x=xs[None, :, None, None],
                      z=zs[None, None, :, None], p=s * pos[None, None, None, :])
        fvals = np.broadcast_to(fvals, (ts.size, xs.size, zs.size, pos.size))
        fmax = fvals.max(axis=1)  # (t, z2, p2)
        gvals = g1_fn(t=ts[:, None, None], x=x_end,
                      z=zs[None, :, None], p=s * pos[None, None, :])
        gvals = np.broadcast_to(gvals, (ts.size, zs.size, pos.size))
        for it in range(ts.size):
            # at (j1, m1): max f1 over z2 >= z1, p2 <= p1, minus g1(z1, p1)
            R = _cummax2(fmax[it], axis0_forward=False, axis1_forward=True)
            viol = R - gvals[it]
            j1, m1 = np.unravel_index(np.argmax(viol), viol.shape)
            w = float(viol[j1, m1])
            if w > worst:
                sub = fmax[it][j1:, :m1 + 1]
                j2o, m2 = np.unravel_index(np.argmax(sub), sub.shape)
                ix = int(np.argmax(fvals[it, :, j1 + j2o, m2]))
                worst = w
                wit = {"t": float(ts[it]), "end": "+ell" if s < 0 else "-ell",
                       "x": float(xs[ix]), "z1": float(zs[j1]), "z2": float(zs[j1 + j2o]),
                       "p1": float(s * pos[m1]), "p2": float(s * pos[m2])}
    return ConditionCheck("(227)", worst <= 0.0, worst, wit)


def _condition_209b(problem: ProblemSpec, phi: Expr, B: float, ts, xs, ps, zmax: float):
    """z f(t,x,z,0) and z g(t,+-ell,z,p) bounded by Phi(|z|)|z| + B."""
    nz = 65
    zs = np.linspace(-zmax, zmax, nz)
    phi_fn = _vec(phi)
    f_fn = _vec(problem.f)

    def gauge(zarr):
        az = np.abs(zarr)
        return np.broadcast_to(phi_fn(z=az, p=az, x=az, t=az), az.shape) * az + B

    shape3 = (ts.size, xs.size, nz)
    tt = ts[:, None, None]
    xx = xs[None, :, None]
    zz = zs[None, None, :]
    margin_f = zz * f_fn(t=tt, x=xx, z=zz, p=0.0) - gauge(zz)
    worst, wit = _box_worst(margin_f, shape3, {"t": ts, "x": xs, "z": zs})
    wit = {"part": "f", **wit}

    shape3b = (ts.size, nz, ps.size)
    t3 = ts[:, None, None]
    z3 = zs[None, :, None]
    p3 = ps[None, None, :]
    for x_end, bc in ((problem.ell, problem.bc_plus), (-problem.ell, problem.bc_minus)):
        if not isinstance(bc, DynamicBC):
            continue
        g_fn = _vec(bc.g)
        margin_g = z3 * g_fn(t=t3, x=x_end, z=z3, p=p3) - gauge(z3)
        w, isample = _box_worst(margin_g, shape3b, {"t": ts, "z": zs, "p": ps})
        if w > worst:
            worst = w
            wit = {"part": "g at " + ("+ell" if x_end > 0 else "-ell"), **isample}
    return ConditionCheck("(209b)", worst <= 0.0, worst, wit)


# ---------------------------------------------------------------------------
# sup-norm budget

def sup_bound(Phi: Expr, B: float, u0_sup: float, T: float) -> SupBoundCertificate:
    """Budget M for sup|u| from the gauge Phi and offset B of the
    zero-gradient growth condition.

    phi is the increasing map with integral_0^{phi(xi)} dr/Phi(r) = ln(xi),
    phi(1) = 0.  Working in the log domain, with G(y) the integral of
    1/Phi from 0:

        M_paper  = inf over lambda > 1 of  G^{-1}( max{0, G(beta), G(u0_sup)} )
        M_proof  = inf over lambda > 1 of  G^{-1}( max{...} + lambda T )

    with beta = B / ((lambda - 1) Phi(0)).  The infimum is scanned on the
    grid lambda = 1 + 10^k, k = -6..6, then refined by golden section.
    """
    bad = free_variables(Phi) - {"z"} - {"p"} - {"x"} - {"t"}
    if bad:
        raise PreconditionFailed(f"Phi gauge has unknown variables {sorted(bad)}")
    phi_fn = compile_expr(Phi)

    def Phi_at(r: float) -> float:
        return float(phi_fn(t=r, x=r, z=r, p=r))

    rs = np.linspace(0.0, 1e3, 2001)
    with np.errstate(all="ignore"):
        samples = np.broadcast_to(np.asarray(phi_fn(t=rs, x=rs, z=rs, p=rs), float), rs.shape)
    if not np.all(np.isfinite(samples)) or np.min(samples) <= 0.0:
        raise PreconditionFailed("Phi must be positive and finite on [0, inf)")
    if np.any(np.diff(samples) < -1e-9 * (1.0 + np.abs(samples[:-1]))):
        raise PreconditionFailed("Phi must be non-decreasing")
    if not (B > 0):
        raise PreconditionFailed(f"B must be positive, got {B}")
    if u0_sup < 0:
        raise PreconditionFailed(f"u0_sup must be non-negative, got {u0_sup}")

    probe = tail_probe(lambda r: 1.0 / Phi_at(r), 0.0)
    if probe.converged:
        raise ConditionViolated(
            f"integral of 1/Phi over [0, inf) converges (~{probe.value:.6g}); "
            "the sup budget construction requires divergence")

    phi0 = Phi_at(0.0)

    def G(y: float) -> float:
        if y <= 0.0:
            return 0.0
        return adaptive_simpson(lambda r: 1.0 / Phi_at(r), 0.0, y, tol=QUAD_TOL)

    def G_inv(c: float) -> float:
        if c <= 0.0:
            return 0.0
        hi = 1.0
        for _ in range(80):
            if G(hi) >= c:
                break
            hi *= 2.0
        else:
            return math.inf
        return brent(lambda y: G(y) - c, 0.0, hi, xtol=1e-14, ftol=1e-13 * (1 + c))

    Gu0 = G(u0_sup)

    def log_xi(lam: float) -> float:
        beta = B / ((lam - 1.0) * phi0)
        return max(0.0, G(beta), Gu0)

    def m_paper(lam: float) -> float:
        return G_inv(log_xi(lam))

    def m_proof(lam: float) -> float:
        return G_inv(log_xi(lam) + lam * T)

    def minimize(fn) -> tuple[float, float]:
        grid = [1.0 + 10.0 ** k for k in range(-6, 7)]
        vals = [fn(l) for l in grid]
        i = int(np.argmin(vals))
        lo = grid[max(i - 1, 0)]
        hi = grid[min(i + 1, len(grid) - 1)]
        if lo == hi:
            return grid[i], vals[i]
        # refine in log(lambda - 1) to respect the grid's scaling
        ulo, uhi = math.log10(lo - 1.0), math.log10(hi - 1.0)
        u_star, f_star = golden_section(lambda u: fn(1.0 + 10.0 ** u), ulo, uhi, tol=1e-12)
        if f_star <= vals[i]:
            return 1.0 + 10.0 ** u_star, f_star
        return grid[i], vals[i]

    _, Mp = minimize(m_paper)
    lam_star, Mq = minimize(m_proof)
    return SupBoundCertificate(phi_text=to_str(Phi), B=B, u0_sup=u0_sup, T=T,
                               M_paper=Mp, M_proof=Mq, lambda_star=lam_star)
