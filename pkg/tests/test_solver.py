"""Solver tests: discrete identities, exact steady states, manufactured
solutions for order verification, status trichotomy, blow-up detection."""

from __future__ import annotations

import math

import numpy as np
import pytest

from dynbc.errors import ConfigError, PreconditionFailed
from dynbc.expr import parse
from dynbc.problem import DirichletBC, DynamicBC, ProblemSpec
from dynbc.solver import (
    BlowUpDetected, Completed, SemiDiscretization, SolverConfig, StepFailure,
    semidiscretize, solve,
)


def steady_problem(ell=1.0, T=1.0):
    """u = x is an exact steady solution: interior 0 = 0 and u_t = -/+ b u_x + g."""
    return ProblemSpec(ell=ell, T=T, a=parse("1"), f=parse("0"), u0=parse("x"),
                       bc_minus=DynamicBC(parse("1"), parse("-1")),
                       bc_plus=DynamicBC(parse("1"), parse("1")))


def manufactured_problem(ell=1.0, T=1.0):
    """u = exp(-t) cos(x) solves the heat equation; the boundary data
    g = -exp(-t)(cos x +/- sin x) matches u_t +/- u_x at x = +/- ell."""
    return ProblemSpec(ell=ell, T=T, a=parse("1"), f=parse("0"), u0=parse("cos(x)"),
                       bc_minus=DynamicBC(parse("1"), parse("-exp(-t)*(cos(x)-sin(x))")),
                       bc_plus=DynamicBC(parse("1"), parse("-exp(-t)*(cos(x)+sin(x))")))


def quadratic_time_problem(ell=1.0, T=1.0):
    """u = exp(-t) (1 + x^2/2): spatially exact for the discretization
    (quadratic in x), so errors are purely temporal."""
    return ProblemSpec(
        ell=ell, T=T, a=parse("1"),
        f=parse("-exp(-t)*(2 + x^2/2)"),
        u0=parse("1 + x^2/2"),
        bc_minus=DynamicBC(parse("1"), parse("-exp(-t)*(1 + x^2/2 + x)")),
        bc_plus=DynamicBC(parse("1"), parse("-exp(-t)*(1 + x^2/2 - x)")))


def exact_manufactured(t, x):
    return np.exp(-t) * np.cos(x)


# ---------------------------------------------------------------------------
# semidiscretization identities

def test_semidiscretize_constant_state():
    disc = semidiscretize(ProblemSpec(
        ell=1.0, T=1.0, a=parse("1"), f=parse("0"), u0=parse("2"),
        bc_minus=DynamicBC(parse("1"), parse("0")),
        bc_plus=DynamicBC(parse("1"), parse("0"))), nx=11)
    u = np.full(11, 2.0)
    assert np.allclose(disc.rhs(0.0, u), 0.0, atol=1e-14)


def test_semidiscretize_linear_state():
    disc = semidiscretize(steady_problem(), nx=17)
    u = disc.nodes.copy()
    out = disc.rhs(0.3, u)
    assert np.allclose(out, 0.0, atol=1e-13)


def test_semidiscretize_quadratic_exact():
    # second difference is exact on quadratics: interior du/dt = 2 a = 2
    prob = ProblemSpec(ell=1.0, T=1.0, a=parse("1"), f=parse("0"), u0=parse("x^2"),
                       bc_minus=DynamicBC(parse("1"), parse("0")),
                       bc_plus=DynamicBC(parse("1"), parse("0")))
    disc = semidiscretize(prob, nx=21)
    u = disc.nodes ** 2
    out = disc.rhs(0.0, u)
    assert np.allclose(out[1:-1], 2.0, atol=1e-11)
    # one-sided gradient is exact on quadratics too: at +ell, -b*2x+0 = -2
    assert out[-1] == pytest.approx(-2.0, abs=1e-11)
    assert out[0] == pytest.approx(-2.0, abs=1e-11)


def test_semidiscretize_rejects_tiny_grid():
    with pytest.raises(ConfigError):
        semidiscretize(steady_problem(), nx=4)


def test_config_validation():
    with pytest.raises(ConfigError):
        SolverConfig(theta=1.5)
    with pytest.raises(ConfigError):
        SolverConfig(nx=3)


# ---------------------------------------------------------------------------
# exact and manufactured solutions

def test_steady_state_preserved():
    sol = solve(steady_problem(), SolverConfig(nx=33, dt0=1e-2))
    assert isinstance(sol.status, Completed)
    dev = np.max(np.abs(sol.grid.values - sol.grid.nodes[None, :]))
    assert dev <= 1e-10
    assert sol.grid.times[-1] == pytest.approx(1.0, abs=1e-12)


def _mms_error(nx: int) -> float:
    sol = solve(manufactured_problem(), SolverConfig(nx=nx, dt0=1e-3))
    assert isinstance(sol.status, Completed)
    tt, xx = np.meshgrid(sol.grid.times, sol.grid.nodes, indexing="ij")
    return float(np.max(np.abs(sol.grid.values - exact_manufactured(tt, xx))))


def test_mms_spatial_order():
    errs = [_mms_error(nx) for nx in (33, 65, 129)]
    orders = [math.log2(errs[i] / errs[i + 1]) for i in range(2)]
    assert min(orders) >= 1.9, (errs, orders)
    assert errs[-1] <= 5e-5


def test_temporal_order_trapezoidal():
    # spatially exact manufactured solution isolates the time error
    errs = []
    for dt in (0.02, 0.01, 0.005):
        cfg = SolverConfig(nx=21, dt0=dt, dt_min=dt, dt_max=dt)
        sol = solve(quadratic_time_problem(), cfg)
        assert isinstance(sol.status, Completed)
        tt, xx = np.meshgrid(sol.grid.times, sol.grid.nodes, indexing="ij")
        exact = np.exp(-tt) * (1 + xx ** 2 / 2)
        errs.append(float(np.max(np.abs(sol.grid.values - exact))))
    orders = [math.log2(errs[i] / errs[i + 1]) for i in range(2)]
    assert min(orders) >= 1.9, (errs, orders)


def test_symmetry_preserved():
    sol = solve(manufactured_problem(), SolverConfig(nx=41))
    mirrored = sol.grid.values[:, ::-1]
    assert np.max(np.abs(sol.grid.values - mirrored)) <= 1e-9


def test_quasilinear_against_fine_reference():
    # a depends on u and the boundary couples through the gradient;
    # self-convergence against a fine grid stands in for an exact solution
    prob = ProblemSpec(
        ell=1.0, T=0.25, a=parse("1 + 0.1*z^2"), f=parse("-0.5*z*p"),
        u0=parse("0.3*cos(pi*x/2)^3"),
        bc_minus=DynamicBC(parse("1 + 0.1*p^2"), parse("0")),
        bc_plus=DynamicBC(parse("1 + 0.1*p^2"), parse("0")))
    coarse = solve(prob, SolverConfig(nx=41, strict_compatibility=True))
    fine = solve(prob, SolverConfig(nx=161, strict_compatibility=True))
    assert isinstance(coarse.status, Completed) and isinstance(fine.status, Completed)
    # compare at final time on the coarse nodes; measured self-convergence
    # is order ~2, so the 41-node error dominates at ~8e-5
    uc = coarse.grid.values[-1]
    uf = np.interp(coarse.grid.nodes, fine.grid.nodes, fine.grid.values[-1])
    assert np.max(np.abs(uc - uf)) <= 2e-4


# ---------------------------------------------------------------------------
# dirichlet and mixed problems

def test_dirichlet_pinning():
    prob = ProblemSpec(ell=1.0, T=0.5, a=parse("1"), f=parse("0"), u0=parse("0"),
                       bc_minus=DirichletBC(parse("0")),
                       bc_plus=DirichletBC(parse("t")))
    sol = solve(prob, SolverConfig(nx=21, strict_compatibility=False))
    assert isinstance(sol.status, Completed)
    assert np.allclose(sol.grid.values[:, 0], 0.0, atol=1e-12)
    assert np.allclose(sol.grid.values[:, -1], sol.grid.times, atol=1e-12)


def test_mixed_dynamic_dirichlet():
    # dynamic at -ell, Dirichlet pin at +ell; relaxes towards steady profile
    # (slowest mode decays like exp(-0.74 t), so T = 12 reaches ~1e-4)
    prob = ProblemSpec(ell=0.5, T=12.0, a=parse("1"), f=parse("1"), u0=parse("0"),
                       bc_minus=DynamicBC(parse("1"), parse("0")),
                       bc_plus=DirichletBC(parse("0")))
    sol = solve(prob, SolverConfig(nx=33, strict_compatibility=False))
    assert isinstance(sol.status, Completed)
    # steady state solves -U'' = 1, U'(-ell) = 0 (flux law 0 = b U' at rest), U(ell) = 0
    xs = sol.grid.nodes
    steady = 0.5 * (0.5 - xs) * (xs + 1.5)
    assert np.max(np.abs(sol.grid.values[-1] - steady)) <= 1e-3


# ---------------------------------------------------------------------------
# status trichotomy

def test_strict_mode_rejects_incompatible_data():
    prob = ProblemSpec(ell=1.0, T=1.0, a=parse("1"), f=parse("0"), u0=parse("x^2"),
                       bc_minus=DynamicBC(parse("1"), parse("0")),
                       bc_plus=DynamicBC(parse("1"), parse("0")))
    with pytest.raises(PreconditionFailed):
        solve(prob, SolverConfig(nx=21))
    sol = solve(prob, SolverConfig(nx=21, strict_compatibility=False))
    assert sol.status.kind in ("completed", "blowup", "stepfailure")


def test_strict_mode_rejects_degenerate_diffusivity():
    prob = ProblemSpec(ell=1.0, T=1.0, a=parse("z"), f=parse("0"), u0=parse("0"),
                       bc_minus=DynamicBC(parse("1"), parse("0")),
                       bc_plus=DynamicBC(parse("1"), parse("0")))
    with pytest.raises(PreconditionFailed):
        solve(prob, SolverConfig(nx=21))


def test_blowup_detection_reports_time_and_gradient():
    # gradient-steepening source with a pinned end; small cutoff for speed
    prob = ProblemSpec(ell=0.75, T=4.0, a=parse("1"), f=parse("(1+p^2)^1.5"),
                       u0=parse("0"),
                       bc_minus=DirichletBC(parse("0")),
                       bc_plus=DynamicBC(parse("1"), parse("0")))
    cfg = SolverConfig(nx=101, strict_compatibility=False, gradient_cutoff=25.0,
                       dt_max=0.05)
    sol = solve(prob, cfg)
    assert isinstance(sol.status, BlowUpDetected)
    assert sol.status.max_gradient >= 25.0
    assert 0.0 < sol.status.time < 4.0
    assert math.isfinite(sol.sup_u)


def test_step_failure_at_minimal_step():
    # impossible accuracy demand with a hard dt ceiling forces a failure
    prob = manufactured_problem(T=0.1)
    cfg = SolverConfig(nx=21, dt0=1e-3, dt_min=1e-3, dt_max=2e-3,
                       local_error_tol=1e-30)
    sol = solve(prob, cfg)
    assert isinstance(sol.status, StepFailure)


def test_every_run_has_exactly_one_status():
    sols = [
        solve(steady_problem(T=0.2), SolverConfig(nx=21)),
        solve(manufactured_problem(T=0.2), SolverConfig(nx=21)),
    ]
    for sol in sols:
        assert sol.status.kind in ("completed", "blowup", "stepfailure")
        if isinstance(sol.status, Completed):
            assert sol.grid.times[-1] == pytest.approx(0.2, rel=1e-9)
            assert np.all(np.isfinite(sol.grid.values))


def test_solution_carries_derived_grids():
    sol = solve(manufactured_problem(T=0.3), SolverConfig(nx=33))
    assert sol.ux.values.shape == sol.grid.values.shape
    assert sol.ut.values.shape == sol.grid.values.shape
    tt, xx = np.meshgrid(sol.grid.times, sol.grid.nodes, indexing="ij")
    assert np.max(np.abs(sol.ux.values + np.exp(-tt) * np.sin(xx))) <= 3e-3
    assert np.max(np.abs(sol.ut.values + np.exp(-tt) * np.cos(xx))) <= 3e-3


def test_split_rhs_terms_enter_the_equations():
    # f1 = g1 = -2 z^3 damps a constant state along du/dt = -2 u^3
    prob = ProblemSpec(ell=1.0, T=1.0, a=parse("1"), f=parse("0"),
                       u0=parse("0.5"), f1=parse("-2*z^3"),
                       bc_minus=DynamicBC(parse("1"), parse("0"), g1=parse("-2*z^3")),
                       bc_plus=DynamicBC(parse("1"), parse("0"), g1=parse("-2*z^3")))
    sol = solve(prob, SolverConfig(nx=21))
    assert isinstance(sol.status, Completed)
    # exact: u(t) = u0 / sqrt(1 + 4 u0^2 t)
    exact = 0.5 / math.sqrt(1 + 4 * 0.25 * 1.0)
    assert np.max(np.abs(sol.grid.values[-1] - exact)) <= 1e-6
    assert np.max(np.abs(sol.grid.values[-1] - sol.grid.values[-1][0])) <= 1e-9
