import math

import numpy as np
import pytest

from fcs import ProblemParams, make_grid
from fcs.energy import (
    DampedPowerTerm,
    I_functional,
    J_functional,
    NonlinearitySpec,
    Phi,
    pure_power,
)
from fcs.operators import apply_A, apply_B, dual_norm
from fcs.params import compute_exponents
from fcs.solvers import (
    DegenerateSeedError,
    RegimeMismatchError,
    SolverOptions,
    eigen1,
    eigen_deflated,
    find_negative_energy_point,
    minimize_subscaled,
    mountain_pass,
    sweep,
)
from fcs.grid import Field


@pytest.fixture(scope="module")
def grid(pstar):
    return make_grid(pstar, 20.0, 160)


@pytest.fixture(scope="module")
def eigen_report(pstar, grid):
    return eigen1(pstar, grid)


def _eigen_residual_dual(rep):
    u = rep.solution
    lam = rep.multiplier
    rho = Field(u.grid, apply_A(u).values - lam * apply_B(u).values)
    return dual_norm(rho)


# ---------------------------------------------------------------------------
# eigen solver
# ---------------------------------------------------------------------------

def test_eigen1_converges(pstar, eigen_report):
    rep = eigen_report
    assert rep.converged
    assert rep.multiplier > 0.0
    assert rep.residual_rel <= 1e-6
    assert abs(rep.extras["I"] - 1.0) <= 1e-8
    assert rep.extras["J_history_monotone"]


def test_eigen1_report_recomputes_from_field(eigen_report):
    # nothing may leak from solver internals: recompute every number
    rep = eigen_report
    u = rep.solution
    lam_again = apply_A(u).pair(u) / apply_B(u).pair(u)
    assert math.isclose(lam_again, rep.multiplier, rel_tol=1e-12)
    assert math.isclose(_eigen_residual_dual(rep), rep.residual_dual, rel_tol=1e-9, abs_tol=1e-18)
    assert math.isclose(
        I_functional(u) - rep.multiplier * J_functional(u),
        rep.energy,
        rel_tol=1e-9,
        abs_tol=1e-15,
    )


def test_eigen1_sign_normalization(eigen_report):
    assert eigen_report.solution.values[0] >= 0.0


def test_eigen1_nehari_vanishes(eigen_report):
    assert abs(eigen_report.nehari) <= 1e-10


def test_psi_bounded_below_by_first_eigenvalue(pstar, grid, eigen_report):
    # post-hoc check of the minimization property: every sampled manifold
    # point has reciprocal-J at or above the computed first eigenvalue
    from fcs.energy import Psi_tilde
    from fcs.scaling import project_to_M

    lam1 = eigen_report.multiplier
    rng = np.random.default_rng(77)
    r, R = grid.r, grid.R
    window = np.exp(-((r / (0.35 * R)) ** 8))
    profiles = [np.exp(-((r / w) ** 2)) for w in (0.3, 1.0, 3.0)]
    profiles += [(1.0 + (r / w) ** 2) ** (-1.75) * window for w in (1.0, 2.0)]
    for _ in range(5):
        b = rng.standard_normal(grid.M) * np.exp(-np.arange(grid.M) / 12.0)
        profiles.append(np.abs(grid.transform().inverse(b)) * window + 0.05 * window)
    for prof in profiles:
        u = project_to_M(grid.field(prof))
        assert Psi_tilde(u) >= lam1 * (1.0 - 1e-8)


def test_eigen1_multi_seed_agreement(pstar, grid, eigen_report):
    lam0 = eigen_report.multiplier
    for width in (0.5, 2.0):
        rep = eigen1(pstar, grid, SolverOptions(seed_width=width))
        assert abs(rep.multiplier - lam0) <= 1e-2 * lam0


def test_eigen1_rejects_zero_seed(pstar, grid):
    opts = SolverOptions(seed="field", seed_field=grid.zero_field())
    with pytest.raises(DegenerateSeedError):
        eigen1(pstar, grid, opts)


def test_eigen1_rejects_below_regime():
    p = ProblemParams(5, 0.3, 1.5)
    g = make_grid(p, 10.0, 32)
    with pytest.raises(ValueError, match="refuse"):
        eigen1(p, g)


def test_eigen1_scaled_pair_still_solves(eigen_report):
    # fibers of solutions are solutions.  The eigenfunction carries an
    # algebraic tail, so contracting it requires a tail window first (the
    # boundary-decay flag), and that surgery dominates the error budget: the
    # node-wise residual of the dilated pair sits at the percent level on
    # this cutoff.  The robust integral form of the statement is that the
    # dilated pair reproduces the same multiplier.
    from fcs.scaling import scale

    u = eigen_report.solution
    grid = u.grid
    lam = eigen_report.multiplier
    window = np.exp(-((grid.r / (0.55 * grid.R)) ** 10))
    uw = Field(grid, u.values * window)
    assert uw.boundary_decay
    u2 = scale(uw, 2.0)
    rayleigh = apply_A(u2).pair(u2) / apply_B(u2).pair(u2)
    assert abs(rayleigh - lam) <= 3e-2 * lam


# ---------------------------------------------------------------------------
# deflation
# ---------------------------------------------------------------------------

def test_deflated_k1_reduces_to_eigen1(pstar, grid, eigen_report):
    reps = eigen_deflated(pstar, grid, 1)
    assert len(reps) == 1
    assert math.isclose(reps[0].multiplier, eigen_report.multiplier, rel_tol=1e-10)


def test_deflated_candidates(pstar, grid, eigen_report):
    reps = eigen_deflated(pstar, grid, 2)
    lam1 = eigen_report.multiplier
    assert len(reps) >= 1
    for rep in reps:
        assert rep.converged
        assert rep.multiplier >= lam1 * (1.0 - 1e-2)
        assert rep.extras["ordering"] == "candidate, uncertified ordering"
    if len(reps) == 2:
        a, b = reps[0].solution.values, reps[1].solution.values
        cos = abs(np.sum(grid.w * a * b)) / (
            math.sqrt(np.sum(grid.w * a * a)) * math.sqrt(np.sum(grid.w * b * b))
        )
        assert cos < 0.99


# ---------------------------------------------------------------------------
# coercive minimization
# ---------------------------------------------------------------------------

def test_minimize_empty_spec_returns_zero(pstar, grid):
    rep = minimize_subscaled(pstar, grid, NonlinearitySpec())
    assert rep.converged and rep.energy == 0.0
    assert np.all(rep.solution.values == 0.0)


def test_minimize_rejects_superscaled(pstar, grid):
    with pytest.raises(RegimeMismatchError, match="subscaled"):
        minimize_subscaled(pstar, grid, pure_power(1.0, 3.2))


def test_minimize_rejects_out_of_window_exponent(pstar, grid):
    # subscaled but with a term below the lower embedding endpoint
    spec = NonlinearitySpec.of(DampedPowerTerm(1.0, 20.0 / 7.0, 0.5))
    with pytest.raises(RegimeMismatchError, match="open interval"):
        minimize_subscaled(pstar, grid, spec)


def test_minimize_damped_worked_example(pstar, grid, eigen_report):
    # scaling-critical power damped by (1 + |t|^0.3), lambda above the first
    # eigenvalue: a nontrivial negative-level minimizer exists at this cutoff
    exps = compute_exponents(pstar)
    lam = 4.5
    assert lam > eigen_report.multiplier
    spec = NonlinearitySpec.of(DampedPowerTerm(lam, exps.two_star_s_alpha, 0.3))
    rep = minimize_subscaled(
        pstar, grid, spec, SolverOptions(seed="field", seed_field=eigen_report.solution)
    )
    assert rep.converged
    assert rep.energy < 0.0
    assert np.max(np.abs(rep.solution.values)) > 1e-3
    assert rep.residual_rel <= 1e-6


def test_minimize_pure_power_on_small_ball_is_trivial(pstar, grid):
    # at this cutoff the beta = 2.7 action is nonnegative, so the honest
    # global minimizer is the origin (negative wells need a far larger ball)
    rep = minimize_subscaled(pstar, grid, pure_power(1.0, 2.7))
    assert rep.converged
    assert rep.energy == 0.0
    assert np.all(rep.solution.values == 0.0)


# ---------------------------------------------------------------------------
# mountain pass
# ---------------------------------------------------------------------------

@pytest.fixture(scope="module")
def mp_setup():
    p = ProblemParams(3, 0.8, 2.0)
    g = make_grid(p, 20.0, 160)
    spec = pure_power(1.0, 4.1)
    e = find_negative_energy_point(p, g, spec)
    return p, g, spec, e


def test_negative_energy_endpoint(mp_setup):
    p, g, spec, e = mp_setup
    assert Phi(e, spec) <= 0.0
    assert np.max(np.abs(e.values)) > 0.0


def test_mountain_pass_positive_level(mp_setup):
    p, g, spec, e = mp_setup
    rep = mountain_pass(p, g, spec, e)
    assert rep.converged
    assert rep.energy > 0.0
    assert abs(rep.nehari) <= 1e-8 * max(1.0, rep.energy)
    assert rep.residual_rel <= 1e-6


def test_mountain_pass_path_resolution_stability(mp_setup):
    p, g, spec, e = mp_setup
    a = mountain_pass(p, g, spec, e, SolverOptions(path_nodes=15))
    b = mountain_pass(p, g, spec, e, SolverOptions(path_nodes=30))
    assert abs(a.energy - b.energy) <= 2e-2 * a.energy


def test_mountain_pass_rejects_positive_endpoint(mp_setup):
    p, g, spec, _ = mp_setup
    tiny = g.field(1e-3 * np.exp(-g.r ** 2))
    assert Phi(tiny, spec) > 0.0
    with pytest.raises(ValueError, match="Phi"):
        mountain_pass(p, g, spec, tiny)


def test_mountain_pass_rejects_subscaled(pstar, grid):
    e = grid.field(np.exp(-grid.r ** 2))
    with pytest.raises(RegimeMismatchError):
        mountain_pass(pstar, grid, pure_power(1.0, 2.7), e)


# ---------------------------------------------------------------------------
# sweeps
# ---------------------------------------------------------------------------

def test_sweep_single_step_equals_single_solve(pstar, grid, eigen_report):
    exps = compute_exponents(pstar)
    spec = NonlinearitySpec.of(DampedPowerTerm(4.5, exps.two_star_s_alpha, 0.3))
    opts = SolverOptions(seed="field", seed_field=eigen_report.solution)
    rows = sweep(pstar, grid, spec, 0, [4.5], opts, method="minimize")
    single = minimize_subscaled(pstar, grid, spec, opts)
    assert len(rows) == 1
    assert rows[0].converged
    assert math.isclose(rows[0].energy, single.energy, rel_tol=1e-6)


def test_sweep_warm_start_reduces_iterations(pstar, grid, eigen_report):
    exps = compute_exponents(pstar)
    spec = NonlinearitySpec.of(DampedPowerTerm(4.0, exps.two_star_s_alpha, 0.3))
    opts = SolverOptions(seed="field", seed_field=eigen_report.solution)
    lams = [4.0, 4.25, 4.5, 4.75, 5.0]
    rows = sweep(pstar, grid, spec, 0, lams, opts, method="minimize")
    assert all(r.converged for r in rows)
    warm_iters = sum(r.iterations for r in rows[1:])
    cold_iters = 0
    for lam in lams[1:]:
        rep = minimize_subscaled(
            pstar,
            grid,
            spec.with_coef(0, lam),
            SolverOptions(seed="field", seed_field=eigen_report.solution),
        )
        cold_iters += rep.iterations
    assert warm_iters < cold_iters


def test_sweep_records_failures_and_continues(pstar, grid):
    # an out-of-window coefficient sweep: rows fail but the sweep finishes
    spec = pure_power(1.0, 3.2)  # superscaled: minimize refuses
    with pytest.warns(RuntimeWarning):
        rows = sweep(pstar, grid, spec, 0, [1.0, 2.0], method="minimize")
    assert len(rows) == 2
    assert all(not r.converged for r in rows)
    assert all(math.isnan(r.energy) for r in rows)


def test_sweep_requires_monotone_range(pstar, grid):
    with pytest.raises(ValueError, match="monotone"):
        sweep(pstar, grid, pure_power(1.0, 2.7), 0, [1.0, 3.0, 2.0])


def test_deflated_partial_list_warns(pstar, grid):
    # the seed bank is finite: asking for more candidates than it can
    # deliver yields a partial list plus a warning
    with pytest.warns(RuntimeWarning, match="distinct candidates"):
        reps = eigen_deflated(pstar, grid, 7)
    assert 1 <= len(reps) < 7


def test_solver_options_validation():
    with pytest.raises(ValueError):
        SolverOptions(tol=0.0)
    with pytest.raises(ValueError):
        SolverOptions(max_iter=0)
    with pytest.raises(ValueError):
        SolverOptions(path_nodes=2)
