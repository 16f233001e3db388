"""Identity residuals and constants.

The Pohozaev-type balance is the designated detector for convention or
quadrature inconsistencies: for a genuine critical point it must close, and
any Fourier-normalization mismatch between the spectral and kernel paths
would leave an O(1) floor in it.  All diagnostics are pure functions of
(field, nonlinearity, parameters): byte-identical inputs give byte-identical
records.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .energy import (
    F_integral,
    I_functional,
    J_functional,
    NonlinearitySpec,
    Phi,
    Psi_tilde,
    eigen_spec,
)
from .grid import Field, RadialGrid, lp_norm
from .operators import (
    apply_A,
    apply_fractional_laplacian,
    coulomb_energy,
    frac_seminorm_sq,
)
from .params import ProblemParams, Regime, compute_exponents, riesz_constant
from .scaling import scale

__all__ = [
    "DiagnosticsRecord",
    "pohozaev_residual",
    "nehari_residual",
    "eigen_identity_residual",
    "identity_closure_gap",
    "estimate_sobolev_constant",
    "ps_threshold",
    "linking_probe",
    "LinkingRow",
]

_GUARD = 1e-300


@dataclass(frozen=True)
class DiagnosticsRecord:
    """Pohozaev balance sides plus companion identity residuals."""

    pohozaev_lhs: float
    pohozaev_rhs: float
    pohozaev_rel: float
    nehari: float
    eigen_identity_rel: float | None
    ps_threshold: float | None
    grid_summary: dict

    def to_dict(self) -> dict:
        return {
            "pohozaev_lhs": self.pohozaev_lhs,
            "pohozaev_rhs": self.pohozaev_rhs,
            "pohozaev_rel": self.pohozaev_rel,
            "nehari": self.nehari,
            "eigen_identity_rel": self.eigen_identity_rel,
            "ps_threshold": self.ps_threshold,
            "grid": self.grid_summary,
        }


def pohozaev_residual(
    u: Field,
    spec: NonlinearitySpec,
    lam: float | None = None,
    ps_threshold_value: float | None = None,
) -> DiagnosticsRecord:
    """Dilation identity residual for solutions of the autonomous equation.

    lhs = (N-2s)/2 |(-Delta)^(s/2) u|^2 + C_alpha (N+alpha)/4 D(u),
    rhs = N int F(u); the relative residual is |lhs-rhs| over the larger
    magnitude.  The identity is stated only for x-independent f, so weighted
    terms are rejected.
    """
    if not spec.is_autonomous:
        raise ValueError("identity stated only for autonomous f (no radial weight)")
    p = u.grid.params
    S = frac_seminorm_sq(u)
    D = coulomb_energy(u)
    c_a = riesz_constant(p.N, p.alpha)
    lhs = 0.5 * (p.N - 2.0 * p.s) * S + 0.25 * c_a * (p.N + p.alpha) * D
    rhs = p.N * F_integral(u, spec)
    rel = abs(lhs - rhs) / max(abs(lhs), abs(rhs), _GUARD)
    return DiagnosticsRecord(
        pohozaev_lhs=lhs,
        pohozaev_rhs=rhs,
        pohozaev_rel=rel,
        nehari=nehari_residual(u, spec),
        eigen_identity_rel=(
            None if lam is None else abs(eigen_identity_residual(u, lam)) / max(I_functional(u), _GUARD)
        ),
        ps_threshold=ps_threshold_value,
        grid_summary=u.grid.summary(),
    )


def nehari_residual(u: Field, spec: NonlinearitySpec) -> float:
    """Derivative of the action tested with the field itself: Phi'(u) u."""
    fu = spec.f(u.values, u.grid.r)
    return apply_A(u).pair(u) - float(np.sum(u.grid.w * fu * u.values))


def eigen_identity_residual(u: Field, lam: float) -> float:
    """I(u) - lam J(u); small only for eigenpairs of the scaled problem."""
    return I_functional(u) - lam * J_functional(u)


def identity_closure_gap(u: Field, lam: float) -> dict:
    """Consistency of the three identities for the scaling-critical problem.

    Multiplying the Pohozaev balance by 1/sigma and the tested equation by
    theta/sigma and subtracting reproduces I - lam J; the gap between that
    combination and the directly computed I - lam J must stay within the sum
    of the component residuals (it is zero in exact arithmetic).
    """
    exps = compute_exponents(u.grid.params)
    spec = eigen_spec(lam, exps)
    rec = pohozaev_residual(u, spec)
    poh_num = rec.pohozaev_lhs - rec.pohozaev_rhs
    neh = nehari_residual(u, spec)
    combo = (exps.theta * neh - poh_num) / exps.sigma
    direct = eigen_identity_residual(u, lam)
    return {
        "combination": combo,
        "direct": direct,
        "gap": abs(combo - direct),
        "component_budget": (exps.theta * abs(neh) + abs(poh_num)) / exps.sigma,
        "pohozaev_rel": rec.pohozaev_rel,
        "nehari": neh,
    }


# ---------------------------------------------------------------------------
# best-constant estimation and the concentration threshold
# ---------------------------------------------------------------------------

def estimate_sobolev_constant(
    params: ProblemParams,
    grid: RadialGrid,
    max_iter: int = 400,
    tol: float = 1e-12,
) -> float:
    """Estimate the best constant S with |u|_{2*_s}^2 <= S^{-1} |(-Delta)^{s/2}u|^2.

    The Rayleigh quotient is minimized by renormalized inverse iteration
    u <- (-Delta)^{-s} |u|^(2*-2) u, started from a bump-type extremal
    profile and a Gaussian; the smallest quotient over the starts is
    returned.  Cached per grid.
    """
    if params.regime is not Regime.ABOVE:
        raise ValueError("below-regime ranges not supported")
    cached = grid._caches.get("sobolev_constant")
    if cached is not None:
        return cached
    exps = compute_exponents(params)
    p = exps.two_star_s
    seeds = [
        (1.0 + grid.r ** 2) ** (-(params.N - 2.0 * params.s) / 2.0),
        np.exp(-grid.r ** 2),
    ]
    best = math.inf
    best_u = None
    for vals in seeds:
        u = Field(grid, vals)
        q_prev = None
        for _ in range(max_iter):
            nrm = lp_norm(u, p)
            if nrm == 0.0:
                break
            u = Field(u.grid, u.values / nrm)
            g = Field(u.grid, np.abs(u.values) ** (p - 2.0) * u.values)
            u = apply_fractional_laplacian(g, power=-2.0 * params.s)
            q = frac_seminorm_sq(u) / lp_norm(u, p) ** 2
            if q_prev is not None and abs(q - q_prev) <= tol * abs(q):
                break
            q_prev = q
        quotient = frac_seminorm_sq(u) / lp_norm(u, p) ** 2
        if quotient < best:
            best = quotient
            best_u = Field(grid, u.values / lp_norm(u, p))
    grid._caches["sobolev_constant"] = best
    grid._caches["sobolev_extremal"] = best_u
    return best


def sobolev_extremal(params: ProblemParams, grid: RadialGrid) -> Field:
    """The minimizing profile behind :func:`estimate_sobolev_constant`."""
    estimate_sobolev_constant(params, grid)
    return grid._caches["sobolev_extremal"]


def ps_threshold(params: ProblemParams, S: float) -> float:
    """Concentration-compactness level (s/N) S^(N/(2s))."""
    if not (S > 0.0):
        raise ValueError("S must be positive")
    return (params.s / params.N) * S ** (params.N / (2.0 * params.s))


# ---------------------------------------------------------------------------
# local-linking geometry probe
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LinkingRow:
    candidate: int
    psi_value: float
    side: str                  # "low" (psi <= lam) or "high"
    signs_ok: bool
    profile: tuple


def linking_probe(
    spec: NonlinearitySpec,
    lam: float,
    candidates: list[Field],
    t_range,
) -> dict:
    """Fiber-sign table near the origin for candidate manifold points.

    Candidates are split by their reciprocal-J value against ``lam``; the
    expected pattern is Phi(u_t) <= 0 on the low side and > 0 on the high
    side for all sampled t in (0, rho].  The t = 0 row is identically zero.
    """
    ts = sorted(float(t) for t in t_range)
    if any(t < 0 for t in ts):
        raise ValueError("t_range must be nonnegative")
    rows: list[LinkingRow] = []
    pattern = True
    for i, u in enumerate(candidates):
        psi = Psi_tilde(u)
        side = "low" if psi <= lam else "high"
        prof = []
        ok = True
        for t in ts:
            if t == 0.0:
                prof.append((0.0, 0.0))
                continue
            phi = Phi(scale(u, t), spec)
            prof.append((t, phi))
            if side == "low" and phi > 0.0:
                ok = False
            if side == "high" and phi <= 0.0:
                ok = False
        rows.append(LinkingRow(i, psi, side, ok, tuple(prof)))
        pattern = pattern and ok
    sides = {r.side for r in rows}
    return {
        "rows": rows,
        "pattern_holds": pattern,
        "partial": not ({"low", "high"} <= sides),
    }
