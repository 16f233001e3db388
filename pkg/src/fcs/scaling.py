"""The dilation map u_t = t^theta u(t .), fiber projection, and fiber probes.

On the fixed grid the dilated field is resampled by monotone cubic
interpolation (no overshoot, preserves positivity of bump profiles) with
zero extension beyond the cutoff.  Contraction (t > 1) reads samples beyond
R and therefore requires the boundary-decay flag.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import PchipInterpolator

from .energy import I_functional, NonlinearitySpec, Phi
from .grid import Field
from .params import compute_exponents

__all__ = ["FiberPoint", "scale", "project_to_M", "fiber_profile"]


@dataclass(frozen=True)
class FiberPoint:
    """A manifold base point paired with a dilation parameter."""

    base: Field
    t: float

    def __post_init__(self) -> None:
        if self.t < 0.0:
            raise ValueError("dilation parameter must be nonnegative")
        if abs(I_functional(self.base) - 1.0) > 1e-8:
            raise ValueError("fiber base point must satisfy I(u) = 1")

    def field(self) -> Field:
        return scale(self.base, self.t)


def scale(u: Field, t: float, assume_zero_tail: bool = False) -> Field:
    """Dilate: (u, t) -> t^theta u(t r), resampled on the grid of u.

    scale(u, 0) = 0 and scale(u, 1) = u exactly; t < 0 is rejected; t > 1
    requires the boundary-decay flag since samples beyond the cutoff are
    taken as zero.  ``assume_zero_tail`` waives that requirement for callers
    that accept zero extension of an undecayed tail (tail-insensitive
    quotient checks); the default contract is the hard error.
    """
    if t < 0.0:
        raise ValueError("dilation parameter must be nonnegative")
    if t == 0.0:
        return u.grid.zero_field()
    if t == 1.0:
        return u.copy()
    grid = u.grid
    if t > 1.0 and not u.boundary_decay and not assume_zero_tail:
        raise ValueError(
            "scaling would read beyond cutoff: t > 1 requires the boundary-decay flag"
        )
    theta = compute_exponents(grid.params).theta
    # interpolate in the r^2 variable: smooth radial profiles are smooth and
    # extremum-free there near the origin, where the monotone limiter would
    # otherwise flatten the peak; the y = 0 anchor is a quadratic
    # extrapolation in y with O(h^6) error
    y = grid.r ** 2
    y0, y1, y2 = y[0], y[1], y[2]
    v = u.values
    l0 = (y1 * y2) / ((y0 - y1) * (y0 - y2))
    l1 = (y0 * y2) / ((y1 - y0) * (y1 - y2))
    l2 = (y0 * y1) / ((y2 - y0) * (y2 - y1))
    origin = l0 * v[0] + l1 * v[1] + l2 * v[2]
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        interp = PchipInterpolator(
            np.concatenate(([0.0], y)), np.concatenate(([origin], v)), extrapolate=False
        )
        target = (t * grid.r) ** 2
        vals = np.where(target <= grid.R ** 2, interp(np.minimum(target, grid.R ** 2)), 0.0)
    vals = np.nan_to_num(vals, nan=0.0)
    return Field(grid, t ** theta * vals)


def project_to_M(u: Field, tol: float = 1e-11, max_iter: int = 8) -> Field:
    """Fiber projection onto the unit-energy manifold {I = 1}.

    The closed-form parameter t = I(u)^(-1/sigma) of the homogeneous energy
    is polished on g(t) = I(u_t) - 1: a Newton iteration with the analytic
    slope sigma t^(sigma-1) I(u)-type derivative handles smooth fields, and a
    bracketing bisection fallback covers fields whose resampled energy is
    wiggly in t (content near the grid scale).
    """
    iu = I_functional(u)
    if iu <= 0.0:
        raise ValueError("cannot project the zero field onto the manifold")
    sigma = compute_exponents(u.grid.params).sigma
    t = iu ** (-1.0 / sigma)

    def g_of(tv: float) -> float:
        return I_functional(scale(u, tv)) - 1.0

    best = None
    for _ in range(max_iter):
        g = g_of(t)
        if best is None or abs(g) < best[0]:
            best = (abs(g), t)
        if abs(g) < tol:
            return scale(u, t)
        t_new = t - g / (sigma * (g + 1.0) / t)
        if not (t_new > 0.0) or not math.isfinite(t_new):
            break
        t = t_new

    # safeguarded fallback: bracket a sign change around the best iterate
    # and bisect (I(u_t) grows ~ t^sigma globally, so a bracket exists)
    t = best[1]
    lo, hi = t, t
    glo, ghi = g_of(lo), g_of(hi)
    for _ in range(60):
        if glo <= 0.0:
            break
        lo /= 1.3
        glo = g_of(lo)
    for _ in range(60):
        if ghi >= 0.0:
            break
        hi *= 1.3
        ghi = g_of(hi)
    if glo <= 0.0 <= ghi:
        for _ in range(90):
            mid = 0.5 * (lo + hi)
            gm = g_of(mid)
            if abs(gm) < tol or hi - lo < 1e-15 * hi:
                return scale(u, mid)
            if gm < 0.0:
                lo = mid
            else:
                hi = mid
        mid = 0.5 * (lo + hi)
        if abs(g_of(mid)) <= 1e-8:
            return scale(u, mid)
    if best[0] <= 1e-8:
        return scale(u, best[1])
    raise RuntimeError("fiber projection did not converge to the manifold")


def fiber_profile(
    u: Field,
    spec: NonlinearitySpec,
    ts,
    rel_step: float = 1e-4,
) -> list[tuple[float, float, float]]:
    """Energy along the fiber: rows (t, Phi(u_t), dPhi(u_t)/dt).

    ``u`` must lie on the manifold and ``ts`` must be positive ascending.
    The derivative is a centered difference with relative step ``rel_step``.
    Used as a geometry probe (sign patterns near the origin, pass geometry).
    """
    ts = [float(t) for t in ts]
    if any(t < 0.0 for t in ts) or any(b <= a for a, b in zip(ts, ts[1:])):
        raise ValueError("ts must be nonnegative and strictly ascending")
    if abs(I_functional(u) - 1.0) > 1e-8:
        raise ValueError("fiber profiles are taken from a manifold base point")
    rows = []
    for t in ts:
        if t == 0.0:
            rows.append((0.0, 0.0, float("nan")))
            continue
        dt = rel_step * t
        phi = Phi(scale(u, t), spec)
        dphi = (Phi(scale(u, t + dt), spec) - Phi(scale(u, t - dt), spec)) / (2.0 * dt)
        rows.append((t, phi, dphi))
    return rows
