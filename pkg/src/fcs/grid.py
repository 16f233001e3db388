"""Radial grid, quadrature, fields, and the spectral transform.

The grid is uniform on (0, R) with nodes r_j = j R/(M+1); quadrature weights
w_j = omega_{N-1} r_j^{N-1} h turn node sums into N-dimensional radial
integrals.  Fields vanish at r = R by construction of the transform basis,
which is consistent with the compactly-decaying states everything here
targets.

Two transform engines diagonalize the fractional Laplacian:

* N = 3: the radial Fourier transform reduces exactly to a type-I discrete
  sine transform of r u(r); the discrete map is unitary for the quadrature
  inner product, so the Plancherel identity holds to rounding.
* other N: a dense Fourier-Bessel matrix.  Samples of the Dirichlet modes
  r^(1-N/2) J_{N/2-1}(k_m r) are orthonormalized against the discrete inner
  product (Loewdin), which again makes Plancherel exact by construction; the
  mode wavenumbers keep their continuum values j_{N/2-1,m}/R.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field

import numpy as np
from scipy.fft import dst
from scipy.optimize import brentq
from scipy.special import jn_zeros, jv

from .params import ProblemParams, sphere_area

__all__ = [
    "RadialGrid",
    "Field",
    "SpectralField",
    "make_grid",
    "forward_transform",
    "inverse_transform",
    "lp_norm",
]

DECAY_FRACTION = 0.8      # tail window used for the boundary-decay flag
DECAY_RATIO = 1e-8


class GridMismatchError(ValueError):
    """Operands live on different grids."""


@dataclass(eq=False)
class RadialGrid:
    """Uniform radial quadrature grid on (0, R) for a parameter triple."""

    params: ProblemParams
    R: float
    M: int
    h: float = dc_field(init=False)
    r: np.ndarray = dc_field(init=False, repr=False)
    w: np.ndarray = dc_field(init=False, repr=False)
    _caches: dict = dc_field(init=False, repr=False, default_factory=dict)

    def __post_init__(self) -> None:
        if not math.isfinite(self.R) or self.R <= 0.0:
            raise ValueError(f"cutoff radius R must be finite and positive, got {self.R!r}")
        if not isinstance(self.M, int) or self.M < 16:
            raise ValueError(f"interior node count M must be an integer >= 16, got {self.M!r}")
        self.h = self.R / (self.M + 1)
        self.r = self.h * np.arange(1, self.M + 1, dtype=float)
        self.w = sphere_area(self.params.N) * self.r ** (self.params.N - 1) * self.h

    def transform(self) -> "_TransformEngine":
        eng = self._caches.get("transform")
        if eng is None:
            if self.params.N == 3:
                eng = _SineEngine(self)
            else:
                eng = _BesselEngine(self)
            self._caches["transform"] = eng
        return eng

    @property
    def k(self) -> np.ndarray:
        """Wavenumbers of the transform basis."""
        return self.transform().k

    def same_as(self, other: "RadialGrid") -> bool:
        return (
            self.params == other.params
            and self.R == other.R
            and self.M == other.M
        )

    def field(self, values: np.ndarray) -> "Field":
        return Field(self, np.asarray(values, dtype=float))

    def zero_field(self) -> "Field":
        return Field(self, np.zeros(self.M))

    def summary(self) -> dict:
        p = self.params
        return {"N": p.N, "s": p.s, "alpha": p.alpha, "R": self.R, "M": self.M}


def make_grid(params: ProblemParams, R: float, M: int) -> RadialGrid:
    """Build the quadrature grid; rejects non-finite R and M < 16."""
    return RadialGrid(params, R, M)


@dataclass(eq=False)
class Field:
    """A real radial function sampled on the grid nodes."""

    grid: RadialGrid
    values: np.ndarray

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.grid.M,):
            raise ValueError(
                f"field has {self.values.shape} values for an M={self.grid.M} grid"
            )
        if not np.all(np.isfinite(self.values)):
            raise ValueError("field values must be finite")

    @property
    def boundary_decay(self) -> bool:
        """True when the tail beyond 0.8 R is negligible relative to the peak.

        Scaling with t > 1 reads samples beyond the cutoff and requires this.
        """
        peak = float(np.max(np.abs(self.values)))
        if peak == 0.0:
            return True
        tail = self.grid.r > DECAY_FRACTION * self.grid.R
        return float(np.max(np.abs(self.values[tail]))) < DECAY_RATIO * peak

    def copy(self) -> "Field":
        return Field(self.grid, self.values.copy())

    def __neg__(self) -> "Field":
        return Field(self.grid, -self.values)


def _check_same_grid(a, b) -> None:
    if not a.grid.same_as(b.grid):
        raise GridMismatchError("fields live on different grids")


@dataclass(eq=False)
class SpectralField:
    """Transform coefficients of a field at the grid's wavenumbers.

    Coefficients are stored in the Plancherel normalization: the sum of
    squared coefficients equals the quadrature L^2 norm of the field exactly.
    For N = 3 the physical radial Fourier transform is recovered by
    ``physical()``.
    """

    grid: RadialGrid
    coefficients: np.ndarray

    @property
    def k(self) -> np.ndarray:
        return self.grid.k

    def physical(self) -> np.ndarray:
        """Radial Fourier transform values (N = 3 sine layout only)."""
        if self.grid.params.N != 3:
            raise ValueError("physical Fourier normalization is defined on the N=3 path")
        return self.coefficients * math.sqrt(2.0 * math.pi * self.grid.R) / self.k


class _TransformEngine:
    k: np.ndarray

    def forward(self, values: np.ndarray) -> np.ndarray:  # pragma: no cover
        raise NotImplementedError

    def inverse(self, coeffs: np.ndarray) -> np.ndarray:  # pragma: no cover
        raise NotImplementedError


class _SineEngine(_TransformEngine):
    """Exact DST-I pair for N = 3: u <-> sqrt(4 pi h) DST1(r u)."""

    def __init__(self, grid: RadialGrid):
        self.grid = grid
        self.k = math.pi / grid.R * np.arange(1, grid.M + 1, dtype=float)
        self._c = math.sqrt(4.0 * math.pi * grid.h)

    def forward(self, values: np.ndarray) -> np.ndarray:
        return self._c * dst(self.grid.r * values, type=1, norm="ortho")

    def inverse(self, coeffs: np.ndarray) -> np.ndarray:
        return dst(coeffs, type=1, norm="ortho") / (self._c * self.grid.r)


def _bessel_zeros(nu: float, count: int) -> np.ndarray:
    """First ``count`` positive zeros of J_nu, any real order nu >= 0."""
    if float(nu).is_integer():
        return jn_zeros(int(nu), count)
    # McMahon asymptotic guesses bracketed and refined; adequate for nu < ~50.
    zeros = np.empty(count)
    guess = lambda m: (m + 0.5 * nu - 0.25) * math.pi
    lo = max(guess(1) - 0.5 * math.pi, 1e-6)
    for m in range(1, count + 1):
        hi = guess(m) + 0.5 * math.pi
        # widen until a sign change is bracketed
        while jv(nu, lo) * jv(nu, hi) > 0:
            hi += 0.25 * math.pi
        zeros[m - 1] = brentq(lambda x: jv(nu, x), lo, hi, xtol=1e-13)
        lo = zeros[m - 1] + 1e-6
    return zeros


class _BesselEngine(_TransformEngine):
    """Dense Fourier-Bessel transform for general N, discretely unitary."""

    def __init__(self, grid: RadialGrid):
        self.grid = grid
        N = grid.params.N
        nu = N / 2.0 - 1.0
        z = _bessel_zeros(nu, grid.M)
        self.k = z / grid.R
        # continuum-normalized Dirichlet modes sampled on the nodes
        norm = np.sqrt(sphere_area(N) * grid.R ** 2 / 2.0) * np.abs(jv(nu + 1.0, z))
        phi = (
            grid.r[:, None] ** (-nu)
            * jv(nu, self.k[None, :] * grid.r[:, None])
            / norm[None, :]
        )
        B = phi * np.sqrt(grid.w)[:, None]
        gram = B.T @ B
        evals, evecs = np.linalg.eigh(gram)
        if evals.min() < 1e-8:
            raise ValueError(
                f"Fourier-Bessel basis is numerically rank-deficient on this grid "
                f"(min Gram eigenvalue {evals.min():.2e}); increase M"
            )
        self._Q = B @ (evecs * evals ** -0.5) @ evecs.T
        self._sqrt_w = np.sqrt(grid.w)

    def forward(self, values: np.ndarray) -> np.ndarray:
        return self._Q.T @ (self._sqrt_w * values)

    def inverse(self, coeffs: np.ndarray) -> np.ndarray:
        return (self._Q @ coeffs) / self._sqrt_w


def forward_transform(u: Field) -> SpectralField:
    """Expand a field over the transform basis (Plancherel normalization)."""
    return SpectralField(u.grid, u.grid.transform().forward(u.values))


def inverse_transform(uhat: SpectralField) -> Field:
    """Invert :func:`forward_transform`; the round trip is exact to rounding."""
    return Field(uhat.grid, uhat.grid.transform().inverse(uhat.coefficients))


def lp_norm(u: Field, p: float) -> float:
    """L^p norm over R^N of the radial field (p = inf gives the max norm)."""
    if p != math.inf and (not math.isfinite(p) or p < 1.0):
        raise ValueError(f"p must be >= 1 or inf, got {p!r}")
    if p == math.inf:
        return float(np.max(np.abs(u.values))) if u.grid.M else 0.0
    return float(np.sum(u.grid.w * np.abs(u.values) ** p)) ** (1.0 / p)
