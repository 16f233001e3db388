import math

import numpy as np
import pytest
from scipy.special import erf

from fcs import ProblemParams, make_grid
from fcs.operators import (
    apply_A,
    apply_B,
    coulomb_energy,
    dual_norm,
    frac_form,
    frac_seminorm_sq,
    gaussian_riesz_profile,
    precondition,
    quadrilinear_T,
    riesz_potential,
)
from fcs.params import compute_exponents, riesz_constant

from conftest import smooth_random_field


@pytest.fixture(scope="module")
def grid256(pstar):
    return make_grid(pstar, 20.0, 256)


@pytest.fixture(scope="module")
def grid512(pstar):
    return make_grid(pstar, 20.0, 512)


# ---------------------------------------------------------------------------
# fractional Laplacian quadratic form
# ---------------------------------------------------------------------------

def test_seminorm_zero_and_positivity(grid256):
    assert frac_seminorm_sq(grid256.zero_field()) == 0.0
    rng = np.random.default_rng(1)
    u = smooth_random_field(grid256, rng)
    assert frac_seminorm_sq(u) > 0.0


def test_seminorm_homogeneity(grid256):
    rng = np.random.default_rng(2)
    u = smooth_random_field(grid256, rng)
    assert math.isclose(
        frac_seminorm_sq(grid256.field(3.0 * u.values)),
        9.0 * frac_seminorm_sq(u),
        rel_tol=1e-12,
    )


def test_seminorm_s_to_one_limit():
    # s -> 1: the seminorm approaches the squared gradient norm of the
    # Gaussian, 3 pi^(3/2) / (2 sqrt(2)), evaluated independently from
    # int 4 pi r^2 |u'(r)|^2 dr = 16 pi int r^4 exp(-2 r^2) dr
    p = ProblemParams(3, 0.999, 2.0)
    g = make_grid(p, 20.0, 512)
    u = g.field(np.exp(-g.r ** 2))
    grad_sq = 3.0 * math.pi ** 1.5 / (2.0 * math.sqrt(2.0))
    assert abs(frac_seminorm_sq(u) - grad_sq) <= 1e-2 * grad_sq


def test_seminorm_gaussian_closed_form(pstar):
    # independent oracle: (2 pi)^-3 * 4 pi * pi^3 int k^(2s+2) e^(-k^2/2) dk
    from scipy.integrate import quad

    g = make_grid(pstar, 20.0, 512)
    u = g.field(np.exp(-g.r ** 2))
    s = pstar.s
    exact = (
        (2 * math.pi) ** -3
        * 4
        * math.pi
        * math.pi ** 3
        * quad(lambda k: k ** (2 * s + 2) * math.exp(-(k ** 2) / 2.0), 0.0, 60.0)[0]
    )
    assert abs(frac_seminorm_sq(u) - exact) <= 1e-5 * exact


# ---------------------------------------------------------------------------
# Riesz potential
# ---------------------------------------------------------------------------

def test_riesz_newtonian_gaussian(grid512):
    # alpha = 2, N = 3: (I_2 * exp(-r^2))(r) = (sqrt(pi)/4) erf(r)/r
    u = grid512.field(np.exp(-grid512.r ** 2))
    pot = riesz_potential(u)
    exact = math.sqrt(math.pi) / 4.0 * erf(grid512.r) / grid512.r
    for target in (0.1, 1.0, 5.0):
        i = int(np.argmin(np.abs(grid512.r - target)))
        assert abs(pot.values[i] - exact[i]) <= 1e-5 * abs(exact[i])
    # the profile extrapolates to 1/2 at the origin
    v = pot.values
    assert abs(3 * v[0] - 3 * v[1] + v[2] - 0.5) < 1e-4


def test_riesz_far_field_mass(grid256):
    # r (I_2 * v)(r) -> (1/4pi) * total mass = pi^(1/2)/4 for the Gaussian
    u = grid256.field(np.exp(-grid256.r ** 2))
    pot = riesz_potential(u)
    target = math.sqrt(math.pi) / 4.0
    tail = grid256.r[-4]
    assert abs(grid256.r[-4] * pot.values[-4] - target) <= 1e-3 * target


def test_riesz_zero(grid256):
    assert np.all(riesz_potential(grid256.zero_field()).values == 0.0)


def test_riesz_gaussian_profile_matches_mpmath():
    mp = pytest.importorskip("mpmath")
    mp.mp.dps = 30
    r = np.array([0.1, 1.0, 5.0, 12.0])
    for N, alpha in [(3, 2.0), (3, 1.5), (3, 2.5), (2, 1.5)]:
        mine = gaussian_riesz_profile(N, alpha, r)
        pref = mp.gamma((N - alpha) / 2) / (mp.mpf(2) ** alpha * mp.gamma(mp.mpf(N) / 2))
        exact = [float(pref * mp.hyp1f1((N - alpha) / 2, mp.mpf(N) / 2, -x * x)) for x in r]
        assert np.max(np.abs(mine - exact) / np.abs(exact)) < 1e-13


@pytest.mark.parametrize("alpha", [1.5, 2.5])
def test_riesz_kernel_other_orders(grid512, alpha):
    u = grid512.field(np.exp(-grid512.r ** 2))
    pot = riesz_potential(u, alpha=alpha)
    exact = gaussian_riesz_profile(3, alpha, grid512.r)
    sel = grid512.r < 10.0
    rel = np.abs(pot.values[sel] - exact[sel]) / np.abs(exact[sel])
    assert np.max(rel) < 1e-5


def test_riesz_spectral_vs_kernel(grid256):
    # the convention cross-check: both paths agree on the Gaussian family
    w = grid256.w
    for gam in (0.5, 1.0, 2.0):
        u = grid256.field(np.exp(-gam * grid256.r ** 2))
        pk = riesz_potential(u, method="kernel").values
        ps = riesz_potential(u, method="spectral").values
        rel = math.sqrt(np.sum(w * (pk - ps) ** 2) / np.sum(w * pk ** 2))
        assert rel < 1e-3


def test_riesz_warns_without_decay(grid256):
    wide = grid256.field(np.exp(-((grid256.r / 15.0) ** 2)))
    with pytest.warns(RuntimeWarning, match="boundary-decay"):
        riesz_potential(wide)


def test_riesz_rejects_alpha_at_one(grid256):
    u = grid256.field(np.exp(-grid256.r ** 2))
    with pytest.raises(ValueError, match="unsupported"):
        riesz_potential(u, alpha=1.0)


def test_riesz_generic_dimension(grid_n2):
    u = grid_n2.field(np.exp(-grid_n2.r ** 2))
    pot = riesz_potential(u).values
    exact = gaussian_riesz_profile(2, 1.5, grid_n2.r)
    w = grid_n2.w
    rel = math.sqrt(np.sum(w * (pot - exact) ** 2) / np.sum(w * exact ** 2))
    assert rel < 1e-3
    ps = riesz_potential(u, method="spectral").values
    rel2 = math.sqrt(np.sum(w * (pot - ps) ** 2) / np.sum(w * pot ** 2))
    assert rel2 < 1e-3


# ---------------------------------------------------------------------------
# Coulomb energy and quadrilinear form
# ---------------------------------------------------------------------------

def test_coulomb_zero_and_positive(grid256):
    assert coulomb_energy(grid256.zero_field()) == 0.0
    rng = np.random.default_rng(12)
    u = smooth_random_field(grid256, rng)
    assert coulomb_energy(u) > 0.0


def test_coulomb_quartic_homogeneity(grid256):
    rng = np.random.default_rng(4)
    u = smooth_random_field(grid256, rng)
    assert math.isclose(
        coulomb_energy(grid256.field(1.5 * u.values)),
        1.5 ** 4 * coulomb_energy(u),
        rel_tol=1e-12,
    )


def test_coulomb_dual_path_oracle(grid512):
    # D(u) via the kernel matrix vs the closed-form potential of u^2:
    # u = exp(-r^2) so u^2 = exp(-2 r^2) has a known Riesz potential
    u = grid512.field(np.exp(-grid512.r ** 2))
    d_kernel = coulomb_energy(u)
    pot_exact = gaussian_riesz_profile(3, 2.0, grid512.r, gamma_width=2.0)
    c_a = riesz_constant(3, 2.0)
    d_exact = float(np.sum(grid512.w * u.values ** 2 * pot_exact)) / c_a
    assert abs(d_kernel - d_exact) <= 1e-6 * d_exact


def test_quadrilinear_definition(grid256):
    rng = np.random.default_rng(8)
    u = smooth_random_field(grid256, rng)
    c_a = riesz_constant(3, 2.0)
    assert math.isclose(quadrilinear_T(u, u, u, u), c_a * coulomb_energy(u), rel_tol=1e-12)
    z = grid256.zero_field()
    v, w_, x = (smooth_random_field(grid256, rng) for _ in range(3))
    assert quadrilinear_T(z, v, w_, x) == 0.0


def test_quadrilinear_bilinearity_and_symmetry(grid256):
    rng = np.random.default_rng(15)
    u, v, w_, z, y = (smooth_random_field(grid256, rng) for _ in range(5))
    a, b = 0.7, -1.3
    combo = grid256.field(a * u.values + b * y.values)
    lhs = quadrilinear_T(combo, v, w_, z)
    rhs = a * quadrilinear_T(u, v, w_, z) + b * quadrilinear_T(y, v, w_, z)
    assert abs(lhs - rhs) <= 1e-12 * max(abs(lhs), 1.0)
    assert math.isclose(quadrilinear_T(u, v, w_, z), quadrilinear_T(v, u, w_, z), rel_tol=1e-12)
    assert math.isclose(quadrilinear_T(u, v, w_, z), quadrilinear_T(u, v, z, w_), rel_tol=1e-12)
    assert math.isclose(quadrilinear_T(u, v, w_, z), quadrilinear_T(w_, z, u, v), rel_tol=1e-10)


# ---------------------------------------------------------------------------
# the scaled operators
# ---------------------------------------------------------------------------

def test_operator_positivity_on_random_fields(grid256):
    rng = np.random.default_rng(42)
    for _ in range(100):
        u = smooth_random_field(grid256, rng)
        if np.max(np.abs(u.values)) == 0.0:
            continue
        assert apply_A(u).pair(u) > 0.0
        assert apply_B(u).pair(u) > 0.0


def test_operators_vanish_at_zero(grid256):
    z = grid256.zero_field()
    assert np.all(apply_A(z).values == 0.0)
    assert np.all(apply_B(z).values == 0.0)


def test_operator_oddness(grid256):
    rng = np.random.default_rng(6)
    u = smooth_random_field(grid256, rng)
    assert np.array_equal(apply_A(-u).values, -apply_A(u).values)
    assert np.array_equal(apply_B(-u).values, -apply_B(u).values)


def test_weak_strong_consistency(grid256):
    # <A(u), v> must reproduce the bilinear assembly:
    # frac_form(u, v) + T(u, v, u, u)
    rng = np.random.default_rng(19)
    u, v = smooth_random_field(grid256, rng), smooth_random_field(grid256, rng)
    weak = frac_form(u, v) + quadrilinear_T(u, v, u, u)
    strong = apply_A(u).pair(v)
    assert abs(weak - strong) <= 1e-6 * max(abs(weak), 1e-30)


@pytest.mark.parametrize("t", [0.5, 2.0])
def test_scaled_operator_law(grid256, t):
    # A(u_t) v_t = t^sigma A(u) v on analytically dilated Gaussians
    exps = compute_exponents(grid256.params)
    th, sig = exps.theta, exps.sigma
    r = grid256.r
    u = grid256.field(np.exp(-r ** 2))
    v = grid256.field(r * np.exp(-0.7 * r ** 2))
    ut = grid256.field(t ** th * np.exp(-((t * r) ** 2)))
    vt = grid256.field(t ** th * (t * r) * np.exp(-0.7 * (t * r) ** 2))
    for op in (apply_A, apply_B):
        lhs = op(ut).pair(vt)
        rhs = t ** sig * op(u).pair(v)
        assert abs(lhs - rhs) <= 1e-4 * max(abs(rhs), 1e-30)


# ---------------------------------------------------------------------------
# dual norm and preconditioner
# ---------------------------------------------------------------------------

def test_dual_norm_formula(grid256):
    from fcs.grid import forward_transform

    rng = np.random.default_rng(23)
    u = smooth_random_field(grid256, rng)
    b = forward_transform(u).coefficients
    expected = math.sqrt(np.sum(b ** 2 / (1.0 + grid256.k ** (2 * grid256.params.s))))
    assert math.isclose(dual_norm(u), expected, rel_tol=1e-12)


def test_preconditioner_is_multiplier_inverse(grid256):
    from fcs.grid import forward_transform

    rng = np.random.default_rng(31)
    u = smooth_random_field(grid256, rng)
    pre = precondition(u)
    b_pre = forward_transform(pre).coefficients
    b = forward_transform(u).coefficients
    assert np.allclose(b_pre * (1.0 + grid256.k ** (2 * grid256.params.s)), b, rtol=1e-10)
