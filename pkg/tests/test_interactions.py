import math

import numpy as np
import pytest

from bistrich.interactions import (
    EstimateSpec,
    closed_mass_conjugate,
    closed_mass_plain,
    compute_interaction,
    monte_carlo_mass_plain,
    quadrature_mass_conjugate,
    symmetrized_interaction,
)
from bistrich.oracle import oracle_interaction
from bistrich.special_functions import ot_general_constant, sphere_area
from bistrich.spectral import GaussianDatum, Geometry, GridField, l2_mass, render_gaussian


@pytest.fixture(scope="module")
def gauss_1d():
    geo = Geometry(1, 1024, 40.0)
    return render_gaussian(GaussianDatum(-1.0, [0.0]), geo)


@pytest.fixture(scope="module")
def gauss_2d():
    geo = Geometry(2, 128, 16.0)
    return render_gaussian(GaussianDatum(-1.0, [0.0, 0.0]), geo)


def test_estimate_spec_validation():
    spec = EstimateSpec("conjugate", 2, 0.25)
    assert spec.kernel_power == pytest.approx(1.0)
    assert spec.threshold == pytest.approx(-0.25)
    with pytest.raises(ValueError):
        EstimateSpec("conjugate", 2, -0.3)
    with pytest.raises(ValueError):
        EstimateSpec("plain", 2, -0.6)
    with pytest.raises(ValueError):
        EstimateSpec("weird", 2, 0.0)


def test_spec_constants_match_formulas():
    assert EstimateSpec("conjugate", 2, 0.25).constant == pytest.approx(
        ot_general_constant(2, 0.25), rel=1e-14
    )
    # plain-family constant carries the 2^{-2 beta} factor
    c2 = 2.0**-6 * math.pi**-4
    assert EstimateSpec("plain", 2, 0.5).constant == pytest.approx(0.5 * c2, rel=1e-13)
    # d = 1 value forced by the symmetrized identity: 2^{-2 beta} / (4 pi^2)
    assert EstimateSpec("plain", 1, 0.5).constant == pytest.approx(
        0.5 / (4.0 * math.pi**2), rel=1e-13
    )


def test_interaction_p0_is_plancherel_product(gauss_1d):
    val = compute_interaction(gauss_1d, gauss_1d, 0.0)
    m = l2_mass(gauss_1d)
    assert val == pytest.approx((2.0 * math.pi) ** 2 * m * m, rel=1e-10)


def test_interaction_p1_matches_oracle_1d_fine_grid():
    geo = Geometry(1, 8192, 113.0)
    g = render_gaussian(GaussianDatum(-1.0, [0.0]), geo)
    val = compute_interaction(g, g, 1.0)
    exact = oracle_interaction(2.0, [0.0], 1.0, 1)
    assert val == pytest.approx(exact, rel=1e-8)


def test_interaction_p2_radial_cross_term(gauss_2d):
    # |zeta - eta|^2 kernel: radial data kill the cross term, leaving
    # 2 (2 pi)^{2d} ||u||^2 |u|_{H1}^2
    from bistrich.spectral import fractional_laplacian, l2_mass as mass

    val = compute_interaction(gauss_2d, gauss_2d, 2.0)
    h1 = mass(fractional_laplacian(gauss_2d, 0.5))
    expected = 2.0 * (2.0 * math.pi) ** 4 * mass(gauss_2d) * h1
    assert val == pytest.approx(expected, rel=1e-9)


def test_interaction_negative_power():
    # p in (-1, 0): integrable singular kernel, lattice-corrected diagonal
    geo = Geometry(1, 8192, 113.0)
    g = render_gaussian(GaussianDatum(-1.0, [0.0]), geo)
    val = compute_interaction(g, g, -0.5)
    exact = oracle_interaction(2.0, [0.0], -0.5, 1)
    assert val == pytest.approx(exact, rel=2e-6)


def test_interaction_symmetry_and_positivity(gauss_1d):
    geo = gauss_1d.geometry
    rng = np.random.default_rng(3)
    other = GridField(
        geo,
        "fourier",
        (rng.standard_normal(geo.n) + 1j * rng.standard_normal(geo.n))
        * np.exp(-geo.axis_fourier() ** 2),
    )
    a = compute_interaction(gauss_1d, other, 0.7)
    b = compute_interaction(other, gauss_1d, 0.7)
    assert a == b  # bitwise, operand order is normalized
    assert a > 0.0
    zero = GridField(geo, "fourier", np.zeros(geo.n))
    assert compute_interaction(gauss_1d, zero, 0.7) == 0.0


def test_interaction_dilation_scaling():
    # f_hat(./s) rescales the integral by s^{2d + p}
    geo = Geometry(1, 2048, 60.0)
    s = 2.0
    base = render_gaussian(GaussianDatum(-1.0, [0.0]), geo)
    dilated = render_gaussian(GaussianDatum(-1.0 / s**2, [0.0]), geo)
    p = 0.7
    ratio = compute_interaction(dilated, dilated, p) / compute_interaction(base, base, p)
    assert ratio == pytest.approx(s ** (2 * 1 + p), rel=1e-6)


def test_interaction_rejects_bad_inputs(gauss_1d, gauss_2d):
    with pytest.raises(ValueError):
        compute_interaction(gauss_1d, gauss_1d, -1.0)
    with pytest.raises(ValueError):
        compute_interaction(gauss_1d, gauss_2d, 0.0)


def test_symmetrized_interaction_reduces_for_disjoint_supports():
    geo = Geometry(1, 512, 30.0)
    ax = geo.axis_fourier()
    u = GridField(geo, "fourier", np.exp(-((ax - 2.0) / 0.3) ** 2 / 2) + 0j)
    v = GridField(geo, "fourier", np.exp(-((ax + 2.0) / 0.3) ** 2 / 2) + 0j)
    p = 1.0
    sym = symmetrized_interaction(u, v, p)
    plain = compute_interaction(u, v, p)
    assert sym == pytest.approx(2.0 * plain, rel=1e-10)


# -- mass lemmas -------------------------------------------------------------

def test_closed_mass_conjugate_value():
    # d=2, sigma=1/2, |z1+z2|=1: sqrt(pi) Gamma(3/2) / (2 Gamma(2))
    val = closed_mass_conjugate([1.0, 0.0], [0.0, 0.0], 0.5, 2)
    expected = math.sqrt(math.pi) * math.gamma(1.5) / (2.0 * math.gamma(2.0))
    assert val == pytest.approx(expected, rel=1e-13)


def test_closed_mass_homogeneity():
    z1, z2 = np.array([0.3, -0.2]), np.array([0.5, 0.9])
    sigma = 0.4
    a = closed_mass_conjugate(z1, z2, sigma, 2)
    b = closed_mass_conjugate(2 * z1, 2 * z2, sigma, 2)
    assert b / a == pytest.approx(2.0 ** (4 * sigma + 2 - 2), rel=1e-12)
    beta = 0.3
    c = closed_mass_plain(z1, z2, beta, 2)
    d = closed_mass_plain(2 * z1, 2 * z2, beta, 2)
    assert d / c == pytest.approx(2.0 ** (4 * beta + 2 - 2), rel=1e-12)


def test_quadrature_mass_matches_closed():
    rng = np.random.default_rng(7)
    for d in (2, 3):
        for sigma in (0.0, 0.25, 0.5):
            for _ in range(5):
                z1 = rng.standard_normal(d)
                z2 = rng.standard_normal(d)
                closed = closed_mass_conjugate(z1, z2, sigma, d)
                quadr = quadrature_mass_conjugate(z1, z2, sigma, d)
                assert quadr == pytest.approx(closed, rel=1e-6)


def test_quadrature_mass_hemisphere_case():
    # exponent 0 integrand: half the hemisphere area = |S^{d-1}| / 4
    for d in (2, 3):
        sigma = (2.0 - d) / 4.0
        val = quadrature_mass_conjugate([1.0] + [0.0] * (d - 1), [0.0] * d, sigma, d)
        assert val == pytest.approx(sphere_area(d) / 4.0, rel=1e-10)


def test_quadrature_mass_rotation_invariance():
    rng = np.random.default_rng(11)
    z1, z2 = rng.standard_normal(2), rng.standard_normal(2)
    theta = 0.77
    rot = np.array([[math.cos(theta), -math.sin(theta)], [math.sin(theta), math.cos(theta)]])
    a = quadrature_mass_conjugate(z1, z2, 0.3, 2)
    b = quadrature_mass_conjugate(rot @ z1, rot @ z2, 0.3, 2)
    assert b == pytest.approx(a, rel=1e-10)


def test_closed_mass_plain_value():
    # d=2, beta=0, |z1-z2|=2: pi/2
    val = closed_mass_plain([1.0, 0.0], [-1.0, 0.0], 0.0, 2)
    assert val == pytest.approx(math.pi / 2.0, rel=1e-13)


def test_monte_carlo_mass_plain():
    rng = np.random.default_rng(5)
    for d in (2, 3):
        z1, z2 = rng.standard_normal(d), rng.standard_normal(d) + 1.0
        closed = closed_mass_plain(z1, z2, 0.25, d)
        mc = monte_carlo_mass_plain(z1, z2, 0.25, d, n_samples=400_000, seed=9)
        assert mc == pytest.approx(closed, rel=5e-3)


def test_monte_carlo_mass_determinism():
    z1, z2 = [1.0, 0.2], [-0.5, 0.3]
    a = monte_carlo_mass_plain(z1, z2, 0.5, 2, n_samples=10_000, seed=4)
    b = monte_carlo_mass_plain(z1, z2, 0.5, 2, n_samples=10_000, seed=4)
    assert a == b


def test_mass_degenerate_inputs():
    with pytest.raises(ValueError):
        closed_mass_plain([1.0, 0.0], [1.0, 0.0], -0.2, 2)
    with pytest.raises(ValueError):
        monte_carlo_mass_plain([1.0, 0.0], [1.0, 0.0], 0.5, 2)
    with pytest.raises(ValueError):
        closed_mass_conjugate([1.0, 0.0], [-1.0, 0.0], -0.2, 2)


def test_duplication_link_between_masses():
    # at sigma = beta = 0 the two mass constants coincide through the
    # Gamma duplication formula, for every dimension
    r = 1.7
    for d in (2, 3):
        conj = closed_mass_conjugate([r] + [0.0] * (d - 1), [0.0] * d, 0.0, d)
        plain = closed_mass_plain([r] + [0.0] * (d - 1), [0.0] * d, 0.0, d)
        assert conj == pytest.approx(plain, rel=1e-12)
