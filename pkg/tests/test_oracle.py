import math

import numpy as np
import pytest

from bistrich.interactions import EstimateSpec, compute_interaction
from bistrich.oracle import (
    oracle_deficit,
    oracle_interaction,
    oracle_lhs_conjugate,
    oracle_lhs_dispersive,
    oracle_lhs_dispersive_pair,
)
from bistrich.spectral import (
    GaussianDatum,
    Geometry,
    SpaceTimeGrid,
    l2_mass,
    lhs_conjugate_norm,
    render_gaussian,
)


def test_oracle_interaction_p0():
    for d in (1, 2, 3):
        for alpha in (0.5, 2.0):
            assert oracle_interaction(alpha, [0.0] * d, 0.0, d) == pytest.approx(
                (math.pi / alpha) ** d, rel=1e-13
            )


def test_oracle_interaction_vs_grid():
    geo = Geometry(1, 2048, 60.0)
    g = render_gaussian(GaussianDatum(-1.0, [0.0]), geo)
    val = compute_interaction(g, g, 1.0)
    assert oracle_interaction(2.0, [0.0], 1.0, 1) == pytest.approx(val, rel=1e-6)


def test_oracle_interaction_monte_carlo():
    # independent statistical check of the closed reduction, with drift
    rng = np.random.default_rng(12)
    d, alpha, p = 2, 1.5, 0.8
    b = np.array([0.4, -0.2])
    n = 400_000
    z = rng.standard_normal((n, d)) / math.sqrt(alpha)      # ~ exp(-alpha|z|^2)... importance
    # direct importance sampling: draw zeta, eta ~ N(0, 1/(2 alpha)); the
    # target density exp(-alpha|z|^2 + 2 b.z) over the proposal is a weight
    cov = 1.0 / (2.0 * alpha)
    zeta = rng.normal(scale=math.sqrt(cov), size=(n, d))
    eta = rng.normal(scale=math.sqrt(cov), size=(n, d))
    norm = (2.0 * math.pi * cov) ** d   # proposal normalizations (both)
    w = np.exp(2.0 * zeta @ b) * np.exp(2.0 * eta @ b)
    vals = np.linalg.norm(zeta - eta, axis=1) ** p * w
    estimate = norm * float(np.mean(vals))
    exact = oracle_interaction(alpha, b, p, d)
    stderr = norm * float(np.std(vals) / math.sqrt(n))
    assert abs(estimate - exact) <= 4.0 * stderr
    assert abs(estimate - exact) / exact < 0.02


def test_oracle_interaction_domain():
    with pytest.raises(ValueError):
        oracle_interaction(-1.0, [0.0], 0.0, 1)
    with pytest.raises(ValueError):
        oracle_interaction(1.0, [0.0], -1.5, 1)


def test_lhs_conjugate_known_values():
    # d=2, sigma=0, a=-1: (1/4) ||u0||^4 with ||u0||^2 = (2 pi)^-2 pi/2
    val = oracle_lhs_conjugate(-1.0, [0.0, 0.0], 0.0, 2)
    mass = (2.0 * math.pi) ** -2 * math.pi / 2.0
    assert val == pytest.approx(0.25 * mass**2, rel=1e-12)
    # d=1, sigma=1/4: (1/2) ||u0||^4
    val1 = oracle_lhs_conjugate(-1.0, [0.0], 0.25, 1)
    mass1 = (2.0 * math.pi) ** -1 * math.sqrt(math.pi / 2.0)
    assert val1 == pytest.approx(0.5 * mass1**2, rel=1e-12)


def test_lhs_quadrature_vs_closed_routes():
    for d, s in ((2, 0.37), (3, -0.2), (1, 0.6)):
        if not s > (1 - d) / 4:
            continue
        q = oracle_lhs_conjugate(-0.7, [0.0] * d, s, d, time_quadrature=True)
        c = oracle_lhs_conjugate(-0.7, [0.0] * d, s, d, time_quadrature=False)
        assert q == pytest.approx(c, rel=1e-10)
    for d, b in ((2, 0.5), (3, 0.25)):
        q = oracle_lhs_dispersive(-0.7, [0.0] * d, b, d, time_quadrature=True)
        c = oracle_lhs_dispersive(-0.7, [0.0] * d, b, d, time_quadrature=False)
        assert q == pytest.approx(c, rel=1e-10)


def test_lhs_thresholds():
    with pytest.raises(ValueError):
        oracle_lhs_conjugate(-1.0, [0.0, 0.0], -0.25, 2)
    with pytest.raises(ValueError):
        oracle_lhs_dispersive(-1.0, [0.0, 0.0], -0.5, 2)
    with pytest.raises(ValueError):
        oracle_lhs_conjugate(1.0, [0.0], 0.25, 1)


def test_equality_across_lattice():
    # equality for every admissible gaussian: d in {2, 3}, both families,
    # the four named exponents, complex a and b
    for d in (2, 3):
        for family in ("conjugate", "plain"):
            for expo in ((2 - d) / 4, 0.0, (3 - d) / 4, (4 - d) / 4):
                thr = (1 - d) / 4 if family == "conjugate" else (1 - d) / 2
                if not expo > thr:
                    continue
                spec = EstimateSpec(family, d, expo)
                for a in (-0.5, -1.0 + 0.6j, -2.0):
                    for b in ([0.0] * d, [1.0] + [0.0] * (d - 1), [0.3 + 0.2j] * d):
                        res = oracle_deficit(spec, a, b, c=0.1 - 0.3j)
                        assert abs(res.relative_deficit) <= 1e-10


def test_corollary_strictness_for_real_drift():
    # the gradient-form corollary: deficit against
    # 2 (2 pi)^{2d} ||u0||^2 ||u0||_{H1}^2 vanishes iff Re(b) = 0
    d = 2
    sigma = (4.0 - d) / 4.0
    spec = EstimateSpec("conjugate", d, sigma)

    def corollary_deficit(b):
        a = -1.0
        lhs = oracle_lhs_conjugate(a, b, sigma, d)
        alpha = 2.0
        b_r = np.asarray(b, dtype=float)
        mass = oracle_interaction(alpha, b_r, 0.0, d) / (2.0 * math.pi) ** (2 * d)
        # closed H1 mass of exp(-|z|^2 + b.z): moments of the shifted gaussian
        mean_sq = b_r @ b_r / alpha**2
        var = d / (2.0 * alpha)
        h1 = mass * 0.0  # placeholder, computed below via moment identity
        # E|zeta|^2 under the normalized profile:
        e_sq = mean_sq + var
        h1 = mass * e_sq
        rhs = spec.constant * 2.0 * (2.0 * math.pi) ** (2 * d) * mass * h1
        return (rhs - lhs) / rhs

    assert abs(corollary_deficit([0.0, 0.0])) <= 1e-8
    assert corollary_deficit([1.0, 0.0]) > 1e-3


def test_dispersive_pair_reduces_to_equal():
    for d in (1, 2):
        for beta in (0.25, 0.5):
            pair = oracle_lhs_dispersive_pair(-1.0, [0.2] * d, [0.2] * d, beta, d)
            equal = oracle_lhs_dispersive(-1.0, [0.2] * d, beta, d)
            assert pair == pytest.approx(equal, rel=1e-11)


def test_dispersive_pair_below_equal_pair_bound():
    # separated pairs are strictly non-extremal: lhs < constant x I
    d, beta, k0 = 2, 0.5, 2.0
    spec = EstimateSpec("plain", d, beta)
    lhs = oracle_lhs_dispersive_pair(-1.0, [k0, 0.0], [-k0, 0.0], beta, d)
    # interaction for the pair by direct 2D Monte Carlo would cost; use the
    # grid instead
    geo = Geometry(2, 128, 24.0)
    u0 = render_gaussian(GaussianDatum(-1.0, [k0, 0.0]), geo)
    v0 = render_gaussian(GaussianDatum(-1.0, [-k0, 0.0]), geo)
    inter = compute_interaction(u0, v0, spec.kernel_power)
    assert lhs < spec.constant * inter


def test_scale_invariance_of_deficit_sign():
    # parabolic rescaling a -> a s^2 leaves the relative deficit at zero
    spec = EstimateSpec("conjugate", 2, 0.25)
    for s in (0.5, 2.0):
        res = oracle_deficit(spec, -1.0 * s**2, [0.0, 0.0])
        assert abs(res.relative_deficit) <= 1e-10


def test_oracle_vs_grid_lhs():
    geo = Geometry(1, 512, 90.0)
    u0 = render_gaussian(GaussianDatum(-1.0, [0.0]), geo)
    st = SpaceTimeGrid(geo, 1024, 10.0)
    spec = EstimateSpec("conjugate", 1, 0.5)
    grid_val = lhs_conjugate_norm(spec, u0, u0, st)
    assert grid_val == pytest.approx(oracle_lhs_conjugate(-1.0, [0.0], 0.5, 1), rel=1e-5)
