import math

import numpy as np
import pytest

from bistrich.interactions import EstimateSpec
from bistrich.oracle import oracle_lhs_conjugate, oracle_lhs_dispersive
from bistrich.spectral import (
    GaussianDatum,
    Geometry,
    GridField,
    GridResolutionError,
    SpaceTimeGrid,
    field_to_csv,
    forward_transform,
    fractional_laplacian,
    inverse_transform,
    l2_mass,
    lhs_conjugate_norm,
    lhs_dispersive_norm,
    load_field,
    lq_spacetime_norm,
    propagate_heat,
    propagate_schrodinger,
    random_band_limited,
    random_band_pair,
    render_gaussian,
    save_field,
    to_fourier,
)


@pytest.fixture(scope="module")
def geo1():
    return Geometry(1, 512, 40.0)


@pytest.fixture(scope="module")
def gauss1(geo1):
    return render_gaussian(GaussianDatum(-1.0, [0.0]), geo1)


def test_transform_roundtrip(geo1):
    rng = np.random.default_rng(0)
    x = geo1.axis()
    f = GridField(geo1, "physical", (rng.standard_normal(512) + 1j * rng.standard_normal(512)) * np.exp(-x**2 / 9))
    back = inverse_transform(forward_transform(f))
    assert np.abs(back.samples - f.samples).max() <= 1e-12 * np.abs(f.samples).max()


def test_transform_phases_exact(geo1):
    # a centred Gaussian transforms to a real positive Gaussian: any phase
    # error in the shift bookkeeping would show immediately
    x = geo1.axis()
    f = GridField(geo1, "physical", np.exp(-x**2 / 2) + 0j)
    spec = forward_transform(f)
    expected = math.sqrt(2 * math.pi) * np.exp(-geo1.axis_fourier() ** 2 / 2)
    assert np.abs(spec.samples - expected).max() <= 1e-12


def test_plancherel_both_sides(geo1, gauss1):
    phys = inverse_transform(gauss1)
    assert l2_mass(phys) == pytest.approx(l2_mass(gauss1), rel=1e-12)


def test_geometry_validation():
    with pytest.raises(ValueError):
        Geometry(1, 100, 10.0)  # not a power of two
    with pytest.raises(ValueError):
        Geometry(4, 64, 10.0)
    with pytest.raises(ValueError):
        Geometry(1, 64, -1.0)


def test_render_gaussian_shapes():
    geo = Geometry(2, 64, 12.0)
    g = render_gaussian(GaussianDatum(-1.0, [2.0, 0.0]), geo)
    mesh = geo.fourier_mesh()
    mag = np.abs(g.samples)
    peak_idx = np.unravel_index(mag.argmax(), mag.shape)
    # |u0_hat| = exp(-|eta - e1|^2 + 1) peaks at eta = (1, 0)
    assert mesh[0][peak_idx] == pytest.approx(1.0, abs=geo.spacing_fourier)
    assert mesh[1][peak_idx] == pytest.approx(0.0, abs=geo.spacing_fourier)


def test_render_gaussian_radial_modulus():
    geo = Geometry(1, 256, 12.0)
    g = render_gaussian(GaussianDatum(-1.0, [1j]), geo)
    mag = np.abs(g.samples)
    assert np.abs(mag - np.exp(-geo.axis_fourier() ** 2)).max() <= 1e-14
    assert GaussianDatum(-1.0, [1j]).radial_modulus
    assert not GaussianDatum(-1.0, [1.0 + 1j]).radial_modulus


def test_render_gaussian_resolution_error():
    with pytest.raises(GridResolutionError):
        render_gaussian(GaussianDatum(-0.001, [0.0]), Geometry(1, 64, 4.0))


def test_gaussian_datum_validation():
    with pytest.raises(ValueError):
        GaussianDatum(1.0, [0.0])


def test_schrodinger_mass_conservation(gauss1):
    for t in (0.5, -2.0, 7.0):
        assert l2_mass(propagate_schrodinger(gauss1, t)) == pytest.approx(
            l2_mass(gauss1), rel=1e-14
        )
    ident = propagate_schrodinger(gauss1, 0.0)
    assert np.array_equal(ident.samples, gauss1.samples)


def test_schrodinger_matches_closed_form_evolution(geo1, gauss1):
    # closed complex-width evolution of the Gaussian datum at t = 1
    t = 1.0
    evolved = propagate_schrodinger(gauss1, t)
    phys = inverse_transform(evolved)
    x = geo1.axis()
    a = -1.0
    closed = (2 * math.pi) ** -1 * (math.pi / (1j * t - a)) ** 0.5 * np.exp(
        (1j * x) ** 2 / (4 * (1j * t - a))
    )
    assert np.abs(phys.samples - closed).max() <= 1e-10


def test_heat_flow_properties(gauss1):
    assert np.array_equal(propagate_heat(gauss1, 0.0).samples, gauss1.samples)
    masses = [l2_mass(propagate_heat(gauss1, r)) for r in (0.0, 0.1, 0.5, 2.0)]
    assert all(b <= a for a, b in zip(masses, masses[1:]))
    # heat of a Gaussian is the Gaussian with shifted width
    heated = propagate_heat(gauss1, 0.7)
    target = render_gaussian(GaussianDatum(-1.7, [0.0]), gauss1.geometry)
    assert np.abs(heated.samples - target.samples).max() <= 1e-13
    with pytest.raises(ValueError):
        propagate_heat(gauss1, -0.1)


def test_heat_schrodinger_commute(gauss1):
    a = propagate_heat(propagate_schrodinger(gauss1, 1.3), 0.4)
    b = propagate_schrodinger(propagate_heat(gauss1, 0.4), 1.3)
    assert np.abs(a.samples - b.samples).max() <= 1e-14


def test_fractional_laplacian(geo1, gauss1):
    assert fractional_laplacian(gauss1, 0.0) is gauss1
    # H1 mass of e^{-xi^2} datum: (2 pi)^-1 * (1/4) sqrt(pi/2), from the
    # Gaussian moment integral (independent quadrature cross-check below)
    h1 = l2_mass(fractional_laplacian(gauss1, 0.5))
    zeta = geo1.axis_fourier()
    quadrature = (2 * math.pi) ** -1 * np.trapezoid(zeta**2 * np.exp(-2 * zeta**2), zeta)
    closed = (2 * math.pi) ** -1 * 0.25 * math.sqrt(math.pi / 2.0)
    assert quadrature == pytest.approx(closed, rel=1e-12)
    assert h1 == pytest.approx(closed, rel=1e-12)


def test_fractional_laplacian_zero_mode_warning(geo1):
    f = GridField(geo1, "fourier", np.exp(-geo1.axis_fourier() ** 2))
    with pytest.warns(RuntimeWarning):
        out = fractional_laplacian(f, -0.25)
    assert out.samples[geo1.n // 2] == 0.0


def test_random_band_limited_properties():
    geo = Geometry(1, 1024, 80.0)
    u = random_band_limited(geo, band=3.0, loc_width=1.5, seed=5)
    assert l2_mass(u) == pytest.approx(1.0, rel=1e-12)
    mag = np.abs(u.samples)
    outside = mag[np.abs(geo.axis_fourier()) > 3.0]
    assert outside.max() <= 1e-12 * mag.max()
    again = random_band_limited(geo, band=3.0, loc_width=1.5, seed=5)
    assert np.array_equal(u.samples, again.samples)


def test_random_band_pair_disjoint():
    geo = Geometry(2, 64, 16.0)
    u, v = random_band_pair(geo, centre=3.0, band=1.2, loc_width=1.5, seed=1)
    overlap = (np.abs(u.samples) > 1e-10 * np.abs(u.samples).max()) & (
        np.abs(v.samples) > 1e-10 * np.abs(v.samples).max()
    )
    assert not overlap.any()


def test_serialization_roundtrip(tmp_path, gauss1):
    path = tmp_path / "field.bsgf"
    save_field(gauss1, path)
    back = load_field(path)
    assert back.side == gauss1.side
    assert back.geometry == gauss1.geometry
    assert np.array_equal(back.samples, gauss1.samples)
    csv_path = tmp_path / "field.csv"
    field_to_csv(gauss1, csv_path)
    rows = np.loadtxt(csv_path, delimiter=",", skiprows=1)
    assert rows.shape == (gauss1.n, 3)


def test_fields_are_immutable(gauss1):
    with pytest.raises(ValueError):
        gauss1.samples[0] = 1.0


# -- space-time norms ---------------------------------------------------------

def lhs_conj_exact(d, s, ar=-1.0, br=0.0):
    return (
        2.0 ** (-4 * d)
        * math.pi ** ((1 - 3 * d) / 2)
        * (-ar) ** ((2 - 3 * d - 4 * s) / 2)
        * math.gamma((4 * s + d - 1) / 2)
        / math.gamma(d / 2)
        * math.exp(-br**2 / ar)
    )


def test_lhs_conjugate_gaussian_d1():
    geo = Geometry(1, 512, 90.0)
    u0 = render_gaussian(GaussianDatum(-1.0, [0.0]), geo)
    st = SpaceTimeGrid(geo, 1024, 10.0)
    for sigma in (0.25, 0.5):
        spec = EstimateSpec("conjugate", 1, sigma)
        val = lhs_conjugate_norm(spec, u0, u0, st)
        assert val == pytest.approx(lhs_conj_exact(1, sigma), rel=3e-5)
    # sigma = 1/4 equals (1/2) ||u0||^4 (kernel power zero)
    spec = EstimateSpec("conjugate", 1, 0.25)
    val = lhs_conjugate_norm(spec, u0, u0, st)
    assert val == pytest.approx(0.5 * l2_mass(u0) ** 2, rel=1e-5)


def test_lhs_conjugate_sigma0_matches_l4():
    geo = Geometry(2, 128, 40.0)
    u0 = random_band_limited(geo, band=2.0, loc_width=1.5, seed=2)
    st = SpaceTimeGrid(geo, 128, 4.0)
    spec = EstimateSpec("conjugate", 2, 0.0)
    a = lhs_conjugate_norm(spec, u0, u0, st)
    b = lq_spacetime_norm(u0, 4.0, st)
    assert a == pytest.approx(b, rel=1e-10)


def test_lhs_dispersive_beta0_equals_sigma0():
    # |u vbar| = |u v| pointwise, so the two zero-exponent norms coincide
    geo = Geometry(2, 128, 40.0)
    u0 = random_band_limited(geo, band=2.0, loc_width=1.5, seed=4)
    v0 = random_band_limited(geo, band=2.0, loc_width=1.5, seed=5)
    st = SpaceTimeGrid(geo, 128, 4.0)
    a = lhs_conjugate_norm(EstimateSpec("conjugate", 2, 0.0), u0, v0, st)
    b = lhs_dispersive_norm(EstimateSpec("plain", 2, 0.0), u0, v0, st)
    assert b == pytest.approx(a, rel=1e-10)


def test_lhs_dispersive_gaussian_d2():
    geo = Geometry(2, 256, 56.0)
    u0 = render_gaussian(GaussianDatum(-1.0, [0.0, 0.0]), geo)
    st = SpaceTimeGrid(geo, 256, 6.0)
    spec = EstimateSpec("plain", 2, 0.5)
    val = lhs_dispersive_norm(spec, u0, u0, st)
    exact = oracle_lhs_dispersive(-1.0, [0.0, 0.0], 0.5, 2)
    assert val == pytest.approx(exact, rel=3e-3)


def test_lhs_dispersive_gaussian_d1_fold_path():
    geo = Geometry(1, 2048, 190.0)
    u0 = render_gaussian(GaussianDatum(-1.0, [0.0]), geo)
    st = SpaceTimeGrid(geo, 1024, 20.0)
    for beta in (0.25, 0.5, 0.75):
        spec = EstimateSpec("plain", 1, beta)
        val = lhs_dispersive_norm(spec, u0, u0, st)
        exact = oracle_lhs_dispersive(-1.0, [0.0], beta, 1)
        assert val == pytest.approx(exact, rel=2e-3)


def test_lq_norm_benchmark_values():
    geo = Geometry(1, 512, 90.0)
    u0 = render_gaussian(GaussianDatum(-1.0, [0.0]), geo)
    st = SpaceTimeGrid(geo, 1024, 10.0)
    ratio = lq_spacetime_norm(u0, 6.0, st) / l2_mass(u0) ** 3
    assert ratio == pytest.approx(12.0**-0.5, rel=1e-5)


def test_lhs_refinement_stability():
    # doubling n at fixed extent moves the reported norm by < 1e-6
    vals = []
    for n in (256, 512):
        geo = Geometry(1, n, 60.0)
        u0 = render_gaussian(GaussianDatum(-1.0, [0.0]), geo)
        st = SpaceTimeGrid(geo, 512, 8.0)
        vals.append(lhs_conjugate_norm(EstimateSpec("conjugate", 1, 0.5), u0, u0, st))
    assert abs(vals[1] - vals[0]) <= 1e-6 * abs(vals[1])


def test_conjugate_drift_precondition_warning():
    # drifting data that outruns the box must warn about wrap-around
    geo = Geometry(1, 256, 20.0)
    u0 = render_gaussian(GaussianDatum(-1.0, [6.0]), geo)
    st = SpaceTimeGrid(geo, 256, 8.0)
    with pytest.warns(RuntimeWarning):
        lhs_conjugate_norm(EstimateSpec("conjugate", 1, 0.5), u0, u0, st)
