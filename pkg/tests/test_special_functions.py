import math

import numpy as np
import pytest

from bistrich.special_functions import (
    SharpConstant,
    carneiro_constant,
    check_duplication_consistency,
    log_gamma,
    ot_classical_constant,
    ot_general_constant,
    pv_constant,
    sphere_area,
)


def test_log_gamma_reference_points():
    assert log_gamma(0.5) == pytest.approx(math.log(math.sqrt(math.pi)), rel=1e-13)
    assert log_gamma(1.0) == 0.0
    assert log_gamma(5.0) == pytest.approx(math.log(24.0), rel=1e-13)


def test_log_gamma_domain():
    with pytest.raises(ValueError):
        log_gamma(0.0)
    with pytest.raises(ValueError):
        log_gamma(-2.5)


def test_ot_classical_values():
    assert ot_classical_constant(1) == pytest.approx(0.5, rel=1e-14)
    assert ot_classical_constant(2) == pytest.approx(0.25, rel=1e-14)
    assert ot_classical_constant(4) == pytest.approx(1.0 / (16.0 * math.pi), rel=1e-14)


def test_ot_general_special_values():
    # sigma = 0 in d = 2 is 2^-6 pi^-4 exactly
    assert ot_general_constant(2, 0.0) == pytest.approx(2.0**-6 * math.pi**-4, rel=1e-13)
    assert ot_general_constant(2, 0.0) == pytest.approx(1.604065e-4, rel=1e-5)
    # sigma = 1/4 in d = 2 equals 2^-5 pi^-5
    assert ot_general_constant(2, 0.25) == pytest.approx(2.0**-5 * math.pi**-5, rel=1e-13)


def test_ot_general_threshold():
    with pytest.raises(ValueError):
        ot_general_constant(2, -0.25)
    with pytest.raises(ValueError):
        ot_general_constant(3, -0.5)


def test_ot_general_blowup_at_threshold():
    d = 3
    thr = (1.0 - d) / 4.0
    near = ot_general_constant(d, thr + 1e-6)
    far = ot_general_constant(d, thr + 1e-2)
    assert near / far > 1e2


def test_carneiro_pv_values():
    assert carneiro_constant(2) == pytest.approx(2.0**-6 * math.pi**-4, rel=1e-13)
    assert pv_constant(2) == pytest.approx(2.0**-5 * math.pi**-5, rel=1e-13)
    assert pv_constant(3) == pytest.approx(2.0**-9 * math.pi**-7, rel=1e-13)
    for fn in (carneiro_constant, pv_constant):
        with pytest.raises(ValueError):
            fn(1)


def test_duplication_consistency():
    for d in range(2, 11):
        assert check_duplication_consistency(d) <= 1e-13


def test_case_list_relations():
    # the three named special cases of the one-parameter constant
    for d in range(2, 11):
        ot = ot_general_constant(d, (2.0 - d) / 4.0) * (2.0 * math.pi) ** (2 * d)
        assert ot == pytest.approx(ot_classical_constant(d), rel=1e-12)
        assert ot_general_constant(d, (3.0 - d) / 4.0) == pytest.approx(
            pv_constant(d), rel=1e-12
        )


def test_smoothness_in_sigma():
    # finite, positive, and continuous in sigma across the named lattice
    # (2-d)/4, 0, (3-d)/4, (4-d)/4 and the band around it
    for d in range(2, 11):
        lattice = [(2.0 - d) / 4.0, 0.0, (3.0 - d) / 4.0, (4.0 - d) / 4.0]
        for sigma in lattice:
            v = ot_general_constant(d, sigma)
            assert v > 0.0 and math.isfinite(v)
        lo = min(lattice)
        values = [
            ot_general_constant(d, float(s)) for s in np.linspace(lo, 1.0, 400)
        ]
        rel_jumps = np.abs(np.diff(np.log(values)))
        assert rel_jumps.max() < 0.25


def test_sphere_area():
    assert sphere_area(1) == pytest.approx(2.0, rel=1e-14)
    assert sphere_area(2) == pytest.approx(2.0 * math.pi, rel=1e-14)
    assert sphere_area(3) == pytest.approx(4.0 * math.pi, rel=1e-14)


def test_dimension_cap():
    with pytest.raises(ValueError):
        ot_classical_constant(65)


def test_sharp_constant_record_validation():
    SharpConstant("OT_general", 2, 0.0, ot_general_constant(2, 0.0))
    with pytest.raises(ValueError):
        SharpConstant("nonsense", 2, 0.0, 1.0)
    with pytest.raises(ValueError):
        SharpConstant("Carneiro", 2, 0.0, -1.0)
