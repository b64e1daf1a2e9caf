"""Numerical verification lab for sharp bilinear space-time estimates of the
free Schroedinger equation: sharp constants, Gaussian extremisers, heat-flow
monotonicity, and the Maxwell-Boltzmann critical-point structure.
"""

__version__ = "0.1.0"

from .special_functions import (
    SharpConstant,
    carneiro_constant,
    check_duplication_consistency,
    log_gamma,
    ot_classical_constant,
    ot_general_constant,
    pv_constant,
    sphere_area,
)
from .interactions import (
    EstimateSpec,
    closed_mass_conjugate,
    closed_mass_plain,
    compute_interaction,
    monte_carlo_mass_plain,
    quadrature_mass_conjugate,
)
from .spectral import (
    GaussianDatum,
    Geometry,
    GridField,
    GridResolutionError,
    SpaceTimeGrid,
    forward_transform,
    fractional_laplacian,
    inverse_transform,
    l2_mass,
    l2_norm,
    lhs_conjugate_norm,
    lhs_dispersive_norm,
    lq_spacetime_norm,
    propagate_heat,
    propagate_schrodinger,
    random_band_limited,
    random_band_pair,
    render_gaussian,
)

__all__ = [name for name in dir() if not name.startswith("_")]
