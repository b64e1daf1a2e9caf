"""Sharp constants of the bilinear space-time estimates and the classical
special functions they are built from.

All constants are stated in the Fourier normalization

    f_hat(xi) = integral f(x) exp(-i x.xi) dx,

so Plancherel reads ||f||_2^2 = (2 pi)^{-d} ||f_hat||_2^2.  Every module in
this package uses this single convention; the numerical values below are
meaningless under any other one.

The families:

    OT(d)        = 2^{-d} pi^{(2-d)/2} / Gamma(d/2)          (L^2 x L^2 product bound)
    OT(d, sigma) = 2^{-3d} pi^{(1-5d)/2}
                   Gamma(2 sigma + (d-1)/2) / Gamma(2 sigma + d - 1)
    C(d)         = 2^{2-4d} pi^{(2-5d)/2} / Gamma(d/2)       (sigma = 0 case)
    PV(d)        = 2^{-3d} pi^{(1-5d)/2} / Gamma((d+1)/2)    (sigma = (3-d)/4 case)

Gamma ratios are evaluated through differences of log-Gamma so nothing
overflows for large arguments.  Dimensions are capped at 64: this is a
desk-scale verification tool, not an asymptotics engine.

All functions here are pure; call them from as many threads as you like.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "MAX_DIMENSION",
    "SharpConstant",
    "log_gamma",
    "ot_classical_constant",
    "ot_general_constant",
    "carneiro_constant",
    "pv_constant",
    "check_duplication_consistency",
    "sphere_area",
]

MAX_DIMENSION = 64

_FAMILIES = frozenset(
    {"OT_general", "OT_classical", "Carneiro", "PlanchonVega", "Ctrick", "C15a", "C15b"}
)


@dataclass(frozen=True)
class SharpConstant:
    """A named sharp constant together with the parameters that select it."""

    family: str
    d: int
    exponent: float
    value: float

    def __post_init__(self):
        if self.family not in _FAMILIES:
            raise ValueError(f"unknown constant family {self.family!r}")
        if not (self.value > 0.0 and math.isfinite(self.value)):
            raise ValueError("sharp constants are finite and positive")


def _check_dimension(d: int, minimum: int = 1) -> None:
    if not isinstance(d, (int, np.integer)):
        raise TypeError(f"dimension must be an integer, got {type(d).__name__}")
    if d < minimum:
        raise ValueError(f"dimension must be >= {minimum}, got {d}")
    if d > MAX_DIMENSION:
        raise ValueError(f"dimension capped at {MAX_DIMENSION}, got {d}")


def log_gamma(x: float) -> float:
    """ln Gamma(x) for x > 0 (relative error ~1e-15)."""
    if not x > 0.0:
        raise ValueError(f"log_gamma requires x > 0, got {x}")
    return math.lgamma(x)


def ot_classical_constant(d: int) -> float:
    """OT(d) = 2^{-d} pi^{(2-d)/2} / Gamma(d/2), d >= 1."""
    _check_dimension(d, minimum=1)
    return math.exp(
        -d * math.log(2.0) + 0.5 * (2.0 - d) * math.log(math.pi) - log_gamma(d / 2.0)
    )


def ot_general_constant(d: int, sigma: float) -> float:
    """The one-parameter sharp constant

        OT(d, sigma) = 2^{-3d} pi^{(1-5d)/2}
                       Gamma(2 sigma + (d-1)/2) / Gamma(2 sigma + d - 1),

    defined for sigma > (1-d)/4 and blowing up as sigma decreases to that
    threshold (the first Gamma factor has its pole there).

    d = 1 is admitted as well: the ratio collapses to 1 and the value
    1/(8 pi^2) is the exact constant of the one-dimensional identity.
    """
    _check_dimension(d, minimum=1)
    threshold = (1.0 - d) / 4.0
    if not sigma > threshold:
        raise ValueError(
            f"sigma={sigma} is below the sharp threshold (1-d)/4 = {threshold} for d={d}"
        )
    log_value = (
        -3.0 * d * math.log(2.0)
        + 0.5 * (1.0 - 5.0 * d) * math.log(math.pi)
        + log_gamma(2.0 * sigma + (d - 1.0) / 2.0)
        - log_gamma(2.0 * sigma + d - 1.0)
    )
    return math.exp(log_value)


def carneiro_constant(d: int) -> float:
    """C(d) = 2^{2-4d} pi^{(2-5d)/2} / Gamma(d/2), d >= 2."""
    _check_dimension(d, minimum=2)
    return math.exp(
        (2.0 - 4.0 * d) * math.log(2.0)
        + 0.5 * (2.0 - 5.0 * d) * math.log(math.pi)
        - log_gamma(d / 2.0)
    )


def pv_constant(d: int) -> float:
    """PV(d) = 2^{-3d} pi^{(1-5d)/2} / Gamma((d+1)/2), d >= 2."""
    _check_dimension(d, minimum=2)
    return math.exp(
        -3.0 * d * math.log(2.0)
        + 0.5 * (1.0 - 5.0 * d) * math.log(math.pi)
        - log_gamma((d + 1.0) / 2.0)
    )


def check_duplication_consistency(d: int) -> float:
    """Relative residual |OT(d,0) - C(d)| / C(d).

    The two expressions agree through the Gamma duplication formula
    Gamma(z) Gamma(z + 1/2) = 2^{1-2z} sqrt(pi) Gamma(2z); the residual is
    pure floating-point noise and must stay below 1e-13.
    """
    _check_dimension(d, minimum=2)
    c = carneiro_constant(d)
    return abs(ot_general_constant(d, 0.0) - c) / c


def sphere_area(d: int) -> float:
    """Surface measure of the unit sphere S^{d-1} in R^d: 2 pi^{d/2} / Gamma(d/2)."""
    _check_dimension(d, minimum=1)
    return 2.0 * math.exp(0.5 * d * math.log(math.pi) - log_gamma(d / 2.0))
