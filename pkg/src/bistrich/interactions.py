"""The weighted interaction functional and the two delta-measure mass lemmas.

The interaction functional is

    I(f, g; p) = integral |f_hat(zeta)|^2 |g_hat(eta)|^2 |zeta - eta|^p
                 d zeta d eta,       p = 4 lambda + d - 2,

computed on the grid by a full correlation against the kernel table (the
kernel depends on zeta - eta only).  The two mass lemmas give the total mass
of the collision measures that arise when the space-time norms are unfolded:

  * conjugate family:  pi^{(d-1)/2} Gamma(2 sigma + (d-1)/2)
                       / (2 Gamma(2 sigma + d - 1)) |zeta1 + zeta2|^{4 sigma + d - 2}
  * plain family:      pi^{d/2} / (2^{d-1} Gamma(d/2)) |zeta1 - zeta2|^{4 beta + d - 2}

each verified against an independent quadrature / Monte Carlo route.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._util import lattice_zeta
from .special_functions import log_gamma, ot_general_constant

__all__ = [
    "EstimateSpec",
    "compute_interaction",
    "closed_mass_conjugate",
    "quadrature_mass_conjugate",
    "closed_mass_plain",
    "monte_carlo_mass_plain",
]


@dataclass(frozen=True)
class EstimateSpec:
    """Which estimate family is being verified.

    family   -- "conjugate" (multiplier |xi|^{4 sigma} on u vbar) or
                "plain" (multiplier |tau + |xi|^2/2|^{2 beta} on u v)
    d        -- spatial dimension, >= 1
    exponent -- sigma (conjugate) or beta (plain)
    """

    family: str
    d: int
    exponent: float

    def __post_init__(self):
        if self.family not in ("conjugate", "plain"):
            raise ValueError(f"unknown family {self.family!r}")
        if self.d < 1:
            raise ValueError("d must be >= 1")
        thr = self.threshold
        if not self.exponent > thr:
            raise ValueError(
                f"{self.family} family requires exponent > {thr} in d={self.d}, "
                f"got {self.exponent}"
            )

    @property
    def threshold(self) -> float:
        """Sharp admissibility threshold for the exponent."""
        return (1.0 - self.d) / 4.0 if self.family == "conjugate" else (1.0 - self.d) / 2.0

    @property
    def kernel_power(self) -> float:
        """Exponent p = 4 lambda + d - 2 on |zeta - eta| in the interaction."""
        return 4.0 * self.exponent + self.d - 2.0

    @property
    def constant(self) -> float:
        """The sharp constant multiplying the interaction functional."""
        if self.family == "conjugate":
            return ot_general_constant(self.d, self.exponent)
        # 2^{-2 beta} C(d); C evaluated from its formula for every d >= 1
        # (at d = 1 it is the constant forced by the symmetrized identity).
        d = self.d
        log_c = (
            (2.0 - 4.0 * d) * math.log(2.0)
            + 0.5 * (2.0 - 5.0 * d) * math.log(math.pi)
            - log_gamma(d / 2.0)
        )
        return math.exp(log_c - 2.0 * self.exponent * math.log(2.0))

    def grid_quadrature_ok(self) -> bool:
        """Whether the kernel singularity is integrable along 1D sections."""
        return self.kernel_power > -1.0


def _diagonal_kernel_value(p: float, h: float, d: int, mode: str) -> float:
    """Kernel value assigned to the zero-lag cell of the correlation sum."""
    if mode == "zero":
        return 1.0 if p == 0.0 else 0.0
    if mode == "ball":
        # Average of |w|^p over the ball with the cell's volume.
        omega = math.pi ** (d / 2.0) / math.gamma(d / 2.0 + 1.0)
        r0 = h * omega ** (-1.0 / d)
        return (d / (p + d)) * r0**p
    if mode == "lattice":
        # Exact lattice-sum regularization: sum'_m |m h|^p h^d differs from
        # integral |w|^p dw by h^{p+d} Z_d(-p); assigning K0 = -h^p Z_d(-p)
        # cancels it.  Reproduces K0 = 1 at p = 0 and K0 = 0 at even p > 0.
        return -(h**p) * lattice_zeta(d, -p)
    raise ValueError(f"unknown diagonal mode {mode!r}")


def _kernel_table(d: int, n: int, h: float, p: float, diagonal: str) -> np.ndarray:
    """|lag|^p on the padded difference lattice, raw FFT layout."""
    shape = (2 * n,) * d
    ax = np.fft.fftfreq(2 * n, d=1.0 / (2 * n))
    lag_sq = np.zeros(shape)
    for axis_idx in range(d):
        shape_ax = [1] * d
        shape_ax[axis_idx] = 2 * n
        lag_sq = lag_sq + (ax.reshape(shape_ax) * h) ** 2
    with np.errstate(divide="ignore"):
        kernel = lag_sq ** (p / 2.0)
    kernel[(0,) * d] = _diagonal_kernel_value(p, h, d, diagonal)
    return kernel


def _kernel_bilinear(a_arr: np.ndarray, b_arr: np.ndarray, p: float, geo, diagonal: str) -> float:
    """Re sum_{k,l} A_k conj(B_l) |zeta_k - zeta_l|^p h^{2d} by FFT
    correlation with 2x zero padding (exact linear lags)."""
    d, n, h = geo.d, geo.n, geo.spacing_fourier
    shape = (2 * n,) * d
    ap = np.zeros(shape, dtype=np.complex128)
    bp = np.zeros(shape, dtype=np.complex128)
    sl = (slice(0, n),) * d
    ap[sl] = a_arr
    bp[sl] = b_arr
    x = np.fft.ifftn(np.fft.fftn(ap) * np.conj(np.fft.fftn(bp)))
    kernel = _kernel_table(d, n, h, p, diagonal)
    return float(h ** (2 * d) * np.sum(kernel * x.real))


def _check_interaction_inputs(fhat, ghat, p: float) -> None:
    if fhat.side != "fourier" or ghat.side != "fourier":
        raise ValueError("interaction quadrature expects Fourier-side fields")
    if fhat.geometry != ghat.geometry:
        raise ValueError("fields must share one grid geometry")
    if not p > -1.0:
        raise ValueError(
            f"kernel power p={p} <= -1 is not grid-quadrable; use the oracle "
            "or Monte Carlo route"
        )


def compute_interaction(fhat, ghat, p: float, diagonal: str = "auto") -> float:
    """Grid quadrature of the interaction integral.

    fhat, ghat -- Fourier-side GridFields with identical geometry
    p          -- kernel exponent, must be > -1 (integrable 1D sections)
    diagonal   -- zero-lag cell handling: "auto" picks the lattice-zeta
                  correction for d <= 2 and the ball average for d = 3;
                  "zero", "ball", "lattice" force a mode.

    The double sum is folded through an FFT correlation with 2x zero
    padding, so the cost is O((2n)^d log n) instead of O(n^{2d}).
    """
    _check_interaction_inputs(fhat, ghat, p)
    geo = fhat.geometry
    if diagonal == "auto":
        diagonal = "lattice" if geo.d <= 2 else ("ball" if p < 0.0 else "zero")
    f_arr = np.abs(np.asarray(fhat.samples)) ** 2
    g_arr = np.abs(np.asarray(ghat.samples)) ** 2
    # Normalize operand order so I(f, g) == I(g, f) bit-for-bit.
    if f_arr.tobytes() > g_arr.tobytes():
        f_arr, g_arr = g_arr, f_arr
    return _kernel_bilinear(f_arr, g_arr, p, geo, diagonal)


def symmetrized_interaction(fhat, ghat, p: float, diagonal: str = "auto") -> float:
    """Quadrature of the symmetrized interaction

        integral |f_hat(zeta) g_hat(eta) + f_hat(eta) g_hat(zeta)|^2
                 |zeta - eta|^p d zeta d eta,

    which replaces the plain product when the two spectra overlap (the
    one-dimensional u v identity).  Expands into two kernel correlations.
    """
    _check_interaction_inputs(fhat, ghat, p)
    geo = fhat.geometry
    if diagonal == "auto":
        diagonal = "lattice" if geo.d <= 2 else ("ball" if p < 0.0 else "zero")
    f_arr = np.asarray(fhat.samples)
    g_arr = np.asarray(ghat.samples)
    direct = _kernel_bilinear(np.abs(f_arr) ** 2, np.abs(g_arr) ** 2, p, geo, diagonal)
    cross_field = f_arr * np.conj(g_arr)
    cross = _kernel_bilinear(cross_field, cross_field, p, geo, diagonal)
    return 2.0 * direct + 2.0 * cross


def _mass_conjugate_constant(sigma: float, d: int) -> float:
    return 0.5 * math.exp(
        0.5 * (d - 1.0) * math.log(math.pi)
        + log_gamma(2.0 * sigma + (d - 1.0) / 2.0)
        - log_gamma(2.0 * sigma + d - 1.0)
    )


def closed_mass_conjugate(zeta1, zeta2, sigma: float, d: int) -> float:
    """Total mass of the conjugate-family collision measure:

        pi^{(d-1)/2} Gamma(2 sigma + (d-1)/2) / (2 Gamma(2 sigma + d - 1))
            x |zeta1 + zeta2|^{4 sigma + d - 2}.
    """
    if not sigma > (1.0 - d) / 4.0:
        raise ValueError(f"sigma={sigma} at or below the threshold (1-d)/4 for d={d}")
    s = np.asarray(zeta1, dtype=float) + np.asarray(zeta2, dtype=float)
    s_norm = float(np.linalg.norm(s))
    power = 4.0 * sigma + d - 2.0
    if s_norm == 0.0:
        if power < 0.0:
            raise ValueError("zeta1 + zeta2 = 0 with negative kernel power is singular")
        return _mass_conjugate_constant(sigma, d) * (1.0 if power == 0.0 else 0.0)
    return _mass_conjugate_constant(sigma, d) * s_norm**power


def quadrature_mass_conjugate(zeta1, zeta2, sigma: float, d: int, sphere_rule: int = 129) -> float:
    """The same mass by direct angular quadrature of

        (1/2) integral_{S^{d-1}} (omega . s)_+^{4 sigma + d - 2} d omega,
        s = zeta1 + zeta2,

    using only the rotation invariance of surface measure (the zonal
    reduction) and a Gauss-Legendre rule with `sphere_rule` nodes on the
    hemisphere where the integrand is supported.
    """
    s = np.asarray(zeta1, dtype=float) + np.asarray(zeta2, dtype=float)
    s_norm = float(np.linalg.norm(s))
    if s_norm == 0.0:
        raise ValueError("zeta1 + zeta2 = 0 is a degenerate direction")
    q = 4.0 * sigma + d - 2.0
    if q <= -1.0:
        raise ValueError(f"angular power {q} <= -1 is not integrable on the sphere")
    if d == 1:
        # S^0 = {-1, +1}: exactly one sign sees a positive dot product.
        return 0.5 * s_norm**q
    nodes, weights = np.polynomial.legendre.leggauss(int(sphere_rule))
    if d == 2:
        # omega . s = |s| cos(phi); support is the half-circle |phi| < pi/2.
        phi = nodes * (math.pi / 2.0)
        integral = (math.pi / 2.0) * np.sum(weights * np.cos(phi) ** q)
    elif d == 3:
        # Zonal reduction: d omega = 2 pi d mu on mu = omega . s / |s| in [-1, 1];
        # the positive part restricts to mu in (0, 1].
        mu = 0.5 * (nodes + 1.0)
        integral = 2.0 * math.pi * 0.5 * np.sum(weights * mu**q)
    else:
        raise ValueError("quadrature_mass_conjugate supports d in {1, 2, 3}")
    return 0.5 * s_norm**q * float(integral)


def closed_mass_plain(zeta1, zeta2, beta: float, d: int) -> float:
    """Total mass of the plain-family collision measure:

        pi^{d/2} / (2^{d-1} Gamma(d/2)) |zeta1 - zeta2|^{4 beta + d - 2}.
    """
    diff = np.asarray(zeta1, dtype=float) - np.asarray(zeta2, dtype=float)
    r2 = float(np.linalg.norm(diff))
    power = 4.0 * beta + d - 2.0
    if r2 == 0.0:
        if power < 0.0:
            raise ValueError("zeta1 = zeta2 is singular for negative kernel power")
        return (
            math.exp(0.5 * d * math.log(math.pi) - (d - 1.0) * math.log(2.0) - log_gamma(d / 2.0))
            if power == 0.0
            else 0.0
        )
    c = math.exp(0.5 * d * math.log(math.pi) - (d - 1.0) * math.log(2.0) - log_gamma(d / 2.0))
    return c * r2**power


def monte_carlo_mass_plain(
    zeta1,
    zeta2,
    beta: float,
    d: int,
    n_samples: int = 1_000_000,
    seed: int = 0,
) -> float:
    """Monte Carlo check of the plain-family mass.

    The collision manifold for (zeta1, zeta2) is the sphere
    eta1 = c + rho omega, eta2 = c - rho omega with c = (zeta1+zeta2)/2 and
    rho = |zeta1-zeta2|/2 fixed by energy conservation; the direction omega
    integrates to the sphere area because the momentum delta makes the
    integrand radial.  Rather than trust the analytic 1/(4 rho) surface
    factor, the kinetic-energy delta is mollified with a narrow Gaussian and
    the radius is importance-sampled around the collision radius, so the
    Jacobian emerges numerically and the estimator converges to the closed
    form with genuine statistical error (~0.1% at 1e6 samples).
    """
    z1 = np.asarray(zeta1, dtype=float)
    z2 = np.asarray(zeta2, dtype=float)
    r = 0.5 * float(np.linalg.norm(z1 - z2))
    if r == 0.0:
        raise ValueError("zeta1 = zeta2: collision sphere degenerates to a point")
    rng = np.random.default_rng(seed)

    eps = 0.04 * r * r            # mollification width of the energy delta
    s_rho = 3.0 * eps / (4.0 * r)  # radial proposal std (delta has std eps/4r)

    rho = rng.normal(loc=r, scale=s_rho, size=n_samples)
    energy_defect = 2.0 * r * r - 2.0 * rho * rho
    delta = np.exp(-0.5 * (energy_defect / eps) ** 2) / (math.sqrt(2.0 * math.pi) * eps)
    proposal = np.exp(-0.5 * ((rho - r) / s_rho) ** 2) / (math.sqrt(2.0 * math.pi) * s_rho)
    area = 2.0 * math.exp(0.5 * d * math.log(math.pi) - log_gamma(d / 2.0))
    weights = np.where(rho > 0.0, delta * np.abs(rho) ** (d - 1) * area / proposal, 0.0)

    kernel = (2.0 * r) ** (4.0 * beta)
    return float(kernel * np.mean(weights))
