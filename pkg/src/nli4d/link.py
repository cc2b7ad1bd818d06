"""Fiber link and WDM grid descriptions, the FWM link function, and ASE power.

Internally everything is SI (Hz, m, W); the dataclasses accept the customary
engineering units (dB/km, ps/nm/km, 1/W/km, km) and expose converted
properties.  The dispersion conversion D -> beta2 is pinned to a 1550 nm
reference wavelength; the ASE photon energy to 193.41 THz.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

C_LIGHT = 299792458.0
H_PLANCK = 6.62607015e-34
REF_WAVELENGTH_M = 1550e-9
ASE_REF_FREQ_HZ = 193.41e12

__all__ = [
    "LinkSpec",
    "WdmSpec",
    "mu",
    "mu_single_span",
    "span_array_factor",
    "xi",
    "ase_power",
    "C_LIGHT",
    "H_PLANCK",
    "ASE_REF_FREQ_HZ",
]


@dataclass(frozen=True)
class LinkSpec:
    """Homogeneous multi-span link: fiber constants plus span layout."""

    alpha_db_km: float
    dispersion_ps_nm_km: float
    gamma_w_km: float
    span_length_km: float
    n_spans: int
    noise_figure_db: float = 5.0
    amplifier: str = "edfa"  # 'edfa' or 'ideal' (noiseless loss compensation)

    def __post_init__(self):
        if self.alpha_db_km <= 0:
            raise ValueError("attenuation must be positive")
        if self.span_length_km <= 0:
            raise ValueError("span length must be positive")
        if self.n_spans < 1:
            raise ValueError("need at least one span")
        if self.gamma_w_km < 0:
            raise ValueError("nonlinear coefficient must be nonnegative")
        if self.amplifier not in ("edfa", "ideal"):
            raise ValueError(f"unknown amplifier type {self.amplifier!r}")

    @property
    def alpha(self) -> float:
        """Field attenuation rate alpha [1/m] (power decays as exp(-alpha z))."""
        return self.alpha_db_km * math.log(10.0) / 10.0 / 1e3

    @property
    def beta2(self) -> float:
        """GVD coefficient [s^2/m] from D at the 1550 nm reference."""
        d_si = self.dispersion_ps_nm_km * 1e-6  # s/m^2
        return -d_si * REF_WAVELENGTH_M**2 / (2.0 * math.pi * C_LIGHT)

    @property
    def gamma(self) -> float:
        """Nonlinear coefficient [1/(W m)]."""
        return self.gamma_w_km / 1e3

    @property
    def span_length(self) -> float:
        return self.span_length_km * 1e3

    @property
    def span_gain(self) -> float:
        """Linear EDFA power gain exactly compensating the span loss."""
        return math.exp(self.alpha * self.span_length)

    def with_spans(self, n_spans: int) -> "LinkSpec":
        return LinkSpec(
            self.alpha_db_km,
            self.dispersion_ps_nm_km,
            self.gamma_w_km,
            self.span_length_km,
            n_spans,
            self.noise_figure_db,
            self.amplifier,
        )


@dataclass(frozen=True)
class WdmSpec:
    """Common-grid WDM comb: odd channel count, center channel is the COI."""

    symbol_rate_hz: float
    n_channels: int = 1
    spacing_hz: float = 0.0
    rolloff: float = 0.0
    pulse: str = "rect"  # 'rect' or 'rrc'

    def __post_init__(self):
        if self.symbol_rate_hz <= 0:
            raise ValueError("symbol rate must be positive")
        if self.n_channels < 1 or self.n_channels % 2 == 0:
            raise ValueError("channel count must be odd and >= 1")
        if self.n_channels > 1 and self.spacing_hz < self.symbol_rate_hz:
            raise ValueError("channel spacing must be >= symbol rate (no overlap)")
        if not input_rolloff_ok(self.rolloff):
            raise ValueError("rolloff must be in [0, 1)")
        if self.pulse not in ("rect", "rrc"):
            raise ValueError(f"unknown pulse {self.pulse!r}")

    @property
    def interferer_indices(self) -> list[int]:
        h = (self.n_channels - 1) // 2
        return [k for k in range(-h, h + 1) if k != 0]

    def center_frequency(self, h: int) -> float:
        return h * self.spacing_hz


def input_rolloff_ok(r: float) -> bool:
    return 0.0 <= r < 1.0


# ---------------------------------------------------------------------------
# Link function


def _phase_mismatch(f1, f2, f, link: LinkSpec):
    """u = 4 pi^2 beta2 (f - f1)(f2 - f1), the FWM mismatch rate [rad/m]."""
    return 4.0 * math.pi**2 * link.beta2 * (f - f1) * (f2 - f1)


def mu_single_span(f1, f2, f, link: LinkSpec):
    """Single-span generation kernel (1 - e^{-aL} e^{juL}) / (a - ju)."""
    u = _phase_mismatch(f1, f2, f, link)
    a, L = link.alpha, link.span_length
    return (1.0 - np.exp(-a * L) * np.exp(1j * u * L)) / (a - 1j * u)

def span_array_factor(u, link: LinkSpec):
    """Coherent multi-span phase array sum_{l=0}^{Ns-1} e^{j u l L}.

    Evaluated in closed form as a Dirichlet kernel; the removable singularities
    at u L = 2 pi m are filled with the exact limit.
    """
    ns, L = link.n_spans, link.span_length
    x = np.asarray(u, dtype=float) * L / 2.0
    sx = np.sin(x)
    near = np.abs(sx) < 1e-9
    sx_safe = np.where(near, 1.0, sx)
    ratio = np.sin(ns * x) / sx_safe
    # at x = m pi: sum = Ns * cos(Ns x)/cos(x) in the limit, which is +-Ns;
    # the full sum there is exactly Ns * e^{j(Ns-1)x} * (limit sign) = Ns
    limit = ns * np.cos(ns * np.where(near, x, 0.0)) / np.cos(np.where(near, x, 0.0))
    mag = np.where(near, limit, ratio)
    return mag * np.exp(1j * (ns - 1) * x)


def mu(f1, f2, f, link: LinkSpec):
    """Multi-span FWM link function mu(f1, f2, f) [m].

    Span-local generation kernel times the coherent span array factor.  The
    array accumulates the same phase-mismatch sign as the kernel; the common
    f-only phase removed by receiver-side dispersion compensation is dropped.
    """
    u = _phase_mismatch(f1, f2, f, link)
    a, L = link.alpha, link.span_length
    kernel = (1.0 - np.exp(-a * L) * np.exp(1j * u * L)) / (a - 1j * u)
    return kernel * span_array_factor(u, link)


def mu_squared_envelope(u, link: LinkSpec):
    """|single-span kernel|^2 as a function of the mismatch rate u [rad/m]."""
    a, L = link.alpha, link.span_length
    eal = math.exp(-a * L)
    return (1.0 - 2.0 * eal * np.cos(u * L) + eal * eal) / (a * a + u * u)


def mu_squared_of_u(u, link: LinkSpec):
    """|mu|^2 as a function of the mismatch rate alone (u in rad/m)."""
    ns, L = link.n_spans, link.span_length
    x = np.asarray(u, dtype=float) * L / 2.0
    sx = np.sin(x)
    near = np.abs(sx) < 1e-9
    sx_safe = np.where(near, 1.0, sx)
    dirich = np.where(near, float(ns) ** 2, (np.sin(ns * x) / sx_safe) ** 2)
    return mu_squared_envelope(u, link) * dirich


def mu_of_u(u, link: LinkSpec):
    """Complex mu as a function of the mismatch rate alone (u in rad/m)."""
    u = np.asarray(u, dtype=float)
    a, L = link.alpha, link.span_length
    kernel = (1.0 - np.exp(-a * L) * np.exp(1j * u * L)) / (a - 1j * u)
    return kernel * span_array_factor(u, link)


# ---------------------------------------------------------------------------
# Accumulation and ASE


def xi(link: LinkSpec, eps: float) -> tuple[float, float]:
    """Signal-ASE accumulation coefficient.

    Returns (exact, approx): the exact sum over spans n^(1+eps) and the
    closed-form approximation Ns^(2+eps)/(2+eps) + Ns^(1+eps)/2.  Model
    predictions use the exact sum.
    """
    ns = link.n_spans
    exact = float(np.sum(np.arange(1, ns + 1, dtype=float) ** (1.0 + eps)))
    approx = ns ** (2.0 + eps) / (2.0 + eps) + ns ** (1.0 + eps) / 2.0
    return exact, approx


def ase_power(link: LinkSpec, wdm: WdmSpec) -> float:
    """Dual-polarization ASE power per span in the symbol-rate band [W].

    (G - 1) h nu F Rs with G the loss-compensating span gain and F the linear
    noise figure.  Zero for an ideal noiseless amplifier.
    """
    if link.amplifier == "ideal":
        return 0.0
    g = link.span_gain
    f_lin = 10.0 ** (link.noise_figure_db / 10.0)
    return (g - 1.0) * H_PLANCK * ASE_REF_FREQ_HZ * f_lin * wdm.symbol_rate_hz
