"""Physical scenario, LoS Lambertian channel and SNR distributions.

Geometry: ``L`` co-located LEDs at the centre of the ceiling, height ``H``
above the receiver plane; receivers are uniform on a disk of radius ``R``
and always face the LEDs, so the incidence angle is zero and the peak SNR
depends only on the horizontal radius ``r``::

    gamma(r) = C_eff * (H**2 + r**2) ** -(m_t + 2)

with ``C_eff = L * A**2 * C_RF * H**(2 m_t) / N0``.  The induced SNR law on
``[gamma_min, gamma_max]`` is a power law, pdf ``a x**b`` and cdf
``a x**c / c + eps``.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np

from .errors import DomainError

PI_E = math.pi * math.e


class BoundKind(enum.Enum):
    UPPER = "upper"
    LOWER = "lower"

    @classmethod
    def parse(cls, text: str) -> "BoundKind":
        try:
            return cls(text.lower())
        except ValueError:
            raise DomainError(f"unknown bound kind {text!r}") from None


def lambertian_order(half_angle_deg: float) -> float:
    """Lambertian order ``m_t = -ln 2 / ln cos(theta_half)``."""
    if not 0.0 < half_angle_deg < 90.0:
        raise DomainError(f"semi-angle must lie in (0, 90) degrees, got {half_angle_deg}")
    return -math.log(2.0) / math.log(math.cos(math.radians(half_angle_deg)))


@dataclass(frozen=True)
class SystemParams:
    """Downlink scenario.  Angles in degrees, lengths in metres.

    ``c_rf`` overrides the RF power constant; by default it is derived from the
    receiver optics as ``((m_t+1) A_R T_s g / (2 pi))**2`` with the
    concentrator gain ``g = n**2 / sin(FoV)**2``.
    """

    led_count: int = 4
    half_angle_deg: float = 70.0
    ceiling_height: float = 2.5
    room_radius: float = 5.0
    amplitude: float = 6.0
    noise_power_dbm: float = -98.82
    target_rate: float = 1.0
    eve_intensity: float = 0.05
    detector_area: float = 1e-4
    filter_gain: float = 1.0
    refractive_index: float = 1.5
    fov_deg: float = 70.0
    c_rf: Optional[float] = None

    def __post_init__(self):
        if isinstance(self.led_count, bool) or int(self.led_count) != self.led_count or self.led_count < 1:
            raise DomainError(f"led_count must be a positive integer, got {self.led_count}")
        if not 0.0 < self.half_angle_deg < 90.0:
            raise DomainError(f"half_angle_deg must lie in (0, 90), got {self.half_angle_deg}")
        for name in ("ceiling_height", "room_radius", "amplitude", "detector_area", "filter_gain"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0.0):
                raise DomainError(f"{name} must be positive, got {value}")
        if not math.isfinite(self.noise_power_dbm):
            raise DomainError("noise_power_dbm must be finite")
        if not (math.isfinite(self.target_rate) and self.target_rate >= 0.0):
            raise DomainError(f"target_rate must be >= 0, got {self.target_rate}")
        if not (math.isfinite(self.eve_intensity) and self.eve_intensity >= 0.0):
            raise DomainError(f"eve_intensity must be >= 0, got {self.eve_intensity}")
        if not self.refractive_index >= 1.0:
            raise DomainError(f"refractive_index must be >= 1, got {self.refractive_index}")
        if not 0.0 < self.fov_deg <= 90.0:
            raise DomainError(f"fov_deg must lie in (0, 90], got {self.fov_deg}")
        if self.c_rf is not None and not (math.isfinite(self.c_rf) and self.c_rf > 0.0):
            raise DomainError(f"c_rf must be positive, got {self.c_rf}")

    @property
    def lambertian_order(self) -> float:
        return lambertian_order(self.half_angle_deg)

    @property
    def concentrator_gain(self) -> float:
        return self.refractive_index ** 2 / math.sin(math.radians(self.fov_deg)) ** 2

    @property
    def noise_power_w(self) -> float:
        return 10.0 ** ((self.noise_power_dbm - 30.0) / 10.0)

    @property
    def default_rf_constant(self) -> float:
        m = self.lambertian_order
        return ((m + 1.0) * self.detector_area * self.filter_gain * self.concentrator_gain / (2.0 * math.pi)) ** 2

    @property
    def rf_constant(self) -> float:
        return self.default_rf_constant if self.c_rf is None else self.c_rf

    @property
    def mean_eavesdroppers(self) -> float:
        return self.eve_intensity * math.pi * self.room_radius ** 2


def channel_gain(d, theta, phi, params: SystemParams):
    """LoS DC gain of one LED; exactly zero outside the receiver field of view.

    ``d`` in metres, ``theta`` (irradiance) and ``phi`` (incidence) in radians.
    Accepts scalars or numpy arrays.
    """
    d = np.asarray(d, dtype=float)
    if np.any(d <= 0.0):
        raise DomainError("distance must be positive")
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    m = params.lambertian_order
    gain = ((m + 1.0) * params.detector_area * np.cos(phi) / (2.0 * math.pi * d ** 2)
            * np.cos(theta) ** m * params.concentrator_gain * params.filter_gain)
    gain = np.where(phi > math.radians(params.fov_deg), 0.0, gain)
    return gain[()] if gain.ndim == 0 else gain


@dataclass(frozen=True)
class SnrLaw:
    """Constants of the SNR distribution on ``[gamma_min, gamma_max]``."""

    m_t: float
    c_eff: float
    gamma_min: float
    gamma_max: float
    a: float
    b: float
    c: float
    eps: float
    height: float = field(default=1.0)
    radius: float = field(default=1.0)

    def pdf(self, x):
        return snr_pdf(x, self)

    def cdf(self, x):
        return snr_cdf(x, self)


def snr_law(params: SystemParams, eps_override: Optional[float] = None) -> SnrLaw:
    """Derive the SNR law of a scenario.

    ``eps_override`` replaces the cdf offset ``1 + H**2/R**2``; it exists only
    to exercise the verification harness with a deliberately broken law.
    """
    m = params.lambertian_order
    h, r = params.ceiling_height, params.room_radius
    c_eff = (params.led_count * params.amplitude ** 2 * params.rf_constant
             * h ** (2.0 * m) / params.noise_power_w)
    c = -1.0 / (m + 2.0)
    eps = 1.0 + h * h / (r * r) if eps_override is None else float(eps_override)
    return SnrLaw(
        m_t=m,
        c_eff=c_eff,
        gamma_min=c_eff * (h * h + r * r) ** (-(m + 2.0)),
        gamma_max=c_eff * h ** (-2.0 * (m + 2.0)),
        a=-c / (r * r * c_eff ** c),
        b=c - 1.0,
        c=c,
        eps=eps,
        height=h,
        radius=r,
    )


def snr_at_radius(r, law: SnrLaw, height: Optional[float] = None):
    """Peak SNR of a receiver at horizontal radius ``r``."""
    h = law.height if height is None else height
    r = np.asarray(r, dtype=float)
    if np.any(r < 0.0) or np.any(r > law.radius * (1.0 + 1e-12)):
        raise DomainError(f"radius must lie in [0, {law.radius}]")
    out = law.c_eff * (h * h + r * r) ** (-(law.m_t + 2.0))
    return out[()] if out.ndim == 0 else out


def _check_support(x, law: SnrLaw):
    slack = 1e-12
    if np.any(x < law.gamma_min * (1.0 - slack)) or np.any(x > law.gamma_max * (1.0 + slack)):
        raise DomainError(f"SNR outside the support [{law.gamma_min}, {law.gamma_max}]")


def snr_pdf(x, law: SnrLaw):
    """Density ``a x**b`` of one receiver's SNR; raises outside the support."""
    x = np.asarray(x, dtype=float)
    _check_support(x, law)
    out = law.a * x ** law.b
    return out[()] if out.ndim == 0 else out


def snr_cdf(x, law: SnrLaw):
    """CDF ``a x**c / c + eps``, clamped to 0 below and 1 above the support."""
    x = np.asarray(x, dtype=float)
    inside = law.a * np.power(np.clip(x, law.gamma_min, law.gamma_max), law.c) / law.c + law.eps
    out = np.where(x <= law.gamma_min, 0.0, np.where(x >= law.gamma_max, 1.0, inside))
    return out[()] if out.ndim == 0 else out


def eve_coefficients(k: int, law: SnrLaw) -> tuple[np.ndarray, np.ndarray]:
    """Binomial expansion of the strongest-eavesdropper density.

    Returns ``(alpha, beta)`` with ``alpha_i = C(K-1, i) (a/c)**i eps**(K-1-i)``
    and ``beta_i = c*i + c - 1`` so that the density is
    ``a K sum_i alpha_i x**beta_i``.
    """
    if k < 1:
        raise DomainError(f"need at least one eavesdropper, got K={k}")
    i = np.arange(k, dtype=float)
    ratio = law.a / law.c
    alpha = np.array([math.comb(k - 1, j) * ratio ** j * law.eps ** (k - 1 - j) for j in range(k)])
    beta = law.c * i + law.c - 1.0
    return alpha, beta


def _max_eve_pdf_scalar(x: float, k: int, law: SnrLaw) -> float:
    # The alternating binomial sum loses ~ (K-1) log10((eps+|u|)/(eps-|u|))
    # digits in floating point; accumulate it exactly over the double inputs.
    ratio = Fraction(law.a / law.c)
    v = Fraction(float(x) ** law.c)
    eps = Fraction(law.eps)
    total = sum(math.comb(k - 1, i) * ratio ** i * eps ** (k - 1 - i) * v ** i for i in range(k))
    return law.a * k * float(total) * float(x) ** (law.c - 1.0)


def max_eve_snr_pdf(x, k: int, law: SnrLaw):
    """Density of the largest SNR among ``K`` iid eavesdroppers (binomial form)."""
    if int(k) != k or k < 1:
        raise DomainError(f"K must be a positive integer, got {k}")
    x = np.asarray(x, dtype=float)
    _check_support(x, law)
    if x.ndim == 0:
        return _max_eve_pdf_scalar(float(x), int(k), law)
    return np.array([_max_eve_pdf_scalar(float(v), int(k), law) for v in x.ravel()]).reshape(x.shape)


def max_eve_snr_cdf(x, k: int, law: SnrLaw):
    """CDF ``F(x)**K`` of the largest eavesdropper SNR (``K = 0`` gives a unit step at 0)."""
    x = np.asarray(x, dtype=float)
    if k == 0:
        out = np.where(x >= 0.0, 1.0, 0.0)
    else:
        out = snr_cdf(x, law) ** k
    return out[()] if out.ndim == 0 else out


def order_statistic_pdf(x, k: int, law: SnrLaw):
    """``K F(x)**(K-1) f(x)``: the same density through the order-statistic identity."""
    f = snr_pdf(x, law)
    return k * snr_cdf(x, law) ** (k - 1) * f


def secrecy_capacity(gamma0, gamma_e, kind: BoundKind):
    """Instantaneous secrecy capacity bound in bit/s/Hz under the amplitude constraint.

    UPPER: ``max(0.5 log2((g0 + 1) / (gE + 1)), 0)``
    LOWER: ``max(0.5 log2((6 g0 + 3 pi e) / (pi e gE + 3 pi e)), 0)``
    """
    g0 = np.asarray(gamma0, dtype=float)
    ge = np.asarray(gamma_e, dtype=float)
    if kind is BoundKind.UPPER:
        val = 0.5 * (np.log2(g0 + 1.0) - np.log2(ge + 1.0))
    else:
        val = 0.5 * (np.log2(6.0 * g0 + 3.0 * PI_E) - np.log2(PI_E * ge + 3.0 * PI_E))
    out = np.maximum(val, 0.0)
    return out[()] if out.ndim == 0 else out
