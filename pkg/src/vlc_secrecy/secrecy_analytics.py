"""Secrecy outage probability and average secrecy capacity bounds.

Closed forms are conditioned on the number ``K`` of eavesdroppers and then
averaged over the Poisson count of the eavesdropper process.  Each closed
form has a nested-quadrature twin (``sop_quad`` / ``asc_quad``) that
integrates the defining double integral directly.

Bound pairing.  The SOP is an outage *probability*, so its upper bound comes
from the pessimistic (lower) capacity bound and vice versa:

* ``BoundKind.UPPER``: SOP threshold from the capacity lower bound
  (``sigma_u = pi e 4**C_th / 6``, ``zeta_u = 3 sigma_u - pi e / 2``) and ASC
  from the capacity upper bound (``m0 = n0 = mE = nE = 1``).
* ``BoundKind.LOWER``: SOP threshold from the capacity upper bound
  (``sigma_l = 4**C_th``, ``zeta_l = sigma_l - 1``) and ASC from the capacity
  lower bound (``m0 = 6, n0 = 3 pi e, mE = pi e, nE = 3 pi e``).

Outage is the event ``gamma0 <= sigma * gammaE + zeta``.
"""
from __future__ import annotations

import enum
import functools
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import stats

from .errors import DegenerateRegion, DomainError, InvalidParameter, NonConvergent
from .special_functions import adaptive_quad, gauss_2f1, lp
from .vlc_model import PI_E, BoundKind, SnrLaw, eve_coefficients, snr_cdf

# A closed form that cancels more than this many decimal digits is replaced
# by its quadrature twin.
MAX_DIGIT_LOSS = 6.0
# The ASC sums amplify LP errors by up to ~1e7, so LP may lose fewer digits there.
ASC_LP_DIGIT_LOSS = 2.0
POISSON_TAIL = 1e-12
QUAD_TOL = 1e-11
_LN2 = math.log(2.0)


class Method(enum.Enum):
    CLOSED_FORM = "closed_form"
    QUADRATURE = "quadrature"


@dataclass(frozen=True)
class BoundCoefficients:
    kind: BoundKind
    sigma: float
    zeta: float
    m0: float
    n0: float
    mE: float
    nE: float

    @property
    def delta(self) -> float:
        return self.zeta / self.sigma

    @property
    def capacity_kind(self) -> BoundKind:
        """Capacity bound whose outage event this SOP bound describes."""
        return BoundKind.LOWER if self.kind is BoundKind.UPPER else BoundKind.UPPER


@dataclass(frozen=True)
class AnalyticResult:
    value: float
    method: Method
    detail: Optional[dict] = field(default=None, compare=False)


def bound_coefficients(kind: BoundKind, target_rate: float) -> BoundCoefficients:
    if not (math.isfinite(target_rate) and target_rate >= 0.0):
        raise DomainError(f"target rate must be >= 0, got {target_rate}")
    growth = 2.0 ** (2.0 * target_rate)
    if kind is BoundKind.UPPER:
        sigma = PI_E * growth / 6.0
        return BoundCoefficients(kind, sigma, 3.0 * sigma - PI_E / 2.0, 1.0, 1.0, 1.0, 1.0)
    return BoundCoefficients(kind, growth, growth - 1.0, 6.0, 3.0 * PI_E, PI_E, 3.0 * PI_E)


def gamma_limit(coeff: BoundCoefficients, law: SnrLaw) -> float:
    return (law.gamma_max - coeff.zeta) / coeff.sigma


def _digit_loss(value: float, magnitude: float) -> float:
    if not (math.isfinite(value) and math.isfinite(magnitude)):
        return math.inf
    if magnitude == 0.0:
        return 0.0
    if value == 0.0:
        return math.inf
    return max(0.0, math.log10(magnitude / abs(value)))


# ---------------------------------------------------------------------------
# SOP closed form
# ---------------------------------------------------------------------------

def _power_hyp_antiderivative(y: float, beta: float, law: SnrLaw, delta: float) -> float:
    """Antiderivative of ``y**beta * (y + delta)**(b+1)`` without its additive constant.

    The textbook antiderivative ``delta**(b+1) y**(beta+1) 2F1(-b-1, beta+1;
    beta+2; -y/delta) / (beta+1)`` equals this one plus a y-independent term of
    size ~ ``delta**kappa``; that term cancels between the limits but, scaled by
    ``(a/c)**i``, swamps the difference in double precision.  The inverted
    argument ``-delta/y`` is small on the whole support.
    """
    kappa = beta + law.b + 2.0
    if delta == 0.0:
        return y ** kappa / kappa
    return (y ** beta * (y + delta) ** (law.b + 2.0)
            * gauss_2f1(-beta, 1.0, 1.0 - kappa, -delta / y) / kappa)


def _textbook_antiderivative(y: float, beta: float, law: SnrLaw, delta: float) -> float:
    p2 = beta + 1.0
    return delta ** (law.b + 1.0) * y ** p2 * gauss_2f1(-law.b - 1.0, p2, beta + 2.0, -y / delta) / p2


def _sop_case1_parts(coeff, law, k, y_lo, y_hi):
    if y_hi <= y_lo:
        return 0.0, 0.0
    alpha, beta = eve_coefficients(k, law)
    theta = law.a ** 2 * k / (law.b + 1.0)
    sig_pow = coeff.sigma ** (law.b + 1.0)
    gmin_pow = law.gamma_min ** (law.b + 1.0)
    terms = []
    for ai, bi in zip(alpha, beta):
        hyp_hi = sig_pow * _power_hyp_antiderivative(y_hi, bi, law, coeff.delta)
        hyp_lo = sig_pow * _power_hyp_antiderivative(y_lo, bi, law, coeff.delta)
        pow_hi = gmin_pow * y_hi ** (bi + 1.0) / (bi + 1.0)
        pow_lo = gmin_pow * y_lo ** (bi + 1.0) / (bi + 1.0)
        scale = theta * ai
        terms.extend([scale * hyp_hi, -scale * hyp_lo, -scale * pow_hi, scale * pow_lo])
    return math.fsum(terms), max(abs(t) for t in terms)


def _check_interval(law: SnrLaw, *ys: float):
    slack = 1e-12 * law.gamma_max
    for y in ys:
        if not law.gamma_min - slack <= y <= law.gamma_max + slack:
            raise DomainError(f"y={y} outside the support [{law.gamma_min}, {law.gamma_max}]")


def sop_case1(coeff: BoundCoefficients, law: SnrLaw, k: int, y_lo: float, y_hi: float) -> float:
    """Outage mass for ``y`` in ``[y_lo, y_hi]`` where ``sigma y + zeta`` stays inside the support."""
    _check_interval(law, y_lo, y_hi)
    if y_lo > y_hi:
        raise DomainError(f"need y_lo <= y_hi, got {y_lo} > {y_hi}")
    if coeff.sigma * y_hi + coeff.zeta > law.gamma_max * (1.0 + 1e-12):
        raise DomainError("sigma*y + zeta exceeds gamma_max inside the case-1 interval")
    return _sop_case1_parts(coeff, law, k, y_lo, y_hi)[0]


def _sop_case34_parts(coeff, law, k, y_lo):
    alpha, beta = eve_coefficients(k, law)
    theta = law.a ** 2 * k / (law.b + 1.0)
    span = law.gamma_max ** (law.b + 1.0) - law.gamma_min ** (law.b + 1.0)
    terms = []
    for ai, bi in zip(alpha, beta):
        scale = theta * ai * span / (bi + 1.0)
        terms.extend([scale * law.gamma_max ** (bi + 1.0), -scale * y_lo ** (bi + 1.0)])
    return math.fsum(terms), max(abs(t) for t in terms)


def sop_case34(coeff: BoundCoefficients, law: SnrLaw, k: int, y_lo: float) -> float:
    """Outage mass for ``y`` in ``[y_lo, gamma_max]`` where every ``gamma0`` is an outage."""
    _check_interval(law, y_lo)
    if y_lo >= law.gamma_max:
        return 0.0
    return _sop_case34_parts(coeff, law, k, y_lo)[0]


def sop_given_k(coeff: BoundCoefficients, law: SnrLaw, k: int, *, fallback: bool = True) -> AnalyticResult:
    """SOP bound with exactly ``K`` eavesdroppers.

    The y-axis is split at ``clamp(gamma_limit, gamma_min, gamma_max)``; this
    single rule covers every row of the case table (an empty case-1 interval
    means certain outage).  With ``fallback`` a closed form that loses more
    than six digits to cancellation (large ``K``) is replaced by ``sop_quad``.
    """
    if int(k) != k or k < 0:
        raise DomainError(f"K must be a nonnegative integer, got {k}")
    k = int(k)
    if k == 0:
        z = min(max(coeff.zeta, law.gamma_min), law.gamma_max)
        return AnalyticResult(float(snr_cdf(z, law)), Method.CLOSED_FORM, {"k": 0})

    t = min(max(gamma_limit(coeff, law), law.gamma_min), law.gamma_max)
    try:
        v1, m1 = _sop_case1_parts(coeff, law, k, law.gamma_min, t)
        v3, m3 = _sop_case34_parts(coeff, law, k, t)
        value = v1 + v3
        loss = _digit_loss(value, max(m1, m3))
    except (InvalidParameter, NonConvergent, OverflowError, ZeroDivisionError) as exc:
        if not fallback:
            raise
        return AnalyticResult(_twin_value("sop", coeff, law, k), Method.QUADRATURE,
                              {"k": k, "fallback": type(exc).__name__})
    if fallback and loss > MAX_DIGIT_LOSS:
        return AnalyticResult(_twin_value("sop", coeff, law, k), Method.QUADRATURE,
                              {"k": k, "fallback": "cancellation", "digit_loss": loss})
    detail = {"k": k, "case1": v1, "case34": v3, "y_split": t, "digit_loss": loss}
    return AnalyticResult(min(max(value, 0.0), 1.0), Method.CLOSED_FORM, detail)


# ---------------------------------------------------------------------------
# ASC closed form
# ---------------------------------------------------------------------------

def _asc_limits(coeff: BoundCoefficients, law: SnrLaw):
    if coeff.n0 != coeff.nE:
        raise DomainError("closed-form ASC assumes n0 == nE")
    if coeff.m0 > coeff.mE:
        raise DomainError("closed-form ASC assumes m0 <= mE")
    x_lo = coeff.mE * law.gamma_min / coeff.m0
    y_hi = coeff.m0 * law.gamma_max / coeff.mE
    if x_lo >= law.gamma_max:
        raise DegenerateRegion("positive-secrecy region is empty")
    return x_lo, y_hi


@functools.lru_cache(maxsize=8192)
def _lp_asc(tau: float, p: float, q: float) -> float:
    # the exponents beta_i repeat across K, so a mixture reuses most LP values
    return lp(tau, p, q, max_digit_loss=ASC_LP_DIGIT_LOSS)


class _LpCache:
    """LP values on the fixed interval shared by both ASC parts."""

    def __init__(self, coeff, law):
        self.p = coeff.mE * law.gamma_min / coeff.n0
        self.q = coeff.m0 * law.gamma_max / coeff.n0

    def __call__(self, tau: float) -> float:
        return _lp_asc(float(tau), self.p, self.q)


def _asc_cs1_parts(coeff, law, k, cache=None):
    x_lo, _ = _asc_limits(coeff, law)
    cache = cache or _LpCache(coeff, law)
    alpha, beta = eve_coefficients(k, law)
    b1 = law.b + 1.0
    gmin, gmax = law.gamma_min, law.gamma_max
    ratio = coeff.m0 / coeff.mE
    scale_n = coeff.n0 / coeff.m0
    ln_n0 = math.log(coeff.n0)
    terms = []
    for ai, bi in zip(alpha, beta):
        kappa = bi + law.b + 2.0
        w = law.a ** 2 * k * ai / (bi + 1.0)
        g1 = ratio ** (bi + 1.0)
        g2 = gmin ** (bi + 1.0)
        terms.extend([
            w * g1 * ln_n0 * gmax ** kappa / kappa,
            -w * g1 * ln_n0 * x_lo ** kappa / kappa,
            w * g1 * scale_n ** kappa * cache(kappa - 1.0),
            -w * g2 * ln_n0 * gmax ** b1 / b1,
            w * g2 * ln_n0 * x_lo ** b1 / b1,
            -w * g2 * scale_n ** b1 * cache(law.b),
        ])
    return math.fsum(terms), max(abs(t) for t in terms)


def _asc_cs2_parts(coeff, law, k, cache=None):
    _, y_hi = _asc_limits(coeff, law)
    cache = cache or _LpCache(coeff, law)
    alpha, beta = eve_coefficients(k, law)
    b1 = law.b + 1.0
    gmin, gmax = law.gamma_min, law.gamma_max
    ratio = coeff.mE / coeff.m0
    scale_n = coeff.nE / coeff.mE
    ln_ne = math.log(coeff.nE)
    terms = []
    for ai, bi in zip(alpha, beta):
        kappa = bi + law.b + 2.0
        w = law.a ** 2 * k * ai / b1
        g1 = gmax ** b1
        g2 = ratio ** b1
        terms.extend([
            w * g1 * ln_ne * y_hi ** (bi + 1.0) / (bi + 1.0),
            -w * g1 * ln_ne * gmin ** (bi + 1.0) / (bi + 1.0),
            w * g1 * scale_n ** (bi + 1.0) * cache(bi),
            -w * g2 * ln_ne * y_hi ** kappa / kappa,
            w * g2 * ln_ne * gmin ** kappa / kappa,
            -w * g2 * scale_n ** kappa * cache(kappa - 1.0),
        ])
    return math.fsum(terms), max(abs(t) for t in terms)


def asc_cs1(coeff: BoundCoefficients, law: SnrLaw, k: int) -> float:
    """``E[ln(m0 g0 + n0); positive secrecy]`` in nats (first closed-form part)."""
    return _asc_cs1_parts(coeff, law, k)[0]


def asc_cs2(coeff: BoundCoefficients, law: SnrLaw, k: int) -> float:
    """``E[ln(mE gE + nE); positive secrecy]`` in nats (second closed-form part)."""
    return _asc_cs2_parts(coeff, law, k)[0]


def _asc_no_eavesdropper(coeff: BoundCoefficients, law: SnrLaw) -> float:
    # with gammaE = 0 the capacity is 0.5 log2(n0/nE + m0 x/nE) > 0 for n0 >= nE
    if coeff.n0 < coeff.nE:
        raise DomainError("closed-form ASC assumes n0 >= nE")
    s = coeff.n0 / coeff.m0
    integral = law.a * s ** (law.b + 1.0) * lp(law.b, law.gamma_min / s, law.gamma_max / s,
                                              max_digit_loss=ASC_LP_DIGIT_LOSS)
    return (math.log(coeff.n0 / coeff.nE) + integral) / (2.0 * _LN2)


def asc_given_k(coeff: BoundCoefficients, law: SnrLaw, k: int, *, fallback: bool = True) -> AnalyticResult:
    """ASC bound in bit/s/Hz with exactly ``K`` eavesdroppers."""
    if int(k) != k or k < 0:
        raise DomainError(f"K must be a nonnegative integer, got {k}")
    k = int(k)
    if k == 0:
        return AnalyticResult(_asc_no_eavesdropper(coeff, law), Method.CLOSED_FORM, {"k": 0})
    try:
        cache = _LpCache(coeff, law)
        c1, m1 = _asc_cs1_parts(coeff, law, k, cache)
        c2, m2 = _asc_cs2_parts(coeff, law, k, cache)
    except DegenerateRegion:
        return AnalyticResult(0.0, Method.CLOSED_FORM, {"k": k, "degenerate": True})
    except (InvalidParameter, NonConvergent, OverflowError, ZeroDivisionError) as exc:
        if not fallback:
            raise
        return AnalyticResult(_twin_value("asc", coeff, law, k), Method.QUADRATURE,
                              {"k": k, "fallback": type(exc).__name__})
    diff = c1 - c2
    loss = _digit_loss(diff, max(m1, m2))
    if fallback and loss > MAX_DIGIT_LOSS:
        return AnalyticResult(_twin_value("asc", coeff, law, k), Method.QUADRATURE,
                              {"k": k, "fallback": "cancellation", "digit_loss": loss})
    detail = {"k": k, "cs1": c1, "cs2": c2, "digit_loss": loss}
    return AnalyticResult(max(diff / (2.0 * _LN2), 0.0), Method.CLOSED_FORM, detail)


# ---------------------------------------------------------------------------
# Poisson mixture over the eavesdropper count
# ---------------------------------------------------------------------------

def poisson_weights(mu: float, k_max: int = 1, include_empty: bool = True, tail: float = POISSON_TAIL):
    """``[(K, P(K))]`` extended past ``k_max`` until the neglected mass is below ``tail``.

    With ``include_empty=False`` the count is conditioned on ``K >= 1``.
    """
    if not (math.isfinite(mu) and mu >= 0.0):
        raise DomainError(f"Poisson mean must be >= 0, got {mu}")
    if mu == 0.0:
        if not include_empty:
            raise DomainError("cannot condition on K >= 1 when the intensity is zero")
        return [(0, 1.0)], 0.0
    dist = stats.poisson(mu)
    norm = 1.0 if include_empty else -math.expm1(-mu)
    start = 0 if include_empty else 1
    out = []
    k = start
    while True:
        out.append((k, float(dist.pmf(k)) / norm))
        rest = float(dist.sf(k)) / norm
        if k >= k_max and rest < tail:
            return out, rest
        k += 1


def _mixture(fn, coeff, law, lam, radius, k_max, include_empty, fallback, clamp_top):
    r = law.radius if radius is None else float(radius)
    if lam < 0.0:
        raise DomainError(f"intensity must be >= 0, got {lam}")
    mu = lam * math.pi * r * r
    weights, rest = poisson_weights(mu, k_max, include_empty)
    parts = []
    quad_k = []
    for k, w in weights:
        res = fn(coeff, law, k, fallback=fallback)
        parts.append(w * res.value)
        if res.method is Method.QUADRATURE:
            quad_k.append(k)
    value = max(math.fsum(parts), 0.0)
    if clamp_top:
        value = min(value, 1.0)
    detail = {"mu": mu, "k_max": weights[-1][0], "tail_mass": rest, "quadrature_k": quad_k}
    return AnalyticResult(value, Method.CLOSED_FORM, detail)


def sop(coeff: BoundCoefficients, law: SnrLaw, lam: float, radius: Optional[float] = None,
        k_max: int = 1, *, include_empty: bool = True, fallback: bool = True) -> AnalyticResult:
    """SOP bound averaged over ``K ~ Poisson(lam pi R**2)``."""
    return _mixture(sop_given_k, coeff, law, lam, radius, k_max, include_empty, fallback, True)


def asc(coeff: BoundCoefficients, law: SnrLaw, lam: float, radius: Optional[float] = None,
        k_max: int = 1, *, include_empty: bool = True, fallback: bool = True) -> AnalyticResult:
    """ASC bound averaged over ``K ~ Poisson(lam pi R**2)``."""
    return _mixture(asc_given_k, coeff, law, lam, radius, k_max, include_empty, fallback, False)


@functools.lru_cache(maxsize=1024)
def _twin_value(quantity: str, coeff: BoundCoefficients, law: SnrLaw, k: int) -> float:
    # fallback results are reused across the intensities of a sweep
    twin = sop_quad if quantity == "sop" else asc_quad
    return twin(coeff, law, k).value


# ---------------------------------------------------------------------------
# Nested-quadrature twins
# ---------------------------------------------------------------------------
# Both variables are integrated in log space (power-law densities become
# smooth exponentials); the eavesdropper density uses K F**(K-1) f.

def _f0_log(u, law):
    x = np.exp(u)
    return law.a * x ** (law.b + 1.0)


def _fe(y, law, k):
    f = law.a * y ** law.b
    if k == 1:
        return f
    cdf = law.a * y ** law.c / law.c + law.eps
    return k * np.clip(cdf, 0.0, None) ** (k - 1) * f


def _inner_mass(lo: float, hi: float, law: SnrLaw) -> float:
    if hi <= lo:
        return 0.0
    return adaptive_quad(lambda u: _f0_log(u, law), math.log(lo), math.log(hi), QUAD_TOL, vectorized=True).value


def sop_quad(coeff: BoundCoefficients, law: SnrLaw, k: int) -> AnalyticResult:
    """``P(gamma0 <= sigma gammaE + zeta)`` by nested adaptive quadrature."""
    gmin, gmax = law.gamma_min, law.gamma_max
    if k == 0:
        top = min(max(coeff.zeta, gmin), gmax)
        return AnalyticResult(min(_inner_mass(gmin, top, law), 1.0), Method.QUADRATURE, {"k": 0})

    def outer(v):
        y = np.exp(v)
        inner = np.array([_inner_mass(gmin, min(coeff.sigma * yi + coeff.zeta, gmax), law) for yi in y])
        return _fe(y, law, k) * y * inner

    t = gamma_limit(coeff, law)
    points = [math.log(t)] if gmin < t < gmax else None
    res = adaptive_quad(outer, math.log(gmin), math.log(gmax), QUAD_TOL, points=points, vectorized=True)
    return AnalyticResult(min(max(res.value, 0.0), 1.0), Method.QUADRATURE,
                          {"k": k, "abs_error": res.abs_error_estimate})


def asc_quad(coeff: BoundCoefficients, law: SnrLaw, k: int, *, boundary_scale: float = 1.0) -> AnalyticResult:
    """ASC bound by nested adaptive quadrature of the capacity expectation.

    The integration region is ``m0 x + n0 > mE y + nE`` (positive secrecy);
    ``boundary_scale`` multiplies the boundary slope ``mE / m0`` and exists to
    probe the sensitivity of the result to the region choice.
    """
    gmin, gmax = law.gamma_min, law.gamma_max
    m0, n0, mE, nE = coeff.m0, coeff.n0, coeff.mE, coeff.nE
    slope = mE / m0 * boundary_scale

    def capacity_nats(x, y_term):
        return np.log(m0 * x + n0) - y_term

    if k == 0:
        y_term = math.log(nE)

        def integrand0(u):
            x = np.exp(u)
            return _f0_log(u, law) * np.maximum(capacity_nats(x, y_term), 0.0)

        res = adaptive_quad(integrand0, math.log(gmin), math.log(gmax), QUAD_TOL, vectorized=True)
        return AnalyticResult(res.value / (2.0 * _LN2), Method.QUADRATURE, {"k": 0})

    def boundary(y):
        return slope * y + (nE - n0) / m0

    def inner(y):
        lo = max(boundary(y), gmin)
        if lo >= gmax:
            return 0.0
        y_term = math.log(mE * y + nE)

        def integrand(u):
            x = np.exp(u)
            return _f0_log(u, law) * np.maximum(capacity_nats(x, y_term), 0.0)

        return adaptive_quad(integrand, math.log(lo), math.log(gmax), QUAD_TOL, vectorized=True).value

    y_top = min(gmax, (gmax - (nE - n0) / m0) / slope)
    if y_top <= gmin:
        return AnalyticResult(0.0, Method.QUADRATURE, {"k": k, "degenerate": True})

    def outer(v):
        y = np.exp(v)
        vals = np.array([inner(yi) for yi in y])
        return _fe(y, law, k) * y * vals

    y_corner = (gmin - (nE - n0) / m0) / slope
    points = [math.log(y_corner)] if gmin < y_corner < y_top else None
    res = adaptive_quad(outer, math.log(gmin), math.log(y_top), QUAD_TOL, points=points, vectorized=True)
    return AnalyticResult(max(res.value, 0.0) / (2.0 * _LN2), Method.QUADRATURE,
                          {"k": k, "abs_error": res.abs_error_estimate / (2.0 * _LN2)})
