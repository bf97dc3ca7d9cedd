"""Special functions behind the closed-form secrecy expressions.

Everything here is written for real arguments and the negative half-line
``z <= 0``, which is the only regime the secrecy analysis ever reaches:

* :func:`gauss_2f1` -- Gauss hypergeometric 2F1(p1, p2; q; z), z <= 0, |z| up to ~1e15
* :func:`lerch_phi` -- Lerch transcendent Phi(z, 1, a), z <= 0
* :func:`lp` -- LP(tau, p, q) = int_p^q x**tau * ln(1 + x) dx
* :func:`adaptive_quad` -- globally adaptive Gauss-Kronrod (G10/K21) quadrature

All functions are pure and thread safe.
"""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Optional

import numpy as np

from .errors import DomainError, InvalidParameter, NonConvergent

MAX_SERIES_TERMS = 10_000
MAX_SUBDIVISIONS = 2 ** 15
ABS_FLOOR = 1e-300

_EPS = np.finfo(float).eps

# Kronrod 21-point abscissae (descending, the last one is the centre) and
# weights; every second abscissa is a 10-point Gauss node.
_XGK = np.array([
    0.995657163025808080735527280689003,
    0.973906528517171720077964012084452,
    0.930157491355708226001207180059508,
    0.865063366688984510732096688423493,
    0.780817726586416897063717578345042,
    0.679409568299024406234327365114874,
    0.562757134668604683339000099272694,
    0.433395394129247190799265943165784,
    0.294392862701460198131126603103866,
    0.148874338981631210884826001129720,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.011694638867371874278064396062192,
    0.032558162307964727478818972459390,
    0.054755896574351996031381300244580,
    0.075039674810919952767043140916190,
    0.093125454583697605535065465083366,
    0.109387158802297641899210590325805,
    0.123491976262065851077996939301330,
    0.134709217311473325928054001771707,
    0.142775938577060080797094273138717,
    0.147739104901338491374841515972068,
    0.149445554002916905664936468389821,
])
_WG = np.array([
    0.066671344308688137593568809893332,
    0.149451349150580593145776339657697,
    0.219086362515982043995534934228163,
    0.269266719309996355091226921569469,
    0.295524224714752870173892994651338,
])

# Full symmetric rule laid out as 21 nodes on [-1, 1].
_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
_KWEIGHTS = np.concatenate([_WGK[:-1], _WGK[::-1]])
_GWEIGHTS = np.zeros(21)
for _j, _w in enumerate(_WG):
    # Gauss nodes sit at odd positions of _XGK: 1, 3, 5, 7, 9
    _GWEIGHTS[1 + 2 * _j] = _w
    _GWEIGHTS[19 - 2 * _j] = _w
KRONROD_DEGREE = 31


@dataclass(frozen=True)
class QuadratureResult:
    value: float
    abs_error_estimate: float
    subdivisions: int


def _gk21(f: Callable, lo: float, hi: float, vectorized: bool):
    centre = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    x = centre + half * _NODES
    if vectorized:
        fx = np.asarray(f(x), dtype=float)
        if fx.shape != x.shape:
            fx = np.broadcast_to(fx, x.shape).astype(float)
    else:
        fx = np.array([f(float(xi)) for xi in x], dtype=float)
    if not np.all(np.isfinite(fx)):
        raise DomainError(f"integrand is not finite on [{lo!r}, {hi!r}]")
    resk = float(np.dot(_KWEIGHTS, fx))
    resg = float(np.dot(_GWEIGHTS, fx))
    resabs = float(np.dot(_KWEIGHTS, np.abs(fx)))
    resasc = float(np.dot(_KWEIGHTS, np.abs(fx - 0.5 * resk)))
    value = resk * half
    err = abs((resk - resg) * half)
    resabs *= abs(half)
    resasc *= abs(half)
    # QUADPACK error heuristic
    if resasc != 0.0 and err != 0.0:
        err = resasc * min(1.0, (200.0 * err / resasc) ** 1.5)
    if resabs > np.finfo(float).tiny / (50.0 * _EPS):
        err = max(50.0 * _EPS * resabs, err)
    return value, err


def adaptive_quad(
    f: Callable,
    lo: float,
    hi: float,
    rel_tol: float = 1e-10,
    *,
    abs_tol: float = ABS_FLOOR,
    points: Optional[Iterable[float]] = None,
    limit: int = MAX_SUBDIVISIONS,
    vectorized: bool = False,
) -> QuadratureResult:
    """Integrate ``f`` over ``[lo, hi]`` by global adaptive bisection.

    The interval with the largest Kronrod error estimate is bisected until
    ``sum(err) <= max(rel_tol * |value|, abs_tol)``.  ``points`` are optional
    interior breakpoints (kinks, sharp transitions).  With ``vectorized`` the
    integrand receives a numpy array of 21 nodes per call.

    Raises NonConvergent when ``limit`` intervals are in use and the tolerance
    is still unmet.
    """
    if not rel_tol > 0.0:
        raise DomainError("rel_tol must be positive")
    if not lo <= hi:
        raise DomainError(f"need lo <= hi, got [{lo!r}, {hi!r}]")
    if lo == hi:
        return QuadratureResult(0.0, 0.0, 0)

    edges = [lo]
    if points is not None:
        edges.extend(sorted(p for p in points if lo < p < hi))
    edges.append(hi)

    heap = []
    seq = 0
    for a, b in zip(edges[:-1], edges[1:]):
        if a == b:
            continue
        val, err = _gk21(f, a, b, vectorized)
        heap.append((-err, seq, a, b, val, err))
        seq += 1
    heapq.heapify(heap)

    total = math.fsum(item[4] for item in heap)
    total_err = math.fsum(item[5] for item in heap)
    while total_err > max(rel_tol * abs(total), abs_tol):
        if len(heap) >= limit:
            raise NonConvergent(
                f"adaptive_quad: {len(heap)} subdivisions on [{lo!r}, {hi!r}], "
                f"error {total_err:.3e} vs value {total:.6e}"
            )
        _, _, a, b, val, err = heapq.heappop(heap)
        mid = 0.5 * (a + b)
        if not a < mid < b:
            raise NonConvergent(f"adaptive_quad: interval [{a!r}, {b!r}] cannot be bisected")
        v1, e1 = _gk21(f, a, mid, vectorized)
        v2, e2 = _gk21(f, mid, b, vectorized)
        heapq.heappush(heap, (-e1, seq, a, mid, v1, e1))
        heapq.heappush(heap, (-e2, seq + 1, mid, b, v2, e2))
        seq += 2
        total += (v1 + v2) - val
        total_err += (e1 + e2) - err
        if total_err <= max(rel_tol * abs(total), abs_tol):
            # running sums drift; confirm on exact sums before stopping
            total = math.fsum(item[4] for item in heap)
            total_err = math.fsum(item[5] for item in heap)

    ordered = sorted(heap, key=lambda item: item[2])
    value = math.fsum(item[4] for item in ordered)
    error = math.fsum(item[5] for item in ordered)
    return QuadratureResult(value, error, len(heap))


# ---------------------------------------------------------------------------
# Gauss hypergeometric function
# ---------------------------------------------------------------------------

_DEGENERATE_TOL = 1e-5


def _is_nonpositive_int(x: float) -> bool:
    return x <= 0.0 and x == math.floor(x)


def _rgamma(x: float) -> float:
    if _is_nonpositive_int(x):
        return 0.0
    if abs(x) < 1e-300:
        # gamma overflows here; 1/gamma(x) = x + O(x**2)
        return x
    return 1.0 / math.gamma(x)


def _series_2f1(a: float, b: float, c: float, x: float) -> float:
    """Direct power series, intended for 0 <= x <= 1/2."""
    total = 1.0
    term = 1.0
    for n in range(MAX_SERIES_TERMS):
        ratio = (a + n) * (b + n) / ((c + n) * (n + 1.0)) * x
        term *= ratio
        total += term
        if term == 0.0:
            return total
        if abs(term) <= 1e-17 * abs(total) and abs(ratio) < 0.75:
            return total
    raise NonConvergent(f"2F1 series ({a}, {b}; {c}; {x}) did not converge")


def _2f1_connection(a: float, b: float, c: float, z: float) -> float:
    """Large-|z| continuation in the variable 1/(1 - z); needs b - a non-integer."""
    t = 1.0 / (1.0 - z)
    one_minus_z = 1.0 - z
    first = 0.0
    second = 0.0
    w1 = math.gamma(b - a) * _rgamma(b) * _rgamma(c - a)
    if w1 != 0.0:
        first = w1 * one_minus_z ** (-a) * _series_2f1(a, c - b, a - b + 1.0, t)
    w2 = math.gamma(a - b) * _rgamma(a) * _rgamma(c - b)
    if w2 != 0.0:
        second = w2 * one_minus_z ** (-b) * _series_2f1(b, c - a, b - a + 1.0, t)
    return math.gamma(c) * (first + second)


def gauss_2f1(p1: float, p2: float, q: float, z: float) -> float:
    """Gauss hypergeometric function 2F1(p1, p2; q; z) for real ``z <= 0``.

    For ``-1 <= z <= 0`` the Pfaff transformation
    ``2F1(p1,p2;q;z) = (1-z)**-p1 * 2F1(p1, q-p2; q; z/(z-1))`` moves the
    argument into ``[0, 1/2]`` where the power series converges fast.  For
    ``z < -1`` the two-term continuation in ``1/(1-z)`` is used instead, so
    every series that is actually summed has argument ``<= 1/2``.  When
    ``p2 - p1`` is (within 1e-5 of) an integer the continuation has a removable
    singularity; the value is then interpolated in ``p2`` from four nearby
    regular points.
    """
    p1, p2, q, z = float(p1), float(p2), float(q), float(z)
    if _is_nonpositive_int(q):
        raise InvalidParameter(f"2F1 lower parameter q={q} is a non-positive integer")
    if not math.isfinite(z) or z > 0.0:
        raise DomainError(f"2F1 is implemented for finite z <= 0, got {z}")
    if z == 0.0 or p1 == 0.0 or p2 == 0.0:
        return 1.0
    if _is_nonpositive_int(p1) or z >= -1.0:
        # terminating or fast-converging Pfaff series
        return (1.0 - z) ** (-p1) * _series_2f1(p1, q - p2, q, z / (z - 1.0))
    if _is_nonpositive_int(p2):
        return (1.0 - z) ** (-p2) * _series_2f1(p2, q - p1, q, z / (z - 1.0))

    d = p2 - p1
    offset = d - round(d)
    if abs(offset) >= _DEGENERATE_TOL:
        return _2f1_connection(p1, p2, q, z)

    # Cubic Lagrange interpolation in p2 through offsets -2h, -h, h, 2h.
    h = _DEGENERATE_TOL
    centre = p2 - offset
    nodes = (-2.0 * h, -h, h, 2.0 * h)
    values = [_2f1_connection(p1, centre + s, q, z) for s in nodes]
    total = 0.0
    for j, sj in enumerate(nodes):
        weight = 1.0
        for k, sk in enumerate(nodes):
            if k != j:
                weight *= (offset - sk) / (sj - sk)
        total += weight * values[j]
    return total


# ---------------------------------------------------------------------------
# Lerch transcendent at s = 1
# ---------------------------------------------------------------------------

def _lerch_positive(z: float, a: float) -> float:
    x = -z
    if a < 1.0:
        # u = t**a removes the t**(a-1) endpoint singularity
        inv_a = 1.0 / a

        def integrand(u):
            return 1.0 / (1.0 + x * u ** inv_a)

        points = [x ** (-a)] if x > 1.0 else None
        res = adaptive_quad(integrand, 0.0, 1.0, 1e-13, points=points, vectorized=True)
        return res.value * inv_a

    am1 = a - 1.0

    def integrand(t):
        return t ** am1 / (1.0 + x * t)

    points = [1.0 / x] if x > 1.0 else None
    res = adaptive_quad(integrand, 0.0, 1.0, 1e-13, points=points, vectorized=True)
    return res.value


def lerch_phi(z: float, a: float) -> float:
    """Lerch transcendent ``Phi(z, 1, a) = sum_k z**k / (k + a)`` for ``z <= 0``.

    Negative ``a`` is shifted up with ``Phi(z,1,a) = 1/a + z*Phi(z,1,a+1)``;
    for ``a > 0`` the integral ``int_0^1 t**(a-1) / (1 - z t) dt`` is
    evaluated by :func:`adaptive_quad`.
    """
    z, a = float(z), float(a)
    if not math.isfinite(z) or z > 0.0:
        raise DomainError(f"lerch_phi is implemented for finite z <= 0, got {z}")
    if _is_nonpositive_int(a):
        raise InvalidParameter(f"lerch_phi parameter a={a} is zero or a negative integer")
    return _lerch_with_magnitude(z, a)[0]


def _lerch_with_magnitude(z: float, a: float) -> tuple[float, float]:
    """``Phi(z, 1, a)`` and the largest intermediate met in the shift recurrence."""
    if z == 0.0:
        return 1.0 / a, abs(1.0 / a)
    if a > 0.0:
        value = _lerch_positive(z, a)
        return value, abs(value)
    shifts = int(math.floor(-a)) + 1
    value = _lerch_positive(z, a + shifts)
    magnitude = abs(value)
    for j in range(shifts - 1, -1, -1):
        head, tail = 1.0 / (a + j), z * value
        magnitude = max(magnitude, abs(head), abs(tail))
        value = head + tail
    return value, magnitude


# ---------------------------------------------------------------------------
# LP(tau, p, q) = int_p^q x**tau ln(1 + x) dx
# ---------------------------------------------------------------------------

LP_MAX_DIGIT_LOSS = 6.0
_LP_SINGULAR_TOL = 1e-6


def _lp_endpoint_terms(tau: float, x: float) -> tuple[tuple[float, float, float], float]:
    """The three antiderivative pieces of the Lerch closed form at ``x > 0``.

    Also returns the largest magnitude involved, counting the intermediates
    of the Lerch shift recurrence, for the cancellation detector.
    """
    t1 = x ** (tau + 1.0) * math.log1p(x) / (tau + 1.0)
    poly = tau * tau * (1.0 - x) + tau * (3.0 - 2.0 * x) + 2.0
    t2 = x ** tau * poly / (tau * (tau + 2.0) * (tau + 1.0) ** 2)
    phi, phi_mag = _lerch_with_magnitude(-x, tau)
    scale = x ** tau * (-2.0 - tau) / ((tau + 1.0) * (tau + 2.0))
    t3 = scale * phi
    return (t1, t2, t3), max(abs(t1), abs(t2), abs(scale) * phi_mag)


def lp_closed_form(tau: float, p: float, q: float) -> tuple[float, float]:
    """Lerch-based closed form of LP.  Returns ``(value, largest magnitude)``.

    At ``p = 0`` (only legal for ``tau > -1``) the antiderivative's limit 0 is
    used.  Raises InvalidParameter for tau in {0, -1, -2, ...} where the form
    has vanishing denominators.
    """
    tau, p, q = float(tau), float(p), float(q)
    if _lp_singular(tau):
        raise InvalidParameter(f"LP closed form is singular at tau={tau}")
    upper, mag_q = _lp_endpoint_terms(tau, q) if q > 0.0 else ((0.0, 0.0, 0.0), 0.0)
    lower, mag_p = _lp_endpoint_terms(tau, p) if p > 0.0 else ((0.0, 0.0, 0.0), 0.0)
    terms = list(upper) + [-t for t in lower]
    return math.fsum(terms), max(mag_q, mag_p)


def _lp_singular(tau: float) -> bool:
    nearest = round(tau)
    return nearest <= 0 and abs(tau - nearest) < _LP_SINGULAR_TOL


def lp_quadrature(tau: float, p: float, q: float) -> float:
    """LP by direct adaptive quadrature of the defining integrand."""
    tau, p, q = float(tau), float(p), float(q)
    if p == q:
        return 0.0
    total = 0.0
    start = p
    if p == 0.0:
        # near the origin x**tau * ln(1+x) ~ x**(tau+1): integrate in x
        top = min(q, 1.0)
        res = adaptive_quad(lambda x: x ** tau * np.log1p(x), 0.0, top, 1e-13, vectorized=True)
        total += res.value
        start = top
    if start < q:
        # log variable keeps power laws smooth across many decades
        tp1 = tau + 1.0

        def integrand(u):
            return np.exp(tp1 * u) * np.log1p(np.exp(u))

        res = adaptive_quad(integrand, math.log(start), math.log(q), 1e-13, vectorized=True)
        total += res.value
    return total


def lp(tau: float, p: float, q: float, method: str = "auto",
       max_digit_loss: float = LP_MAX_DIGIT_LOSS) -> float:
    """``LP(tau, p, q) = int_p^q x**tau * ln(1 + x) dx``.

    ``method="auto"`` takes the Lerch closed form unless tau sits on one of its
    removable singularities or more than ``max_digit_loss`` significant digits
    are lost to cancellation between the antiderivative terms; quadrature is
    used then.
    """
    tau, p, q = float(tau), float(p), float(q)
    if p < 0.0 or p > q:
        raise DomainError(f"LP needs 0 <= p <= q, got p={p}, q={q}")
    if p == 0.0 and tau <= -1.0:
        raise DomainError(f"LP diverges at the origin for tau={tau} <= -1")
    if p == q:
        return 0.0
    if method == "quad":
        return lp_quadrature(tau, p, q)
    if method not in ("auto", "closed"):
        raise ValueError(f"unknown LP method {method!r}")
    if method == "closed":
        return lp_closed_form(tau, p, q)[0]
    if _lp_singular(tau):
        return lp_quadrature(tau, p, q)
    value, magnitude = lp_closed_form(tau, p, q)
    if lp_digit_loss(value, magnitude) > max_digit_loss:
        return lp_quadrature(tau, p, q)
    return value


def lp_digit_loss(value: float, magnitude: float) -> float:
    """Decimal digits lost when ``value`` results from terms of size ``magnitude``."""
    if not math.isfinite(value) or not math.isfinite(magnitude):
        return math.inf
    if magnitude == 0.0:
        return 0.0
    if value == 0.0:
        return math.inf
    return max(0.0, math.log10(magnitude / abs(value)))
