"""Seeded Monte Carlo simulation of the random-location downlink.

Per trial: the legitimate receiver is uniform on the disk, the eavesdropper
count is Poisson(lambda pi R**2) and every eavesdropper is uniform on the
disk.  Angles never matter (the SNR depends on the horizontal radius only),
so only radii are drawn.  SNRs go through the physical channel gain with the
receiver facing the LEDs (incidence angle 0).

Reproducibility.  Trials are cut into fixed blocks of ``BLOCK`` trials.  Each
block owns counter-based Philox streams keyed on ``(seed, block)``; the
radius of eavesdropper ``k`` in a block comes from its own stream
``(seed, block, k)``.  Results therefore do not depend on the worker count,
and the sample paths are coupled across intensities: a larger ``lambda``
only ever adds eavesdroppers to a trial (inverse-CDF Poisson draws).
Per-block moments are merged in block order.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import stats

from .errors import DomainError
from .secrecy_analytics import bound_coefficients
from .vlc_model import BoundKind, SystemParams, channel_gain, secrecy_capacity

BLOCK = 1 << 16
_STREAM_BASE = 0
_STREAM_EVE = 1
QUANTITIES = ("sop_upper", "sop_lower", "asc_upper", "asc_lower")


@dataclass(frozen=True)
class McConfig:
    trials: int = 1_000_000
    seed: int = 12345
    workers: int = 1

    def __post_init__(self):
        if int(self.trials) != self.trials or self.trials < 1:
            raise DomainError(f"trials must be a positive integer, got {self.trials}")
        if int(self.workers) != self.workers or self.workers < 1:
            raise DomainError(f"workers must be a positive integer, got {self.workers}")
        if int(self.seed) != self.seed or not 0 <= self.seed < 2 ** 64:
            raise DomainError(f"seed must be an unsigned 64-bit integer, got {self.seed}")


@dataclass(frozen=True)
class McEstimate:
    mean: float
    std_error: float
    trials: int
    seed: int


def _generator(seed: int, *words: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, *words])))


def sample_receiver_radius(rng: np.random.Generator, radius: float, size=None):
    """Radius of a point uniform on the disk: ``R sqrt(u)``."""
    return radius * np.sqrt(rng.random(size))


def sample_eavesdroppers(lam: float, radius: float, rng: np.random.Generator) -> np.ndarray:
    """Radii of one HPPP realisation of intensity ``lam`` on the disk."""
    if lam < 0.0:
        raise DomainError(f"intensity must be >= 0, got {lam}")
    count = rng.poisson(lam * math.pi * radius * radius)
    return sample_receiver_radius(rng, radius, count)


def snr_from_radius(r, params: SystemParams):
    """Peak SNR via the LoS channel gain; ``r = inf`` (no eavesdropper) maps to 0."""
    r = np.asarray(r, dtype=float)
    h_sq = params.ceiling_height ** 2
    finite = np.isfinite(r)
    rr = np.where(finite, r, 0.0)
    d = np.sqrt(h_sq + rr * rr)
    gain = channel_gain(d, np.arccos(params.ceiling_height / d), 0.0, params)
    scale = params.rf_constant / params.default_rf_constant
    snr = params.led_count * params.amplitude ** 2 * gain ** 2 * scale / params.noise_power_w
    return np.where(finite, snr, 0.0)


def _count_table(mu: float, include_empty: bool) -> tuple[np.ndarray, float]:
    if mu == 0.0:
        if not include_empty:
            raise DomainError("cannot condition on K >= 1 when the intensity is zero")
        return np.array([1.0]), 0.0
    # far enough that the cdf table saturates at 1.0 in double precision
    kmax = int(mu + 12.0 * math.sqrt(mu) + 40.0)
    cdf = stats.poisson.cdf(np.arange(kmax + 1), mu)
    p0 = 0.0 if include_empty else math.exp(-mu)
    return cdf, p0


def _block_moments(args):
    params, seed, block, n, include_empty, fixed_count = args
    rng = _generator(seed, block, _STREAM_BASE)
    u_rx = rng.random(n)
    u_count = rng.random(n)
    radius = params.room_radius
    if fixed_count is None:
        cdf, p0 = _count_table(params.mean_eavesdroppers, include_empty)
        counts = np.searchsorted(cdf, p0 + u_count * (1.0 - p0), side="right")
    else:
        counts = np.full(n, fixed_count)

    rmin = np.full(n, np.inf)
    for k in range(int(counts.max(initial=0))):
        col = radius * np.sqrt(_generator(seed, block, _STREAM_EVE, k).random(n))
        rmin = np.where(counts > k, np.minimum(rmin, col), rmin)

    g0 = snr_from_radius(radius * np.sqrt(u_rx), params)
    ge = snr_from_radius(rmin, params)
    cap_upper = secrecy_capacity(g0, ge, BoundKind.UPPER)
    cap_lower = secrecy_capacity(g0, ge, BoundKind.LOWER)
    rate = params.target_rate
    # SOP upper/lower are outages of the capacity lower/upper bound
    samples = {
        "sop_upper": (cap_lower <= rate).astype(float),
        "sop_lower": (cap_upper <= rate).astype(float),
        "asc_upper": cap_upper,
        "asc_lower": cap_lower,
    }
    out = {}
    for name, x in samples.items():
        mean = float(np.mean(x))
        out[name] = (n, mean, float(np.sum((x - mean) ** 2)))
    return out


def _merge(a, b):
    na, ma, sa = a
    nb, mb, sb = b
    n = na + nb
    delta = mb - ma
    return n, ma + delta * nb / n, sa + sb + delta * delta * na * nb / n


def simulate(params: SystemParams, cfg: McConfig, include_empty: bool = True,
             fixed_count: Optional[int] = None) -> dict[str, McEstimate]:
    """All four bound estimates from one set of draws (common random numbers).

    ``fixed_count`` replaces the Poisson count by a deterministic number of
    eavesdroppers, which gives the conditional-on-K quantities.
    """
    if fixed_count is not None and (int(fixed_count) != fixed_count or fixed_count < 0):
        raise DomainError(f"fixed_count must be a nonnegative integer, got {fixed_count}")
    blocks = []
    start = 0
    index = 0
    while start < cfg.trials:
        n = min(BLOCK, cfg.trials - start)
        blocks.append((params, int(cfg.seed), index, n, include_empty,
                       None if fixed_count is None else int(fixed_count)))
        start += n
        index += 1

    if cfg.workers > 1 and len(blocks) > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            parts = list(pool.map(_block_moments, blocks))
    else:
        parts = [_block_moments(b) for b in blocks]

    result = {}
    for name in QUANTITIES:
        acc = parts[0][name]
        for part in parts[1:]:
            acc = _merge(acc, part[name])
        n, mean, m2 = acc
        var = m2 / (n - 1) if n > 1 else 0.0
        result[name] = McEstimate(mean, math.sqrt(var / n), n, int(cfg.seed))
    return result


def estimate_sop(params: SystemParams, kind: BoundKind, cfg: McConfig, include_empty: bool = True) -> McEstimate:
    """Fraction of trials with ``C_s <= C_th`` for the capacity bound paired with ``kind``."""
    return simulate(params, cfg, include_empty)[f"sop_{kind.value}"]


def estimate_asc(params: SystemParams, kind: BoundKind, cfg: McConfig, include_empty: bool = True) -> McEstimate:
    """Sample mean of the ``kind`` capacity bound."""
    return simulate(params, cfg, include_empty)[f"asc_{kind.value}"]


def outage_threshold_event(params: SystemParams, kind: BoundKind, g0, ge):
    """Outage indicator written as ``g0 <= sigma ge + zeta`` (cross-check of the pairing)."""
    coeff = bound_coefficients(kind, params.target_rate)
    return np.asarray(g0) <= coeff.sigma * np.asarray(ge) + coeff.zeta
