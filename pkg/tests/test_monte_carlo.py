import math
from dataclasses import replace

import numpy as np
import pytest
from scipy import stats

from vlc_secrecy.errors import DomainError
from vlc_secrecy.monte_carlo import (
    BLOCK,
    McConfig,
    McEstimate,
    estimate_asc,
    estimate_sop,
    outage_threshold_event,
    sample_eavesdroppers,
    sample_receiver_radius,
    simulate,
    snr_from_radius,
)
from vlc_secrecy.secrecy_analytics import asc_given_k, bound_coefficients, sop
from vlc_secrecy.vlc_model import BoundKind, SystemParams, snr_at_radius, snr_law

UPPER, LOWER = BoundKind.UPPER, BoundKind.LOWER


class FixedUniform:
    def __init__(self, value):
        self.value = value

    def random(self, size=None):
        return self.value if size is None else np.full(size, self.value)


@pytest.mark.parametrize("kwargs", [{"trials": 0}, {"workers": 0}, {"seed": -1}, {"seed": 2 ** 64}, {"trials": 2.5}])
def test_config_validation(kwargs):
    with pytest.raises(DomainError):
        McConfig(**kwargs)


def test_receiver_radius_endpoints():
    assert sample_receiver_radius(FixedUniform(0.0), 5.0) == 0.0
    r = sample_receiver_radius(FixedUniform(np.nextafter(1.0, 0.0)), 5.0)
    assert r < 5.0 and r == pytest.approx(5.0)


def test_receiver_radius_ks():
    rng = np.random.default_rng(2024)
    r = sample_receiver_radius(rng, 5.0, 1_000_000)
    ks = stats.kstest(r, lambda x: np.clip(x / 5.0, 0, 1) ** 2).statistic
    assert ks < 0.002


def test_eavesdropper_count_moments():
    rng = np.random.default_rng(99)
    assert all(len(sample_eavesdroppers(0.0, 5.0, rng)) == 0 for _ in range(100))
    mu = 0.05 * math.pi * 25
    counts = np.array([len(sample_eavesdroppers(0.05, 5.0, rng)) for _ in range(1_000_000)])
    head = counts[:100_000]
    assert abs(head.mean() - mu) < 3 * head.std(ddof=1) / math.sqrt(head.size)
    assert abs(counts.var(ddof=1) / counts.mean() - 1.0) < 0.05
    radii = sample_eavesdroppers(0.5, 5.0, rng)
    assert np.all((radii >= 0) & (radii < 5.0))
    with pytest.raises(DomainError):
        sample_eavesdroppers(-0.1, 5.0, rng)


def test_snr_from_radius_matches_law():
    params = SystemParams()
    law = snr_law(params)
    r = np.array([0.0, 1.0, 3.3, 5.0])
    assert np.allclose(snr_from_radius(r, params), snr_at_radius(r, law), rtol=1e-12)
    assert snr_from_radius(np.array([np.inf]), params)[0] == 0.0
    scaled = replace(params, c_rf=2 * params.default_rf_constant)
    assert snr_from_radius(np.array([1.0]), scaled)[0] == pytest.approx(2 * snr_from_radius(np.array([1.0]), params)[0])


def test_sampled_snr_ks():
    params = SystemParams()
    law = snr_law(params)
    rng = np.random.default_rng(7)
    g = snr_from_radius(sample_receiver_radius(rng, params.room_radius, 1_000_000), params)
    assert stats.kstest(g, law.cdf).statistic < 0.002


def test_trivial_events():
    cfg = McConfig(trials=5000, seed=1)
    none = SystemParams(eve_intensity=0.0, target_rate=0.0)
    assert estimate_sop(none, LOWER, cfg).mean == 0.0
    certain = SystemParams(target_rate=20.0)
    for kind in BoundKind:
        est = estimate_sop(certain, kind, cfg)
        assert est.mean == 1.0 and est.std_error == 0.0


def test_no_eavesdropper_asc_matches_closed_form():
    params = SystemParams(eve_intensity=0.0)
    law = snr_law(params)
    est = estimate_asc(params, UPPER, McConfig(trials=200_000, seed=5))
    ref = asc_given_k(bound_coefficients(UPPER, 1.0), law, 0).value
    assert abs(est.mean - ref) < 3 * est.std_error


@pytest.mark.parametrize("seed", [0, 1, 2, 12345])
def test_common_random_number_dominance(seed):
    est = simulate(SystemParams(), McConfig(trials=50_000, seed=seed))
    assert est["asc_upper"].mean >= est["asc_lower"].mean
    assert est["sop_upper"].mean >= est["sop_lower"].mean


def test_deterministic_across_workers():
    params = SystemParams(eve_intensity=0.1)
    trials = 3 * BLOCK + 123
    one = simulate(params, McConfig(trials=trials, seed=42, workers=1))
    many = simulate(params, McConfig(trials=trials, seed=42, workers=3))
    again = simulate(params, McConfig(trials=trials, seed=42, workers=1))
    assert one == many == again
    other = simulate(params, McConfig(trials=trials, seed=43))
    assert other["asc_upper"].mean != one["asc_upper"].mean


def test_estimate_fields():
    est = estimate_sop(SystemParams(), UPPER, McConfig(trials=1000, seed=9))
    assert isinstance(est, McEstimate)
    assert est.trials == 1000 and est.seed == 9
    assert 0.0 <= est.mean <= 1.0
    assert est.std_error == pytest.approx(math.sqrt(est.mean * (1 - est.mean) / 999), rel=1e-9)


def test_intensity_coupling_is_monotone():
    # inverse-CDF counts: a larger intensity never removes an eavesdropper
    cfg = McConfig(trials=40_000, seed=3)
    vals = [simulate(SystemParams(eve_intensity=lam), cfg)["sop_lower"].mean for lam in (0.01, 0.02, 0.04, 0.08)]
    assert vals == sorted(vals)


def test_fixed_count_symmetry():
    est = simulate(SystemParams(target_rate=0.0), McConfig(trials=200_000, seed=8), fixed_count=1)
    assert abs(est["sop_lower"].mean - 0.5) < 3 * est["sop_lower"].std_error
    with pytest.raises(DomainError):
        simulate(SystemParams(), McConfig(trials=10), fixed_count=-1)


def test_conditioned_on_at_least_one():
    params = SystemParams(eve_intensity=0.01)
    law = snr_law(params)
    est = estimate_sop(params, UPPER, McConfig(trials=200_000, seed=4), include_empty=False)
    ref = sop(bound_coefficients(UPPER, 1.0), law, 0.01, include_empty=False).value
    assert abs(est.mean - ref) < 3 * est.std_error
    with pytest.raises(DomainError):
        simulate(SystemParams(eve_intensity=0.0), McConfig(trials=10), include_empty=False)


def test_outage_event_helper():
    params = SystemParams()
    coeff = bound_coefficients(LOWER, params.target_rate)
    g0 = np.array([10.0, 100.0])
    ge = np.array([5.0, 5.0])
    assert outage_threshold_event(params, LOWER, g0, ge).tolist() == [True, False]
    assert coeff.sigma * 5.0 + coeff.zeta == 23.0
