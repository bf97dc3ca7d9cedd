"""Acceptance suite: one test per primary criterion, each printing a PASS/FAIL line."""
import json
import math
import time

import numpy as np
import pytest
from scipy import stats

from conftest import ACCEPTANCE_LINES
from vlc_secrecy.cli import main
from vlc_secrecy.monte_carlo import McConfig, sample_receiver_radius, simulate, snr_from_radius
from vlc_secrecy.secrecy_analytics import (
    Method,
    asc,
    asc_given_k,
    asc_quad,
    bound_coefficients,
    sop,
    sop_given_k,
    sop_quad,
)
from vlc_secrecy.special_functions import adaptive_quad, gauss_2f1, lerch_phi, lp, lp_closed_form, lp_digit_loss, lp_quadrature
from vlc_secrecy.vlc_model import BoundKind, SystemParams, max_eve_snr_pdf, order_statistic_pdf, snr_law

RADII = (3.0, 5.0, 8.0)
RATES = (0.1, 0.5, 1.0, 2.0, 4.0)
COUNTS = (1, 2, 3, 5, 8)
LAMBDAS = (0.01, 0.05, 0.1, 0.2)
MC_TRIALS = 1_000_000
SEED = 20261016
QUANTITIES = ("sop_upper", "sop_lower", "asc_upper", "asc_lower")


def report(name, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def closed_forms(params, include_empty=True):
    law = snr_law(params)
    out = {}
    for kind in BoundKind:
        coeff = bound_coefficients(kind, params.target_rate)
        lam = params.eve_intensity
        out[f"sop_{kind.value}"] = sop(coeff, law, lam, include_empty=include_empty).value
        out[f"asc_{kind.value}"] = asc(coeff, law, lam, include_empty=include_empty).value
    return out


@pytest.fixture(scope="module")
def sweeps():
    """20-point lambda and radius sweeps, closed form and Monte Carlo (shared draws per point)."""
    cfg = McConfig(trials=MC_TRIALS, seed=SEED)
    result = {}
    for var, grid in (("lambda", np.linspace(0.01, 0.2, 20)), ("radius", np.linspace(3.0, 8.0, 20))):
        rows = []
        for v in grid:
            params = SystemParams(eve_intensity=float(v)) if var == "lambda" else SystemParams(room_radius=float(v))
            est = simulate(params, cfg)
            rows.append({"value": float(v), "cf": closed_forms(params), "mc": {q: est[q].mean for q in QUANTITIES}})
        result[var] = rows
    return result


def test_oracle_equivalence_sop():
    start = time.perf_counter()
    worst, where = 0.0, None
    methods = set()
    for radius in RADII:
        law = snr_law(SystemParams(room_radius=radius))
        for kind in BoundKind:
            for cth in RATES:
                coeff = bound_coefficients(kind, cth)
                for k in COUNTS:
                    cf = sop_given_k(coeff, law, k, fallback=False)
                    methods.add(cf.method)
                    ref = sop_quad(coeff, law, k).value
                    err = abs(cf.value - ref) / abs(ref)
                    if err >= worst:
                        worst, where = err, (radius, kind.value, cth, k)
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-6 and methods == {Method.CLOSED_FORM} and elapsed < 60.0
    report("oracle equivalence (SOP)", ok,
           f"max rel err {worst:.2e} at (R, bound, C_th, K) = {where}, {elapsed:.1f} s")


def test_oracle_equivalence_asc():
    start = time.perf_counter()
    worst, where = 0.0, None
    methods = set()
    for radius in RADII:
        law = snr_law(SystemParams(room_radius=radius))
        for kind in BoundKind:
            for cth in RATES:
                coeff = bound_coefficients(kind, cth)
                for k in COUNTS:
                    cf = asc_given_k(coeff, law, k, fallback=False)
                    methods.add(cf.method)
                    ref = asc_quad(coeff, law, k).value
                    # relative 1e-6, or absolute 1e-9 once the ASC is below 1e-3
                    err = abs(cf.value - ref) / max(abs(ref), 1e-3)
                    if err >= worst:
                        worst, where = err, (radius, kind.value, cth, k)
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-6 and methods == {Method.CLOSED_FORM} and elapsed < 120.0
    report("oracle equivalence (ASC)", ok,
           f"max scaled err {worst:.2e} at (R, bound, C_th, K) = {where}, {elapsed:.1f} s")


def test_monte_carlo_concordance():
    start = time.perf_counter()
    worst, where, checks = 0.0, None, 0
    failures = []
    # both mixture conventions: with the empty-room term and conditioned on K >= 1
    for lam in LAMBDAS:
        params = SystemParams(eve_intensity=lam)
        for include_empty in (True, False):
            ref = closed_forms(params, include_empty)
            est = simulate(params, McConfig(trials=MC_TRIALS, seed=SEED), include_empty=include_empty)
            for q in QUANTITIES:
                z = abs(est[q].mean - ref[q]) / est[q].std_error
                checks += 1
                if z > 3.0:
                    failures.append((lam, include_empty, q, z))
                if z >= worst:
                    worst, where = z, (lam, include_empty, q)
    elapsed = time.perf_counter() - start
    ok = not failures and checks == 32 and elapsed < 300.0
    report("Monte Carlo concordance", ok,
           f"{checks - len(failures)}/{checks} within 3 SE, worst {worst:.2f} SE at {where}, {elapsed:.1f} s")


def test_distribution_suite():
    cdf_err = norm_err = ident_err = 0.0
    for radius in RADII:
        law = snr_law(SystemParams(room_radius=radius))
        lo = law.a * law.gamma_min ** law.c / law.c + law.eps
        hi = law.a * law.gamma_max ** law.c / law.c + law.eps
        cdf_err = max(cdf_err, abs(lo), abs(hi - 1.0), abs(float(law.cdf(law.gamma_min))),
                      abs(float(law.cdf(law.gamma_max)) - 1.0))
        u_lo, u_hi = math.log(law.gamma_min), math.log(law.gamma_max)
        mass0 = adaptive_quad(lambda u: law.a * np.exp(u * (law.b + 1.0)), u_lo, u_hi, 1e-12, vectorized=True).value
        norm_err = max(norm_err, abs(mass0 - 1.0))
        xs = np.geomspace(law.gamma_min, law.gamma_max, 60)
        for k in range(1, 21):
            a = max_eve_snr_pdf(xs, k, law)
            b = order_statistic_pdf(xs, k, law)
            ident_err = max(ident_err, float(np.max(np.abs(a - b)) / np.max(np.abs(b))))
            if k in (1, 5, 20):
                f = lambda u: np.array([max_eve_snr_pdf(float(np.exp(v)), k, law) * np.exp(v) for v in u])
                mass = adaptive_quad(f, u_lo, u_hi, 1e-12, vectorized=True).value
                norm_err = max(norm_err, abs(mass - 1.0))

    params = SystemParams()
    law = snr_law(params)
    rng = np.random.default_rng(SEED)
    g = snr_from_radius(sample_receiver_radius(rng, params.room_radius, MC_TRIALS), params)
    ks = stats.kstest(g, law.cdf).statistic

    ok = cdf_err <= 1e-12 and norm_err <= 1e-9 and ident_err <= 1e-10 and ks < 0.002
    report("distribution suite", ok,
           f"cdf endpoints {cdf_err:.1e}, pdf normalisation {norm_err:.1e}, "
           f"order-statistic identity {ident_err:.1e} (K<=20), KS {ks:.5f}")


def test_bound_ordering(sweeps):
    worst = -math.inf
    points = 0
    for radius in RADII:
        law = snr_law(SystemParams(room_radius=radius))
        for cth in RATES:
            up_c, lo_c = bound_coefficients(BoundKind.UPPER, cth), bound_coefficients(BoundKind.LOWER, cth)
            for k in (0,) + COUNTS:
                worst = max(worst, sop_given_k(lo_c, law, k).value - sop_given_k(up_c, law, k).value,
                            asc_given_k(lo_c, law, k).value - asc_given_k(up_c, law, k).value)
                points += 1
    for rows in sweeps.values():
        for row in rows:
            for src in ("cf", "mc"):
                vals = row[src]
                worst = max(worst, vals["sop_lower"] - vals["sop_upper"], vals["asc_lower"] - vals["asc_upper"])
                points += 1
    ok = worst <= 1e-12
    report("bound ordering", ok, f"max (lower - upper) {worst:.2e} over {points} evaluated points")


def test_trend_reproduction(sweeps):
    worst = math.inf
    where = None
    for var, rows in sweeps.items():
        for src in ("cf", "mc"):
            for q in QUANTITIES:
                vals = np.array([row[src][q] for row in rows])
                steps = np.diff(vals) if q.startswith("sop") else -np.diff(vals)
                if steps.min() < worst:
                    worst, where = float(steps.min()), (var, src, q)
    ok = worst >= 0.0
    report("trend reproduction", ok,
           f"SOP nondecreasing / ASC nonincreasing in lambda and R (20 points, 16 curves); "
           f"smallest step {worst:.2e} on {where}")


def test_symmetry_anchor():
    params = SystemParams(target_rate=0.0)
    law = snr_law(params)
    coeff = bound_coefficients(BoundKind.LOWER, 0.0)
    cf = sop_given_k(coeff, law, 1, fallback=False).value
    quad = sop_quad(coeff, law, 1).value
    est = simulate(params, McConfig(trials=MC_TRIALS, seed=SEED), fixed_count=1)["sop_lower"]
    z = abs(est.mean - 0.5) / est.std_error
    ok = abs(cf - 0.5) <= 1e-12 and abs(quad - 0.5) <= 1e-8 and z <= 3.0
    report("symmetry anchor", ok,
           f"closed form {cf!r}, quadrature {quad!r}, Monte Carlo {est.mean} ({z:.2f} SE from 1/2)")


def _euler_2f1(p1, p2, q, z):
    e = q - p2

    def head(s):
        t = s ** (1.0 / p2)
        return (1.0 - t) ** (e - 1.0) * (1.0 - z * t) ** (-p1) / p2

    def tail(s):
        t = 1.0 - s ** (1.0 / e)
        return t ** (p2 - 1.0) * (1.0 - z * t) ** (-p1) / e

    points = [min(1.0 / -z, 0.5) ** p2] if -z > 2.0 else None
    lower = adaptive_quad(head, 0.0, 0.5 ** p2, 1e-12, points=points, vectorized=True).value
    upper = adaptive_quad(tail, 0.0, 0.5 ** e, 1e-12, vectorized=True).value
    return math.exp(math.lgamma(q) - math.lgamma(p2) - math.lgamma(e)) * (lower + upper)


def test_special_function_suite():
    rng = np.random.default_rng(SEED)
    f21 = 0.0
    for _ in range(200):
        p1 = rng.uniform(-2.0, 3.0)
        p2 = rng.uniform(0.1, 3.0)
        q = p2 + rng.uniform(0.1, 3.0)
        z = -(10.0 ** rng.uniform(-3.0, 12.0)) if rng.random() > 0.05 else 0.0
        ref = _euler_2f1(p1, p2, q, z) if z else 1.0
        f21 = max(f21, abs(gauss_2f1(p1, p2, q, z) - ref) / abs(ref))

    lerch = 0.0
    for _ in range(300):
        z = -(10.0 ** rng.uniform(-4.0, 12.0))
        a = rng.uniform(0.01, 8.0)
        lerch = max(lerch, abs((lerch_phi(z, a) - z * lerch_phi(z, a + 1.0)) * a - 1.0))

    additivity = 0.0
    for _ in range(200):
        tau = rng.uniform(-2.5, 3.0)
        p = 10.0 ** rng.uniform(-3.0, 8.0)
        q = p * 10.0 ** rng.uniform(0.0, 4.0)
        m = p + rng.random() * (q - p)
        whole = lp(tau, p, q)
        additivity = max(additivity, abs(whole - lp(tau, p, m) - lp(tau, m, q)) / abs(whole))

    anchors = max(abs(lp(0.0, 0.0, 1.0) - (2 * math.log(2) - 1)) / (2 * math.log(2) - 1),
                  abs(lp(1.0, 0.0, 1.0) - 0.25) / 0.25)

    dual = 0.0
    flagged = 0
    ends = (1e-3, 1e-1, 1.0, 1e2, 1e5, 1e10)
    for tau in (-1.5, -0.5, 0.5, 2.0):
        for i, p in enumerate(ends):
            for q in ends[i + 1:]:
                value, magnitude = lp_closed_form(tau, p, q)
                if lp_digit_loss(value, magnitude) > 6.0:
                    flagged += 1
                    continue
                dual = max(dual, abs(value - lp_quadrature(tau, p, q)) / abs(value))

    ok = f21 <= 1e-8 and lerch <= 1e-10 and additivity <= 1e-9 and anchors <= 1e-12 and dual <= 1e-8
    report("special-function suite", ok,
           f"2F1 vs Euler integral {f21:.1e}, Lerch recurrence {lerch:.1e}, LP additivity {additivity:.1e}, "
           f"LP anchors {anchors:.1e}, LP closed vs quadrature {dual:.1e} ({flagged} points flagged)")


def test_determinism(tmp_path):
    outputs = {}
    runs = {
        "verify": ["verify"],
        "mc": ["mc", "--trials", "300000", "--seed", str(SEED), "--workers", "2"],
    }
    for name, argv in runs.items():
        blobs = []
        for i in range(2):
            path = tmp_path / f"{name}{i}.out"
            code = main(argv + ["--out", str(path)])
            blobs.append((code, path.read_bytes()))
        outputs[name] = blobs
    same = all(a == b for a, b in outputs.values())
    verify_code = outputs["verify"][0][0]
    verdict = json.loads(outputs["verify"][0][1])["status"]
    ok = same and verify_code == 0 and verdict == "PASS"
    report("determinism", ok,
           f"verify and mc outputs byte-identical across repeated runs: {same}; verify status {verdict}")
