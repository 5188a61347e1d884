"""End-to-end acceptance checks with their tolerances and time budgets.

Each check prints one ``PASS``/``FAIL`` line (visible without ``-s``) and
then asserts. Run just this file with ``pytest tests/test_acceptance.py``.
"""

import io
import math
import time

import numpy as np
import pytest

from asymbell import (
    DetectionScenario,
    MeasurementSettings,
    NoDetectionStrategy,
    StateFamily,
    chsh,
    effective_value,
    i3322,
    lhv_bound_bruteforce,
    max_tolerated_noise,
    maximize_violation,
    minimize_threshold_asym,
    minimize_threshold_symmetric,
    noise_tradeoff,
    pure_entangled_state,
    score_breakdown,
    simulate,
    sweep_theta,
    threshold_eta_b,
)
from asymbell.cli import main as cli_main
from asymbell.inequalities import all_outputs
from asymbell.quantum import background_noise_state, dark_count_state, outcome_distribution
from conftest import PRINTED_ALPHA, PRINTED_BETA
from test_quantum import random_settings, random_state

ME = pure_entangled_state(math.pi / 4)


@pytest.fixture
def report(capsys):
    def _report(label, ok, detail, elapsed, limit):
        within = elapsed <= limit
        status = "PASS" if ok and within else "FAIL"
        with capsys.disabled():
            print(f"\n[{status}] {label}: {detail} ({elapsed:.2f} s, limit {limit:g} s)")
        assert ok, detail
        assert within, f"took {elapsed:.1f} s, limit {limit} s"
    return _report


def test_01_local_bounds(report):
    polys = (chsh(), i3322())
    for p in polys:
        lhv_bound_bruteforce(p)  # warm caches before timing
    t = time.perf_counter()
    bounds = [lhv_bound_bruteforce(p) for p in polys]
    per_call = (time.perf_counter() - t) / len(polys)
    report("1 local bounds", bounds == [0.0, 0.0], f"chsh={bounds[0]}, i3322={bounds[1]}",
           per_call, 1e-3)


def test_02_quantum_maxima(report):
    t = time.perf_counter()
    q_chsh = maximize_violation(ME, chsh()).objective
    q_i3322 = maximize_violation(ME, i3322()).objective
    el = time.perf_counter() - t
    ok = abs(q_chsh - (2 ** -0.5 - 0.5)) <= 1e-5 and abs(q_i3322 - 0.25) <= 1e-5
    report("2 quantum maxima", ok, f"chsh={q_chsh:.8f}, i3322={q_i3322:.8f}", el, 10)


def test_03_symmetric_chsh_threshold(report):
    t = time.perf_counter()
    thr = minimize_threshold_symmetric(ME, chsh()).objective
    el = time.perf_counter() - t
    report("3 symmetric CHSH threshold", abs(thr - 2 / (1 + math.sqrt(2))) <= 1e-3,
           f"{thr:.6f} vs 0.828427", el, 30)


def test_04_asymmetric_max_entangled(report):
    t = time.perf_counter()
    a = minimize_threshold_asym(ME, chsh()).objective
    b = minimize_threshold_asym(ME, i3322()).objective
    el = time.perf_counter() - t
    ok = abs(a - 2 ** -0.5) <= 1e-3 and abs(b - 2 / 3) <= 1e-3
    report("4 asymmetric thresholds", ok, f"chsh={a:.6f}, i3322={b:.6f}", el, 30)


def test_05_weak_entanglement_plateaus(report):
    grid = np.geomspace(math.pi / 4, 0.005, 16)
    fam = StateFamily("pure")
    t = time.perf_counter()
    a = sweep_theta(chsh(), fam, grid)[-1].threshold
    b = sweep_theta(i3322(), fam, grid)[-1].threshold
    el = time.perf_counter() - t
    ok = 0.49 <= a <= 0.51 and 0.42 <= b <= 0.44
    report("5 small-theta plateaus", ok, f"theta=0.005: chsh={a:.5f}, i3322={b:.5f}", el, 300)


def test_06_printed_angles(report):
    t = time.perf_counter()
    s = MeasurementSettings.planar(PRINTED_ALPHA, PRINTED_BETA, in_pi=True)
    bd = score_breakdown(pure_entangled_state(math.pi / 100), s, i3322(),
                         NoDetectionStrategy.zeros(3, 3))
    thr = threshold_eta_b(bd)
    el = time.perf_counter() - t
    ok = (abs(bd.q / 0.0013 - 1) <= 0.1 and abs(bd.m_a / -0.001 - 1) <= 0.1
          and abs(thr - 0.433) <= 0.005)
    report("6 theta=pi/100 example", ok,
           f"Q={bd.q:.6g}, M_A={bd.m_a:.6g}, threshold={thr:.5f}", el, 1)


def _gap(p, seed):
    """I3322 threshold minus CHSH threshold under background noise p."""
    a = noise_tradeoff(chsh(), "background", [p], seed=seed)[0].threshold
    b = noise_tradeoff(i3322(), "background", [p], seed=seed)[0].threshold
    return b - a


def test_07_background_crossover(report):
    t = time.perf_counter()
    lo, hi = 0.04, 0.08
    g_lo, g_hi = _gap(lo, 0), _gap(hi, 0)
    ok = g_lo < 0 < g_hi
    if ok:
        while hi - lo > 0.005:
            mid = (lo + hi) / 2
            lo, hi = (mid, hi) if _gap(mid, 0) < 0 else (lo, mid)
    cross = (lo + hi) / 2
    ok = ok and 0.045 <= cross <= 0.075
    el = time.perf_counter() - t
    report("7 background-noise crossover", ok,
           f"gap(0.04)={g_lo:+.4f}, gap(0.08)={g_hi:+.4f}, crossover~{cross:.4f}", el, 600)


def test_08_dark_count_tolerance(report):
    t = time.perf_counter()
    kw = dict(eta_b=0.6, upper=0.1, tol=2e-3)
    e_chsh = max_tolerated_noise(chsh(), "dark", **kw)
    e_i3322 = max_tolerated_noise(i3322(), "dark", **kw)
    el = time.perf_counter() - t
    report("8 dark-count tolerance at eta_B=0.6", e_i3322 > e_chsh,
           f"chsh eps<={e_chsh:.4f}, i3322 eps<={e_i3322:.4f}", el, 600)


def test_09_symmetric_weak_entanglement(report):
    t = time.perf_counter()
    thr = minimize_threshold_symmetric(pure_entangled_state(0.02), chsh()).objective
    el = time.perf_counter() - t
    report("9 symmetric CHSH at theta=0.02", thr <= 0.68, f"{thr:.5f} (limit 2/3)", el, 60)


def test_10_monte_carlo_consistency(report):
    t = time.perf_counter()
    hits, worst = 0, 0.0
    for seed in range(100):
        rng = np.random.default_rng([77, seed])
        poly = (chsh(), i3322())[seed % 2]
        na, nb = poly.shape
        rho = random_state(rng)
        s = random_settings(rng, na, nb, full=bool(seed % 3 == 0))
        outs = all_outputs(na), all_outputs(nb)
        strat = NoDetectionStrategy(tuple(outs[0][rng.integers(len(outs[0]))]),
                                    tuple(outs[1][rng.integers(len(outs[1]))]))
        sc = DetectionScenario(*rng.uniform(0.3, 1.0, 2))
        rep = simulate(rho, s, poly, strat, sc, 100_000, seed=seed)
        exact = effective_value(score_breakdown(rho, s, poly, strat), sc)
        z = abs(rep.bell_value - exact) / rep.std_error
        worst = max(worst, z)
        hits += z <= 4
    el = time.perf_counter() - t
    report("10 Monte Carlo consistency", hits >= 99,
           f"{hits}/100 within 4 sigma, worst {worst:.2f} sigma", el, 300)


def test_11_invariants(report):
    t = time.perf_counter()
    rng = np.random.default_rng(2006)
    failures = []
    for k in range(40):
        theta = rng.uniform(0, math.pi / 4)
        states = (pure_entangled_state(theta),
                  background_noise_state(theta, rng.uniform()),
                  dark_count_state(theta, rng.uniform(), rng.uniform()))
        for rho in states:
            m = np.asarray(rho)
            w = np.linalg.eigvalsh(m)
            if not (np.allclose(m, m.conj().T, atol=1e-12) and abs(np.trace(m) - 1) < 1e-12
                    and w.min() > -1e-12):
                failures.append(f"invalid state at theta={theta:.4f}")
            for poly in (chsh(), i3322()):
                na, nb = poly.shape
                s = random_settings(rng, na, nb, full=bool(k % 2))
                d = outcome_distribution(rho, s)
                pa = d.sum(axis=3)  # p(a | i, j), must not depend on j
                pb = d.sum(axis=2)
                if (np.abs(pa - pa[:, :1]).max() > 1e-10
                        or np.abs(pb - pb[:1]).max() > 1e-10):
                    failures.append("signalling marginals")
                for ao in all_outputs(na):
                    for bo in all_outputs(nb):
                        bd = score_breakdown(rho, s, poly, NoDetectionStrategy(tuple(ao),
                                                                               tuple(bo)))
                        if max(bd.m_a, bd.m_b, bd.x) > 1e-12:
                            failures.append(f"{poly.name}: local part above bound")

    for poly, th in ((chsh(), 0.6), (i3322(), 0.3), (chsh(), math.pi / 4)):
        rho = pure_entangled_state(th)
        r = minimize_threshold_asym(rho, poly, restarts=16)
        v = effective_value(r.breakdown, DetectionScenario(1.0, r.objective))
        r2 = minimize_threshold_symmetric(rho, poly, restarts=16)
        v2 = effective_value(r2.breakdown, DetectionScenario(r2.objective, r2.objective))
        if max(abs(v), abs(v2)) > 1e-10:
            failures.append(f"value at threshold {v:.2e}, {v2:.2e}")

    argv = ["sweep", "--ineq", "i3322", "--family", "background", "--p", "0.02",
            "--thetas", "0.7,0.4,0.2", "--restarts", "12", "--seed", "3"]
    csvs = []
    for _ in range(2):
        buf = io.StringIO()
        cli_main(argv, out=buf)
        csvs.append(buf.getvalue().encode())
    if csvs[0] != csvs[1]:
        failures.append("sweep CSV differs between identical runs")
    el = time.perf_counter() - t
    detail = "all hold" if not failures else "; ".join(sorted(set(failures)))
    report("11 invariant suites", not failures, detail, el, 60)
