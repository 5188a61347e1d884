import math

import numpy as np
import pytest

from asymbell.detection import NoViolationError, score_breakdown, threshold_eta_b
from asymbell.inequalities import chsh, i3322
from asymbell.optimize import (
    StateFamily,
    default_restarts,
    maximize_violation,
    minimize_over_theta,
    minimize_threshold_asym,
    minimize_threshold_symmetric,
    noise_tradeoff,
    sweep_theta,
)
from asymbell.quantum import background_noise_state, pure_entangled_state
from conftest import statevector_p00

ME = pure_entangled_state(math.pi / 4)
Q_CHSH = 1 / math.sqrt(2) - 0.5


def chsh_grid_max(psi, n, fix_alpha1=None):
    """Dense grid of CHSH values from statevector overlaps."""
    g = np.linspace(-np.pi, np.pi, n, endpoint=False)
    a1 = np.array([fix_alpha1]) if fix_alpha1 is not None else g
    A1, A2, B1, B2 = np.meshgrid(a1, g, g, g, indexing="ij", sparse=True)
    p = lambda a, b: statevector_p00(psi, a, b)
    pa1 = 0.5 * (1 + np.cos(A1) * (psi[0] ** 2 - psi[3] ** 2))
    pb1 = 0.5 * (1 + np.cos(B1) * (psi[0] ** 2 - psi[3] ** 2))
    val = p(A1, B1) + p(A1, B2) + p(A2, B1) - p(A2, B2) - pa1 - pb1
    return val.max()


def test_default_restarts():
    assert default_restarts(chsh()) == 50 and default_restarts(i3322()) == 200


def test_maximize_violation_chsh():
    res = maximize_violation(ME, chsh(), seed=1)
    assert res.objective == pytest.approx(Q_CHSH, abs=1e-5)
    assert res.converged


def test_maximize_violation_i3322():
    res = maximize_violation(ME, i3322(), seed=1)
    assert res.objective == pytest.approx(0.25, abs=1e-5)


def test_grid_scan_brackets_optimizer():
    # both parties rotating together leaves |phi+> invariant, so alpha_1 = 0 is free
    psi = np.array([1, 0, 0, 1]) / math.sqrt(2)
    grid = chsh_grid_max(psi, 72, fix_alpha1=0.0)
    res = maximize_violation(ME, chsh(), restarts=20, seed=3)
    assert grid <= res.objective + 1e-12
    assert res.objective - grid <= 1e-3


def test_product_state_has_no_violation():
    res = maximize_violation(pure_entangled_state(0), chsh(), restarts=20, seed=0)
    assert res.objective <= 1e-9
    assert chsh_grid_max(np.array([1.0, 0, 0, 0]), 24) <= 1e-12


def test_product_state_threshold_raises():
    with pytest.raises(NoViolationError):
        minimize_threshold_asym(pure_entangled_state(0), chsh(), restarts=5)


def test_restarts_validated():
    with pytest.raises(ValueError):
        minimize_threshold_asym(ME, chsh(), restarts=0)


@pytest.mark.parametrize("poly, expected", [(chsh(), 1 / math.sqrt(2)), (i3322(), 2 / 3)])
def test_asym_threshold_maximally_entangled(poly, expected):
    res = minimize_threshold_asym(ME, poly, seed=0)
    assert res.objective == pytest.approx(expected, abs=1e-4)
    assert res.x_at_local_bound


def test_result_is_reproducible_from_settings():
    res = minimize_threshold_asym(pure_entangled_state(0.3), i3322(), restarts=40, seed=5)
    b = score_breakdown(pure_entangled_state(0.3), res.settings, i3322(), res.strategy)
    for f in ("q", "m_a", "m_b", "x"):
        assert abs(getattr(b, f) - getattr(res.breakdown, f)) <= 1e-10
    assert abs(threshold_eta_b(b) - res.objective) <= 1e-10


def test_determinism():
    a = minimize_threshold_asym(pure_entangled_state(0.2), chsh(), restarts=10, seed=11)
    b = minimize_threshold_asym(pure_entangled_state(0.2), chsh(), restarts=10, seed=11)
    assert a.objective == b.objective
    assert np.array_equal(a.x, b.x)
    assert a.strategy == b.strategy


def test_pure_states_best_strategy_reaches_local_bound():
    for theta in (0.1, 0.4, math.pi / 4):
        res = minimize_threshold_asym(pure_entangled_state(theta), chsh(), restarts=20, seed=2)
        assert res.breakdown.x == pytest.approx(0.0, abs=1e-12)


def test_symmetric_chsh_maximally_entangled():
    res = minimize_threshold_symmetric(ME, chsh(), seed=0)
    assert res.objective == pytest.approx(2 / (1 + math.sqrt(2)), abs=1e-3)


def test_symmetric_chsh_not_below_i3322():
    # CHSH is never lower than I3322 in the symmetric case; at theta = pi/4 they tie
    c = minimize_threshold_symmetric(ME, chsh(), seed=0).objective
    i = minimize_threshold_symmetric(ME, i3322(), seed=0).objective
    assert i <= c + 1e-6
    assert 0.8284 - 1e-3 < i < 1


def test_symmetric_eberhard_regime():
    res = minimize_threshold_symmetric(pure_entangled_state(0.02), chsh(), seed=0)
    assert 2 / 3 < res.objective <= 0.68


def test_full_bloch_does_not_beat_planar():
    rho = background_noise_state(0.5, 0.03)
    planar = minimize_threshold_asym(rho, chsh(), restarts=30, seed=4)
    full = minimize_threshold_asym(rho, chsh(), restarts=30, seed=4, full_bloch=True)
    assert full.objective >= planar.objective - 1e-6
    assert full.objective == pytest.approx(planar.objective, abs=1e-5)


def test_eta_a_below_one_raises_threshold():
    perfect = minimize_threshold_asym(ME, chsh(), restarts=30, seed=0).objective
    lossy = minimize_threshold_asym(ME, chsh(), restarts=30, seed=0, eta_a=0.95).objective
    assert perfect < lossy < 1


def test_sweep_pure_is_monotone():
    grid = [math.pi / 4, 0.5, 0.3, 0.15, 0.05]
    pts = sweep_theta(chsh(), StateFamily(), grid, restarts=20, seed=0)
    thr = [p.threshold for p in pts]
    assert all(a > b for a, b in zip(thr, thr[1:]))
    for p in pts:
        assert abs(p.threshold - 1 / (1 - p.q / p.m_a)) <= 1e-8


def test_sweep_background_has_interior_minimum():
    grid = np.geomspace(math.pi / 4, 0.02, 10)
    pts = sweep_theta(chsh(), StateFamily("background", p=0.03), grid, restarts=20, seed=0)
    thr = np.array([p.threshold if np.isfinite(p.threshold) else 2.0 for p in pts])
    k = int(np.argmin(thr))
    assert 0 < k < len(grid) - 1
    assert thr[0] > thr[k] and thr[-1] > thr[k]


def test_sweep_rejects_empty_grid():
    with pytest.raises(ValueError):
        sweep_theta(chsh(), StateFamily(), [])


def test_tradeoff_zero_noise_matches_sweep():
    grid = [math.pi / 4, 0.4, 0.2, 0.1]
    sweep = sweep_theta(chsh(), StateFamily(), grid, restarts=15, seed=0)
    best_sweep = min(p.threshold for p in sweep)
    (pt,) = noise_tradeoff(chsh(), "background", [0.0], restarts=15, seed=0, theta_grid=grid)
    assert pt.threshold <= best_sweep + 1e-9
    assert best_sweep - pt.threshold <= 5e-3


def test_tradeoff_without_violation_records_one():
    (pt,) = noise_tradeoff(chsh(), "background", [0.5], restarts=4, seed=0,
                           theta_grid=[math.pi / 4, 0.5])
    assert pt.threshold == 1.0
    assert math.isnan(pt.q)


def test_tradeoff_independent_of_workers():
    kw = dict(restarts=6, seed=3, theta_grid=[math.pi / 4, 0.3])
    a = noise_tradeoff(chsh(), "dark", [0.0, 0.05], workers=1, **kw)
    b = noise_tradeoff(chsh(), "dark", [0.0, 0.05], workers=2, **kw)
    assert [p.threshold for p in a] == [p.threshold for p in b]


def test_minimize_over_theta_dark_counts():
    pt = minimize_over_theta(chsh(), StateFamily("dark", eps_a=0.05), restarts=20, seed=0)
    assert 0.5 < pt.threshold < 0.75
    assert pt.noise.dark_a == 0.05
