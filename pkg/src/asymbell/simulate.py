"""Monte Carlo simulation of a Bell test with lossy detectors."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .detection import DetectionScenario, NoDetectionStrategy
from .inequalities import BellPolynomial
from .quantum import DensityMatrix, MeasurementSettings, outcome_distribution

BATCH = 1 << 16


@dataclass(frozen=True)
class TrialRecord:
    setting_a: int
    setting_b: int
    fired_a: bool
    fired_b: bool
    outcome_a: int
    outcome_b: int


@dataclass(frozen=True)
class EstimateReport:
    bell_value: float
    std_error: float
    trials: int
    counts: np.ndarray  # (na, nb, 2, 2): counts[i, j, a, b]
    method: str = "delta"

    @property
    def setting_counts(self) -> np.ndarray:
        return self.counts.sum(axis=(2, 3))


def _batches(trials: int, seed: int):
    """Per-batch generators from counter-based sub-seeds."""
    for k, start in enumerate(range(0, trials, BATCH)):
        ss = np.random.SeedSequence(seed, spawn_key=(k,))
        yield np.random.default_rng(ss), min(BATCH, trials - start)


def _generate(dist: np.ndarray, strat: NoDetectionStrategy, sc: DetectionScenario,
              trials: int, seed: int) -> Iterator[dict[str, np.ndarray]]:
    na, nb = dist.shape[:2]
    cdf = np.cumsum(dist.reshape(na, nb, 4), axis=-1)
    alice_out = np.asarray(strat.alice_outputs)
    bob_out = np.asarray(strat.bob_outputs)
    for rng, n in _batches(trials, seed):
        i = rng.integers(na, size=n)
        j = rng.integers(nb, size=n)
        u = rng.random(n)
        k = np.minimum((u[:, None] >= cdf[i, j]).sum(axis=1), 3)
        fired_a = rng.random(n) < sc.eta_a
        fired_b = rng.random(n) < sc.eta_b
        a = np.where(fired_a, k // 2, alice_out[i])
        b = np.where(fired_b, k % 2, bob_out[j])
        yield {"i": i, "j": j, "fired_a": fired_a, "fired_b": fired_b, "a": a, "b": b}


def trial_records(rho: DensityMatrix, settings: MeasurementSettings,
                  strat: NoDetectionStrategy, sc: DetectionScenario, trials: int,
                  seed: int = 0) -> Iterator[TrialRecord]:
    """The per-trial stream behind :func:`simulate` (same seed, same trials)."""
    dist = outcome_distribution(rho, settings)
    for batch in _generate(dist, strat, sc, trials, seed):
        for row in zip(*(batch[k].tolist() for k in ("i", "j", "fired_a", "fired_b", "a", "b"))):
            yield TrialRecord(*row)


def write_trial_records(path, records) -> int:
    """Write ``i,j,fired_a,fired_b,a,b`` lines; returns the number written."""
    n = 0
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        for r in records:
            w.writerow([r.setting_a, r.setting_b, int(r.fired_a), int(r.fired_b),
                        r.outcome_a, r.outcome_b])
            n += 1
    return n


def _cell_scores(poly: BellPolynomial, counts: np.ndarray) -> np.ndarray:
    """Contribution of one trial to the estimate, by cell and outcome: g[i, j, a, b]."""
    n_ij = counts.sum(axis=(2, 3))
    n_i = n_ij.sum(axis=1)
    n_j = n_ij.sum(axis=0)
    zero = np.array([1.0, 0.0])
    with np.errstate(divide="ignore", invalid="ignore"):
        g = (poly.joint_coeffs / n_ij)[:, :, None, None] * np.outer(zero, zero)
        g = g + (poly.alice_coeffs / n_i)[:, None, None, None] * zero[None, None, :, None]
        g = g + (poly.bob_coeffs / n_j)[None, :, None, None] * zero[None, None, None, :]
    return g


def estimate_from_counts(poly: BellPolynomial, counts: np.ndarray) -> tuple[float, float]:
    """Bell value from outcome counts and its delta-method standard error.

    Joint probabilities come from their own cell; marginals pool every cell
    sharing the setting. Conditional on the setting counts the estimate is a
    sum over independent trials, so its variance is the sum of per-cell
    variances. Cell variances use Jeffreys-smoothed frequencies so that a
    deterministic cell still has positive uncertainty.
    """
    counts = np.asarray(counts, dtype=float)
    n_ij = counts.sum(axis=(2, 3))
    if np.any(n_ij == 0):
        return float("nan"), float("inf")
    g = _cell_scores(poly, counts)
    value = float(np.sum(g * counts))
    freq = (counts + 0.5) / (n_ij[:, :, None, None] + 2.0)
    mean = (freq * g).sum(axis=(2, 3))
    var = (freq * g * g).sum(axis=(2, 3)) - mean ** 2
    return value, float(np.sqrt(np.sum(n_ij * np.maximum(var, 0.0))))


def bootstrap_std_error(poly: BellPolynomial, counts: np.ndarray, resamples: int = 200,
                        seed: int = 0) -> float:
    """Standard error from multinomial resampling within each setting cell."""
    counts = np.asarray(counts, dtype=np.int64)
    na, nb = counts.shape[:2]
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(1 << 30,)))
    n_ij = counts.sum(axis=(2, 3))
    if np.any(n_ij == 0):
        return float("inf")
    p = counts.reshape(na, nb, 4) / n_ij[:, :, None]
    values = np.empty(resamples)
    for r in range(resamples):
        sample = np.empty_like(counts)
        for i in range(na):
            for j in range(nb):
                sample[i, j] = rng.multinomial(n_ij[i, j], p[i, j]).reshape(2, 2)
        values[r] = estimate_from_counts(poly, sample)[0]
    return float(values.std(ddof=1))


def simulate(rho: DensityMatrix, settings: MeasurementSettings, poly: BellPolynomial,
             strat: NoDetectionStrategy, sc: DetectionScenario, trials: int, seed: int = 0,
             *, bootstrap: bool = False) -> EstimateReport:
    """Sample ``trials`` rounds and estimate the observed Bell value.

    Each round picks settings uniformly, draws (a, b) from the Born
    distribution, drops each party's click independently with probability
    1 - eta, and replaces missing clicks by the strategy's output.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if settings.shape != poly.shape or strat.shape != poly.shape:
        raise ValueError("settings, strategy and polynomial dimensions differ")
    dist = outcome_distribution(rho, settings)
    na, nb = poly.shape
    counts = np.zeros((na, nb, 2, 2), dtype=np.int64)
    for batch in _generate(dist, strat, sc, trials, seed):
        flat = ((batch["i"] * nb + batch["j"]) * 2 + batch["a"]) * 2 + batch["b"]
        counts += np.bincount(flat, minlength=na * nb * 4).reshape(na, nb, 2, 2)
    value, err = estimate_from_counts(poly, counts)
    if bootstrap:
        err = bootstrap_std_error(poly, counts, seed=seed)
    return EstimateReport(value, err, int(trials), counts, "bootstrap" if bootstrap else "delta")
