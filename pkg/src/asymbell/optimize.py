"""Search over measurement settings and no-detection strategies.

Settings are optimized with a multi-start simplex search over Bloch angles.
No-detection strategies are discrete and few (at most 2**(na + nb)), so every
objective evaluation enumerates them exactly and keeps the best.
"""

from __future__ import annotations

import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from .detection import (
    NoDetectionStrategy,
    NoViolationError,
    ScoreBreakdown,
    asym_threshold_values,
    score_breakdown,
    sym_threshold_values,
    threshold_eta_b,
    threshold_symmetric,
)
from .inequalities import BellPolynomial, all_outputs, strategy_values
from .quantum import (
    DensityMatrix,
    MeasurementSettings,
    NoiseParams,
    background_noise_state,
    bloch_directions,
    click_tables_from_correlators,
    dark_count_state,
    pure_entangled_state,
    wrap_angle,
)
from .simplex import batched_nelder_mead

log = logging.getLogger(__name__)

XATOL = 1e-9
MAXITER = 2000
SMALL_THETA = 0.005


def default_restarts(poly: BellPolynomial) -> int:
    return 50 if max(poly.shape) <= 2 else 200


@dataclass(frozen=True)
class OptimizationResult:
    settings: MeasurementSettings
    strategy: NoDetectionStrategy
    breakdown: ScoreBreakdown
    objective: float
    restarts_used: int
    converged: bool
    mode: str = "asym"
    eta_a: float = 1.0
    x: np.ndarray = field(default=None, repr=False, compare=False)

    @property
    def x_at_local_bound(self) -> bool:
        return abs(self.breakdown.x - self.breakdown.local_bound) <= 1e-12


@dataclass(frozen=True)
class StateFamily:
    """One of the parameterized state families, as a function of theta.

    ``model`` is ``"pure"``, ``"background"`` (mixing weight ``p``) or
    ``"dark"`` (error probabilities ``eps_a``, ``eps_b``).
    """

    model: str = "pure"
    p: float = 0.0
    eps_a: float = 0.0
    eps_b: float = 0.0

    def __post_init__(self):
        if self.model not in ("pure", "background", "dark"):
            raise ValueError(f"unknown state family {self.model!r}")

    def state(self, theta: float) -> DensityMatrix:
        if self.model == "background":
            return background_noise_state(theta, self.p)
        if self.model == "dark":
            return dark_count_state(theta, self.eps_a, self.eps_b)
        return pure_entangled_state(theta)

    def noise_params(self, theta: float) -> NoiseParams:
        return NoiseParams(theta=theta, background_p=self.p if self.model == "background" else 0.0,
                           dark_a=self.eps_a if self.model == "dark" else 0.0,
                           dark_b=self.eps_b if self.model == "dark" else 0.0)

    @property
    def noise_value(self) -> float:
        return {"pure": 0.0, "background": self.p, "dark": self.eps_a}[self.model]

    def with_noise(self, value: float) -> "StateFamily":
        if self.model == "background":
            return replace(self, p=float(value))
        if self.model == "dark":
            return replace(self, eps_a=float(value))
        if value:
            raise ValueError("the pure family has no noise parameter")
        return self


@dataclass(frozen=True)
class SweepPoint:
    theta: float
    noise: NoiseParams
    threshold: float  # NaN where no violation was found
    q: float
    m_a: float
    m_b: float = float("nan")
    x: float = float("nan")
    result: OptimizationResult | None = field(default=None, repr=False, compare=False)

    @property
    def noise_value(self) -> float:
        return max(self.noise.background_p, self.noise.dark_a)


class _Objective:
    """Vectorized objective over batches of angle vectors.

    All values are taken relative to the polynomial's local bound.
    """

    def __init__(self, rho: DensityMatrix, poly: BellPolynomial, mode: str,
                 eta_a: float = 1.0, full_bloch: bool = False):
        if mode not in ("violation", "asym", "sym"):
            raise ValueError(f"unknown mode {mode!r}")
        self.poly, self.mode, self.eta_a, self.full_bloch = poly, mode, float(eta_a), full_bloch
        self.na, self.nb = poly.shape
        self.corr = rho.correlators()
        J, d, e = poly.joint_coeffs, poly.alice_coeffs, poly.bob_coeffs
        za = (all_outputs(self.na) == 0).astype(float)
        zb = (all_outputs(self.nb) == 0).astype(float)
        L = poly.local_bound
        # m_a for Bob strategy s: pa @ w_a[s] + c_a[s]; m_b likewise for Alice strategy t
        self.w_a, self.c_a = zb @ J.T + d, zb @ e - L
        self.w_b, self.c_b = za @ J + e, za @ d - L
        self.x_table = strategy_values(poly) - L  # (t, s)

    @property
    def dim(self) -> int:
        n = self.na + self.nb
        return 2 * n if self.full_bloch else n

    def tables(self, X):
        X = np.atleast_2d(X)
        na, nb = self.na, self.nb
        if self.full_bloch:
            n = na + nb
            u = bloch_directions(X[:, :na], X[:, n:n + na])
            v = bloch_directions(X[:, na:n], X[:, n + na:])
        else:
            u = bloch_directions(X[:, :na])
            v = bloch_directions(X[:, na:na + nb])
        return click_tables_from_correlators(*self.corr, u, v)

    def parts(self, X):
        """q, m_a per Bob strategy, m_b per Alice strategy (relative to L)."""
        joint, pa, pb = self.tables(X)
        p = self.poly
        q = (joint * p.joint_coeffs).sum(axis=(-2, -1)) + pa @ p.alice_coeffs \
            + pb @ p.bob_coeffs - p.local_bound
        m_a = pa @ self.w_a.T + self.c_a
        m_b = pb @ self.w_b.T + self.c_b
        return q, m_a, m_b

    def thresholds(self, X):
        """Threshold for every strategy pair, shape (k, 2**na, 2**nb), NaN if infeasible."""
        q, m_a, m_b = self.parts(X)
        qq = q[:, None, None]
        ma = m_a[:, None, :]
        mb = m_b[:, :, None]
        xt = self.x_table[None]
        if self.mode == "sym":
            return sym_threshold_values(qq, ma, mb, xt)
        if self.eta_a == 1.0:
            thr = asym_threshold_values(qq[:, 0], m_a, 0.0, 0.0, 1.0)
            return np.broadcast_to(thr[:, None, :], (len(q), len(self.x_table), m_a.shape[1]))
        return asym_threshold_values(qq, ma, mb, xt, self.eta_a)

    def __call__(self, X):
        if self.mode == "violation":
            return -self.parts(X)[0]
        q, _, m_b = self.parts(X)
        thr = self.thresholds(X)
        best = np.where(np.isnan(thr), np.inf, thr).min(axis=(1, 2))
        if self.mode == "asym" and self.eta_a < 1.0:
            at_one = self.eta_a * q + (1 - self.eta_a) * m_b.max(axis=1)
        else:
            at_one = q
        # infeasible: 1 + shortfall, continuous with the feasible threshold near 1
        penalty = 1.0 + np.maximum(-at_one, 0.0)
        return np.where(np.isfinite(best), best, penalty)

    def best_strategy(self, x) -> NoDetectionStrategy:
        """Strategy attaining the objective at ``x``, lowest index on ties."""
        na, nb = self.na, self.nb
        alice, bob = all_outputs(na), all_outputs(nb)
        if self.mode == "violation":
            return NoDetectionStrategy.zeros(na, nb)
        thr = np.where(np.isnan(self.thresholds(x)[0]), np.inf, self.thresholds(x)[0])
        if self.mode == "asym" and self.eta_a == 1.0:
            s = int(np.argmin(thr[0]))
            # Alice's outputs do not enter the threshold: push X (then M_B) up
            _, _, m_b = self.parts(x)
            key = np.lexsort((-m_b[0], -self.x_table[:, s]))
            return NoDetectionStrategy(tuple(alice[key[0]]), tuple(bob[s]))
        t, s = np.unravel_index(int(np.argmin(thr)), thr.shape)
        return NoDetectionStrategy(tuple(alice[t]), tuple(bob[s]))


def _objective_of(bd: ScoreBreakdown, mode: str, eta_a: float) -> float:
    if mode == "violation":
        return bd.q
    if mode == "sym":
        return threshold_symmetric(bd)
    return threshold_eta_b(bd, eta_a)


def _optimize(rho: DensityMatrix, poly: BellPolynomial, mode: str, restarts: int | None,
              seed: int, eta_a: float = 1.0, full_bloch: bool = False,
              warm_starts: Sequence[np.ndarray] = ()) -> OptimizationResult:
    restarts = default_restarts(poly) if restarts is None else int(restarts)
    if restarts < 1 and not len(warm_starts):
        raise ValueError("restarts must be >= 1")
    obj = _Objective(rho, poly, mode, eta_a, full_bloch)
    rng = np.random.default_rng(seed)
    starts = rng.uniform(-np.pi, np.pi, size=(max(restarts, 0), obj.dim))
    if len(warm_starts):
        starts = np.vstack([np.atleast_2d(np.asarray(w, float)) for w in warm_starts] + [starts])
    res = batched_nelder_mead(obj, starts, xatol=XATOL, maxiter=MAXITER)
    # stable tie-break on the lowest start index
    k = int(np.argmin(res.fun))
    x = wrap_angle(res.x[k])
    settings = MeasurementSettings.from_vector(x, obj.na, obj.nb, full_bloch=full_bloch)
    strategy = obj.best_strategy(x)
    bd = score_breakdown(rho, settings, poly, strategy)
    if mode != "violation" and res.fun[k] >= 1.0:
        raise NoViolationError(f"no violation found in {len(starts)} restarts")
    objective = _objective_of(bd, mode, eta_a)
    if mode != "violation" and not abs(bd.x - bd.local_bound) <= 1e-12:
        log.info("best strategy %s has X = %.3g below the local bound", strategy, bd.x)
    return OptimizationResult(settings, strategy, bd, objective, len(starts),
                              bool(res.converged[k]), mode, eta_a, x)


def maximize_violation(rho: DensityMatrix, poly: BellPolynomial, restarts: int | None = None,
                       seed: int = 0, *, full_bloch: bool = False) -> OptimizationResult:
    """Settings maximizing Q, the Bell value with perfect detectors."""
    return _optimize(rho, poly, "violation", restarts, seed, full_bloch=full_bloch)


def minimize_threshold_asym(rho: DensityMatrix, poly: BellPolynomial, restarts: int | None = None,
                            seed: int = 0, *, eta_a: float = 1.0, full_bloch: bool = False,
                            warm_starts: Sequence[np.ndarray] = ()) -> OptimizationResult:
    """Minimal Bob efficiency at fixed Alice efficiency (default: perfect).

    Raises NoViolationError when no restart reaches a violation.
    """
    return _optimize(rho, poly, "asym", restarts, seed, eta_a, full_bloch, warm_starts)


def minimize_threshold_symmetric(rho: DensityMatrix, poly: BellPolynomial,
                                 restarts: int | None = None, seed: int = 0, *,
                                 full_bloch: bool = False,
                                 warm_starts: Sequence[np.ndarray] = ()) -> OptimizationResult:
    """Minimal common efficiency for both detectors."""
    return _optimize(rho, poly, "sym", restarts, seed, full_bloch=full_bloch,
                     warm_starts=warm_starts)


def _minimize(rho, poly, mode, restarts, seed, eta_a, warm, full_bloch=False):
    if mode == "sym":
        return minimize_threshold_symmetric(rho, poly, restarts, seed, warm_starts=warm,
                                            full_bloch=full_bloch)
    return minimize_threshold_asym(rho, poly, restarts, seed, eta_a=eta_a, warm_starts=warm,
                                   full_bloch=full_bloch)


def _point_seed(seed: int, *key: int) -> int:
    return int(np.random.SeedSequence([seed, *key]).generate_state(1)[0])


def _to_point(theta: float, family: StateFamily, res: OptimizationResult | None) -> SweepPoint:
    noise = family.noise_params(theta)
    if res is None:
        nan = float("nan")
        return SweepPoint(theta, noise, nan, nan, nan, nan, nan, None)
    b = res.breakdown
    return SweepPoint(theta, noise, res.objective, b.q, b.m_a, b.m_b, b.x, res)


def sweep_theta(poly: BellPolynomial, family: StateFamily, theta_grid: Sequence[float],
                mode: str = "asym", restarts: int | None = None, seed: int = 0, *,
                eta_a: float = 1.0, stop_at_gap: bool = False) -> list[SweepPoint]:
    """Optimized threshold at every theta, visited in the given order.

    Each point starts from the previous point's optimum plus fresh random
    restarts. Points without a violation become NaN gaps; with
    ``stop_at_gap`` the sweep ends at the first gap after a feasible point.
    """
    if len(theta_grid) == 0:
        raise ValueError("theta grid is empty")
    points, warm = [], []
    for i, theta in enumerate(theta_grid):
        rho = family.state(theta)
        try:
            res = _minimize(rho, poly, mode, restarts, _point_seed(seed, i), eta_a, warm)
        except NoViolationError:
            log.log(logging.INFO if stop_at_gap else logging.WARNING,
                    "no violation at theta=%.6g", theta)
            res = None
        points.append(_to_point(float(theta), family, res))
        if res is not None:
            warm = [res.x]
        elif stop_at_gap and warm:
            break
    return points


def default_theta_grid(n: int = 14) -> np.ndarray:
    """Descending geometric grid from pi/4 down to 0.01."""
    return np.geomspace(np.pi / 4, 0.01, n)


def minimize_over_theta(poly: BellPolynomial, family: StateFamily, mode: str = "asym",
                        restarts: int | None = None, seed: int = 0, *, eta_a: float = 1.0,
                        theta_grid: Sequence[float] | None = None,
                        refine_tol: float = 1e-4) -> SweepPoint:
    """Best threshold over theta and settings for one noisy family.

    A coarse theta sweep locates the basin; a bounded scalar search between
    the neighbours of the best grid point refines it. Returns a NaN point if
    no violation is found anywhere.
    """
    grid = default_theta_grid() if theta_grid is None else np.asarray(theta_grid, float)
    coarse = sweep_theta(poly, family, grid, mode, restarts, seed, eta_a=eta_a, stop_at_gap=True)
    ok = [i for i, p in enumerate(coarse) if np.isfinite(p.threshold)]
    if not ok:
        return coarse[0]
    i = min(ok, key=lambda k: coarse[k].threshold)
    best = coarse[i]
    lo = grid[min(i + 1, len(grid) - 1)] if grid[0] > grid[-1] else grid[max(i - 1, 0)]
    hi = grid[max(i - 1, 0)] if grid[0] > grid[-1] else grid[min(i + 1, len(grid) - 1)]
    lo, hi = min(lo, hi), max(lo, hi)
    if hi - lo <= refine_tol:
        return best
    cache: dict[float, SweepPoint] = {}
    warm = [best.result.x]
    few = max(4, (restarts or default_restarts(poly)) // 8)

    def f(theta):
        rho = family.state(theta)
        try:
            res = _minimize(rho, poly, mode, few, _point_seed(seed, 10_000, len(cache)), eta_a,
                            warm)
        except NoViolationError:
            cache[theta] = _to_point(theta, family, None)
            return 2.0
        cache[theta] = _to_point(theta, family, res)
        return res.objective

    minimize_scalar(f, bounds=(lo, hi), method="bounded", options={"xatol": refine_tol})
    for p in cache.values():
        if np.isfinite(p.threshold) and p.threshold < best.threshold:
            best = p
    return best


def _tradeoff_job(args):
    poly, family, mode, restarts, seed, eta_a, theta_grid = args
    return minimize_over_theta(poly, family, mode, restarts, seed, eta_a=eta_a,
                               theta_grid=theta_grid)


def noise_tradeoff(poly: BellPolynomial, noise_model: str, noise_grid: Sequence[float],
                   mode: str = "asym", restarts: int | None = None, seed: int = 0, *,
                   eta_a: float = 1.0, eps_b: float = 0.0,
                   theta_grid: Sequence[float] | None = None,
                   workers: int | None = None) -> list[SweepPoint]:
    """Minimal threshold over theta and settings for each noise level.

    ``noise_model`` is ``"background"`` (grid over p) or ``"dark"`` (grid over
    Alice's error probability, Bob's fixed at ``eps_b``). Points without any
    violation are reported with threshold 1. Results do not depend on
    ``workers``: every grid point has its own seed.
    """
    if len(noise_grid) == 0:
        raise ValueError("noise grid is empty")
    if noise_model not in ("background", "dark"):
        raise ValueError(f"unknown noise model {noise_model!r}")
    base = StateFamily(noise_model, eps_b=eps_b)
    jobs = [(poly, base.with_noise(v), mode, restarts, _point_seed(seed, i), eta_a, theta_grid)
            for i, v in enumerate(noise_grid)]
    workers = workers or int(os.environ.get("ASYMBELL_WORKERS", "1"))
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            points = list(pool.map(_tradeoff_job, jobs))
    else:
        points = [_tradeoff_job(j) for j in jobs]
    return [p if np.isfinite(p.threshold) else replace(p, threshold=1.0) for p in points]


def max_tolerated_noise(poly: BellPolynomial, noise_model: str, eta_b: float,
                        mode: str = "asym", restarts: int | None = None, seed: int = 0, *,
                        eta_a: float = 1.0, eps_b: float = 0.0, upper: float = 1.0,
                        tol: float = 1e-3, theta_grid: Sequence[float] | None = None) -> float:
    """Largest noise level whose optimized threshold is still at most ``eta_b``.

    Bisection on the noise parameter; assumes the threshold grows with noise.
    Returns 0.0 if even the noiseless family needs more than ``eta_b``.
    """
    base = StateFamily(noise_model, eps_b=eps_b)

    def feasible(v, k):
        p = minimize_over_theta(poly, base.with_noise(v), mode, restarts, _point_seed(seed, k),
                                eta_a=eta_a, theta_grid=theta_grid)
        return np.isfinite(p.threshold) and p.threshold <= eta_b

    if not feasible(0.0, 0):
        return 0.0
    lo, hi, k = 0.0, float(upper), 1
    while hi - lo > tol:
        mid = (lo + hi) / 2
        lo, hi = (mid, hi) if feasible(mid, k) else (lo, mid)
        k += 1
    return lo
