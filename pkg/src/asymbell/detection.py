"""Lossy detection: conditional Bell values and threshold efficiencies.

When a detector fails, its party announces a fixed output for the chosen
setting. The observed Bell value then splits into four terms weighted by
which detectors fired::

    I = ea*eb*Q + ea*(1-eb)*M_A + (1-ea)*eb*M_B + (1-ea)*(1-eb)*X
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .inequalities import BellPolynomial, deterministic_table, evaluate
from .quantum import DensityMatrix, MeasurementSettings, ProbabilityTable, click_probabilities


class NoViolationError(ValueError):
    """The Bell value never exceeds the local bound."""


class InvalidStrategyError(ValueError):
    """The all-undetected-on-one-side value is not strictly below the local bound."""


@dataclass(frozen=True)
class NoDetectionStrategy:
    """Outputs announced on a missed detection, one entry per setting."""

    alice_outputs: tuple[int, ...]
    bob_outputs: tuple[int, ...]

    def __post_init__(self):
        a = tuple(int(v) for v in self.alice_outputs)
        b = tuple(int(v) for v in self.bob_outputs)
        if any(v not in (0, 1) for v in a + b):
            raise ValueError("no-detection outputs must be 0 or 1")
        object.__setattr__(self, "alice_outputs", a)
        object.__setattr__(self, "bob_outputs", b)

    @classmethod
    def zeros(cls, na: int, nb: int) -> "NoDetectionStrategy":
        return cls((0,) * na, (0,) * nb)

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.alice_outputs), len(self.bob_outputs)


@dataclass(frozen=True)
class DetectionScenario:
    eta_a: float = 1.0
    eta_b: float = 1.0

    def __post_init__(self):
        for name in ("eta_a", "eta_b"):
            v = float(getattr(self, name))
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v!r}")
            object.__setattr__(self, name, v)


@dataclass(frozen=True)
class ScoreBreakdown:
    """Bell values conditioned on which detectors fired.

    q: both fire; m_a: only Alice; m_b: only Bob; x: neither.
    """

    q: float
    m_a: float
    m_b: float
    x: float
    local_bound: float = 0.0

    def shifted(self) -> tuple[float, float, float, float]:
        L = self.local_bound
        return self.q - L, self.m_a - L, self.m_b - L, self.x - L


def score_breakdown(rho: DensityMatrix, settings: MeasurementSettings, poly: BellPolynomial,
                    strat: NoDetectionStrategy) -> ScoreBreakdown:
    if settings.shape != poly.shape or strat.shape != poly.shape:
        raise ValueError(f"settings {settings.shape} / strategy {strat.shape} do not match "
                         f"polynomial {poly.shape}")
    probs = click_probabilities(rho, settings)
    pa, pb = probs.alice_marginals, probs.bob_marginals
    za = (np.array(strat.alice_outputs) == 0).astype(float)
    zb = (np.array(strat.bob_outputs) == 0).astype(float)
    only_a = ProbabilityTable(np.outer(pa, zb), pa, zb)
    only_b = ProbabilityTable(np.outer(za, pb), za, pb)
    return ScoreBreakdown(
        q=evaluate(poly, probs),
        m_a=evaluate(poly, only_a),
        m_b=evaluate(poly, only_b),
        x=evaluate(poly, deterministic_table(strat.alice_outputs, strat.bob_outputs)),
        local_bound=poly.local_bound,
    )


def effective_value(b: ScoreBreakdown, sc: DetectionScenario) -> float:
    ea, eb = sc.eta_a, sc.eta_b
    return (ea * eb * b.q + ea * (1 - eb) * b.m_a
            + (1 - ea) * eb * b.m_b + (1 - ea) * (1 - eb) * b.x)


def asym_threshold_values(q, m_a, m_b, x, eta_a=1.0):
    """Vectorized minimal eta_b at fixed eta_a, for values relative to the local bound.

    The Bell value is affine in eta_b; the threshold is where it crosses zero.
    Returns NaN where there is no violation at eta_b = 1 or where the value at
    eta_b = 0 is not strictly negative.
    """
    at_zero = eta_a * np.asarray(m_a) + (1 - eta_a) * np.asarray(x)
    at_one = eta_a * np.asarray(q) + (1 - eta_a) * np.asarray(m_b)
    ok = (at_one > 0) & (at_zero < 0)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(ok, at_zero / (at_zero - at_one), np.nan)
    return out


def sym_threshold_values(q, m_a, m_b, x):
    """Vectorized smallest eta in (0, 1] solving eta^2 q + eta(1-eta)(m_a+m_b) + (1-eta)^2 x = 0.

    Values are relative to the local bound. NaN where no admissible root exists.
    """
    q, s, x = np.broadcast_arrays(np.asarray(q, float), np.asarray(m_a, float) + m_b,
                                  np.asarray(x, float))
    a = q - s + x
    b = s - 2 * x
    c = x
    with np.errstate(divide="ignore", invalid="ignore"):
        disc = b * b - 4 * a * c
        sq = np.sqrt(np.where(disc >= 0, disc, np.nan))
        h = -(b + np.where(b >= 0, sq, -sq)) / 2
        r1 = np.where(a != 0, h / a, np.nan)
        r2 = np.where(h != 0, c / h, np.where(a == 0, np.nan, 0.0))
        # degenerate (linear) case
        lin = np.where((a == 0) & (b != 0), -c / b, np.nan)
    roots = np.stack([r1, r2, lin])
    admissible = (roots > 0) & (roots <= 1 + 1e-12)
    roots = np.where(admissible, roots, np.inf)
    best = roots.min(axis=0)
    best = np.where(q > 0, best, np.inf)
    return np.where(np.isfinite(best), np.minimum(best, 1.0), np.nan)


def threshold_eta_b(b: ScoreBreakdown, eta_a: float = 1.0) -> float:
    """Minimal Bob efficiency for a violation, at Alice efficiency ``eta_a``.

    With a perfect Alice detector this is ``1 / (1 - Q / M_A)``.
    """
    q, m_a, m_b, x = b.shifted()
    at_zero = eta_a * m_a + (1 - eta_a) * x
    at_one = eta_a * q + (1 - eta_a) * m_b
    if at_one <= 0:
        raise NoViolationError(f"no violation even with eta_b = 1 (value {at_one:.3g})")
    if at_zero >= 0:
        raise InvalidStrategyError(f"value without Bob's detections is {at_zero:.3g} >= 0")
    return float(asym_threshold_values(q, m_a, m_b, x, eta_a))


def threshold_symmetric(b: ScoreBreakdown) -> float:
    """Minimal common efficiency eta_a = eta_b for a violation."""
    q, m_a, m_b, x = b.shifted()
    if q <= 0:
        raise NoViolationError(f"no violation with perfect detectors (Q = {q:.3g})")
    eta = float(sym_threshold_values(q, m_a, m_b, x))
    if np.isnan(eta):
        raise NoViolationError("no violation at any efficiency in (0, 1]")
    return eta

