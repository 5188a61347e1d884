"""Detection-efficiency thresholds for asymmetric Bell tests on two qubits."""

from .detection import (
    DetectionScenario,
    InvalidStrategyError,
    NoDetectionStrategy,
    NoViolationError,
    ScoreBreakdown,
    effective_value,
    score_breakdown,
    threshold_eta_b,
    threshold_symmetric,
)
from .inequalities import (
    BellPolynomial,
    PolynomialError,
    chsh,
    evaluate,
    i3322,
    lhv_bound_bruteforce,
    load_polynomial,
)
from .optimize import (
    OptimizationResult,
    StateFamily,
    SweepPoint,
    max_tolerated_noise,
    maximize_violation,
    minimize_over_theta,
    minimize_threshold_asym,
    minimize_threshold_symmetric,
    noise_tradeoff,
    sweep_theta,
)
from .quantum import (
    DensityMatrix,
    DomainError,
    MeasurementSettings,
    NoiseParams,
    ProbabilityTable,
    Setting,
    background_noise_state,
    click_probabilities,
    dark_count_state,
    partial_trace,
    pure_entangled_state,
)
from .simulate import EstimateReport, TrialRecord, simulate

__version__ = "0.1.0"
