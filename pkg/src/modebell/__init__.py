"""Two-copy single-photon mode-entanglement Bell test: simulation and analysis.

The package models two heralded single photons, each split between an
Alice and a Bob mode, interfered locally and detected after phase
shifts. It provides exact detection-pattern probabilities, CHSH values
under three post-selection strategies, a Monte Carlo click simulator
with realistic detector models, and the estimators needed to recover
visibilities, phase set points, and CHSH values from click data alone.
"""

from ._kernel import active_backend
from .analysis import (
    ChshEstimate,
    FitResult,
    HomVisibility,
    SetpointCalibration,
    SettingCorrelation,
    derive_setpoints,
    estimate_chsh,
    estimate_efficiencies,
    fit_fringe,
    fit_hom_dip,
    hom_visibility_ratio,
)
from .chsh import (
    BasisAssignment,
    ChshResult,
    ThetaOptimum,
    chsh_value,
    closed_form_chsh,
    correlation,
    optimize_theta,
    theory_curve,
    theta_basis,
    violation_threshold,
)
from .detectors import (
    ClickOnly,
    DetectorModel,
    EfficiencyMap,
    IdealNumberResolving,
    ObservedClicks,
    PseudoNumberResolving,
    classify_clicks,
    detection_distribution,
    observed_outcome,
)
from .errors import (
    EstimationError,
    FitError,
    ModebellError,
    ValidationError,
)
from .montecarlo import (
    ClickRecord,
    FringeScanData,
    HomScanData,
    RunConfig,
    ScanConfig,
    overlap_at_delay,
    simulate_fringe_scan,
    simulate_hom_scan,
    simulate_run,
    simulate_window,
)
from .protocol import (
    PATTERNS,
    DetectionPattern,
    GroupProbabilities,
    PatternDistribution,
    PhaseSettings,
    PostSelectionMode,
    group_probabilities,
    pattern_distribution,
    pattern_probabilities,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "active_backend",
    # errors
    "ModebellError",
    "ValidationError",
    "EstimationError",
    "FitError",
    # protocol
    "PATTERNS",
    "DetectionPattern",
    "GroupProbabilities",
    "PatternDistribution",
    "PhaseSettings",
    "PostSelectionMode",
    "group_probabilities",
    "pattern_distribution",
    "pattern_probabilities",
    # chsh
    "BasisAssignment",
    "ChshResult",
    "ThetaOptimum",
    "chsh_value",
    "closed_form_chsh",
    "correlation",
    "optimize_theta",
    "theory_curve",
    "theta_basis",
    "violation_threshold",
    # detectors
    "ClickOnly",
    "DetectorModel",
    "EfficiencyMap",
    "IdealNumberResolving",
    "ObservedClicks",
    "PseudoNumberResolving",
    "classify_clicks",
    "detection_distribution",
    "observed_outcome",
    # montecarlo
    "ClickRecord",
    "FringeScanData",
    "HomScanData",
    "RunConfig",
    "ScanConfig",
    "overlap_at_delay",
    "simulate_fringe_scan",
    "simulate_hom_scan",
    "simulate_run",
    "simulate_window",
    # analysis
    "ChshEstimate",
    "FitResult",
    "HomVisibility",
    "SetpointCalibration",
    "SettingCorrelation",
    "derive_setpoints",
    "estimate_chsh",
    "estimate_efficiencies",
    "fit_fringe",
    "fit_hom_dip",
    "hom_visibility_ratio",
]
