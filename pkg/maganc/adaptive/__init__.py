"""LMS identification and the FxLMS anti-noise engine."""

from .convergence import ConvergenceMonitor, detect_convergence
from .fxlms import (
    FxLmsState,
    fxlms_compute_antinoise,
    fxlms_filter_reference,
    fxlms_update,
)
from .lms import (
    DIVERGENCE_NORM,
    AdaptiveFir,
    Plant,
    estimate_secondary_path,
    lms_predict,
    lms_update,
    stability_bound,
)

__all__ = [
    "DIVERGENCE_NORM",
    "AdaptiveFir",
    "ConvergenceMonitor",
    "FxLmsState",
    "Plant",
    "detect_convergence",
    "estimate_secondary_path",
    "fxlms_compute_antinoise",
    "fxlms_filter_reference",
    "fxlms_update",
    "lms_predict",
    "lms_update",
    "stability_bound",
]
