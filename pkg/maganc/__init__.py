"""Public package interface for maganc."""

from .config import ExperimentConfig, load_config
from .experiment import Experiment
from .managers import (
    AncManager,
    CoherenceManager,
    PidManager,
    ReportManager,
    SecondaryPathManager,
)
from .testbench import Testbench

__all__ = [
    "Experiment",
    "ExperimentConfig",
    "load_config",
    "Testbench",
    "AncManager",
    "CoherenceManager",
    "PidManager",
    "ReportManager",
    "SecondaryPathManager",
]

name = "maganc"
