"""Simulated hardware chain and ambient field."""

from .channel import AdcQuantizer, SecondaryPathChannel, plant_step
from .environment import EnvironmentBlock, NoiseEnvironment, environment_step

__all__ = [
    "AdcQuantizer",
    "EnvironmentBlock",
    "NoiseEnvironment",
    "SecondaryPathChannel",
    "environment_step",
    "plant_step",
]
