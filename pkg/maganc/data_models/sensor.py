from __future__ import annotations

from dataclasses import dataclass

Vector3 = tuple[float, float, float]


@dataclass(frozen=True, slots=True)
class SensorReading:
    """Both magnetometers at one tick, after quantization."""

    tick: int
    error_nt: Vector3
    reference_nt: Vector3
    anti_noise_nt: Vector3 = (0.0, 0.0, 0.0)
