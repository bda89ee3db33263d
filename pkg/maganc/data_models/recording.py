"""Streams recorded by one experiment stage."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .report import AncDiagnostics
from .signal import SampleBuffer
from .stage import Axis, Stage


@dataclass(frozen=True, eq=False)
class StageRecording:
    """Sensor streams of one stage, one column per axis.

    Attributes:
        stage: Which stage produced the streams.
        sample_rate_hz: Sample rate of every stream.
        error: Error sensor over the analysed part of the stage, shape ``(n, 3)``.
        reference: Reference sensor over the same ticks.
        trace: Error sensor over the whole stage timeline, calibration and
            sequential adaptation included.
        saturated: Whether any converter clipped during the stage.
        diagnostics: Adaptation details of an ANC stage.
    """

    stage: Stage
    sample_rate_hz: float
    error: np.ndarray
    reference: np.ndarray
    trace: np.ndarray
    saturated: bool = False
    diagnostics: AncDiagnostics | None = None
    weights: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        for name in ("error", "reference", "trace"):
            values = np.array(getattr(self, name), dtype=np.float64)
            if values.ndim != 2 or values.shape[1] != 3:
                raise ValueError(f"{name} must have shape (n, 3), got {values.shape}")
            values.flags.writeable = False
            object.__setattr__(self, name, values)

    def error_buffer(self, axis: Axis) -> SampleBuffer:
        """Analysed error stream of ``axis``."""
        return SampleBuffer(self.error[:, axis.index], self.sample_rate_hz)

    def reference_buffer(self, axis: Axis) -> SampleBuffer:
        """Analysed reference stream of ``axis``."""
        return SampleBuffer(self.reference[:, axis.index], self.sample_rate_hz)

    def trace_buffer(self, axis: Axis) -> SampleBuffer:
        """Full-timeline error stream of ``axis``."""
        return SampleBuffer(self.trace[:, axis.index], self.sample_rate_hz)
