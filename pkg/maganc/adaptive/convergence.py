from __future__ import annotations

import math

import numpy as np

from ..data_models.signal import SampleBuffer
from ..errors import InvalidInputError

DEFAULT_REL_TOLERANCE = 0.05
DEFAULT_CONSECUTIVE = 3


def _relative_change(previous: float, current: float) -> float:
    if previous == 0:
        return 0.0 if current == 0 else math.inf
    return abs(current - previous) / previous


def detect_convergence(
    error_history: SampleBuffer,
    window_s: float,
    rel_tolerance: float = DEFAULT_REL_TOLERANCE,
    consecutive: int = DEFAULT_CONSECUTIVE,
) -> bool:
    """Report whether the error has reached a steady state.

    The history is cut into whole windows aligned to its end. The error is
    steady when the RMS of each of the last ``consecutive`` windows differs
    from its predecessor by less than ``rel_tolerance``.

    Args:
        error_history: Error signal, oldest sample first.
        window_s: Window length in seconds.
        rel_tolerance: Allowed relative RMS change between neighbouring windows.
        consecutive: Number of steady window transitions required.
    """
    window = int(round(window_s * error_history.sample_rate_hz))
    if window < 1:
        raise InvalidInputError(f"window of {window_s} s is shorter than one sample")
    n_windows = len(error_history) // window
    if n_windows < 2:
        raise InvalidInputError(
            f"history of {error_history.duration_s:g} s covers fewer than two {window_s:g} s windows"
        )
    samples = error_history.samples[len(error_history) - n_windows * window :]
    rms = np.sqrt(np.mean(samples.reshape(n_windows, window) ** 2, axis=1))
    changes = [_relative_change(rms[i - 1], rms[i]) for i in range(1, n_windows)]
    if len(changes) < consecutive:
        return False
    return all(change < rel_tolerance for change in changes[-consecutive:])


class ConvergenceMonitor:
    """Streaming counterpart of :func:`detect_convergence`.

    Feed one error sample per tick with :meth:`push`; window RMS values are
    kept so the caller can inspect the trajectory.
    """

    def __init__(
        self,
        sample_rate_hz: float,
        window_s: float,
        rel_tolerance: float = DEFAULT_REL_TOLERANCE,
        consecutive: int = DEFAULT_CONSECUTIVE,
    ):
        self._window = max(1, int(round(window_s * sample_rate_hz)))
        self._sample_rate_hz = sample_rate_hz
        self._rel_tolerance = rel_tolerance
        self._consecutive = consecutive
        self._count = 0
        self._energy = 0.0
        self._streak = 0
        self._growth = 0
        self._converged_at: int | None = None
        self.window_rms: list[float] = []

    def push(self, error: float) -> bool:
        """Add one sample; returns True once steady state has been reached."""
        self._energy += error * error
        self._count += 1
        if self._count % self._window == 0:
            rms = math.sqrt(self._energy / self._window)
            self._energy = 0.0
            if self.window_rms:
                previous = self.window_rms[-1]
                steady = _relative_change(previous, rms) < self._rel_tolerance
                self._streak = self._streak + 1 if steady else 0
                self._growth = self._growth + 1 if rms > previous * (1 + self._rel_tolerance) else 0
            self.window_rms.append(rms)
            if self._converged_at is None and self._streak >= self._consecutive:
                self._converged_at = self._count
        return self._converged_at is not None

    @property
    def converged(self) -> bool:
        """Whether steady state has been reached."""
        return self._converged_at is not None

    @property
    def converged_at_s(self) -> float | None:
        """Time since the first sample at which steady state was detected."""
        if self._converged_at is None:
            return None
        return self._converged_at / self._sample_rate_hz

    @property
    def growing(self) -> bool:
        """True while the window RMS has grown for ``consecutive`` windows in a row."""
        return self._growth >= self._consecutive
