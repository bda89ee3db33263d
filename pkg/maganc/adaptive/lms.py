"""LMS adaptive FIR filter and secondary path identification."""

from __future__ import annotations

from dataclasses import dataclass
import logging
import math
from typing import Protocol

import numpy as np

from ..data_models.secondary_path import SecondaryPathModel
from ..data_models.signal import FirFilter, WhiteNoiseSource
from ..data_models.stage import Axis
from ..dsp.signals import generate_white_noise
from ..errors import DegenerateSignalError, DivergenceError, InvalidInputError, UnnulledDcError

_LOGGER = logging.getLogger(__name__)

DIVERGENCE_NORM = 1e6
NORM_CHECK_INTERVAL = 64


class Plant(Protocol):
    """Anything that maps one drive sample to one sensor sample."""

    def step(self, drive: float) -> float: ...


@dataclass(eq=False)
class AdaptiveFir:
    """M-tap FIR filter whose coefficients adapt in place.

    The delay line holds the most recent input first.
    """

    coefficients: np.ndarray
    delay_line: np.ndarray
    mu: float

    def __post_init__(self):
        self.coefficients = np.array(self.coefficients, dtype=np.float64).reshape(-1)
        self.delay_line = np.array(self.delay_line, dtype=np.float64).reshape(-1)
        if self.coefficients.size < 1:
            raise InvalidInputError("an adaptive filter needs at least one tap")
        if self.delay_line.size != self.coefficients.size:
            raise InvalidInputError(
                f"delay line has {self.delay_line.size} samples for "
                f"{self.coefficients.size} taps"
            )
        if not self.mu > 0:
            raise InvalidInputError(f"step size must be positive, got {self.mu}")

    @classmethod
    def zeros(cls, taps: int, mu: float) -> AdaptiveFir:
        """Filter with all-zero coefficients and an empty delay line."""
        return cls(np.zeros(taps), np.zeros(taps), mu)

    @property
    def taps(self) -> int:
        """Tap count M."""
        return self.coefficients.size

    @property
    def norm(self) -> float:
        """L2 norm of the coefficients."""
        return float(np.linalg.norm(self.coefficients))

    def push(self, sample: float) -> None:
        """Shift ``sample`` into the delay line."""
        self.delay_line[1:] = self.delay_line[:-1]
        self.delay_line[0] = sample

    def check_divergence(
        self,
        step: int | None = None,
        threshold: float = DIVERGENCE_NORM,
        axis: str | None = None,
        phase: str | None = None,
    ) -> None:
        """Raise DivergenceError if the coefficients are non-finite or too large."""
        norm = self.norm
        if not math.isfinite(norm):
            raise DivergenceError(step, axis, phase)
        if norm > threshold:
            raise DivergenceError(step, axis, phase, norm)

    def freeze(self) -> FirFilter:
        """Snapshot of the current coefficients."""
        return FirFilter(self.coefficients.copy())


def lms_predict(fir: AdaptiveFir) -> float:
    """Filter response ``r(n) = Σ c_i(n)·y(n-i)`` for the current delay line."""
    return float(np.dot(fir.coefficients, fir.delay_line))


def lms_update(fir: AdaptiveFir, error: float) -> AdaptiveFir:
    """Apply ``c_i(n+1) = c_i(n) + mu·e'(n)·y(n-i)`` in place.

    Args:
        fir: Filter to adapt. Its delay line is left untouched.
        error: Prediction error ``e'(n) = e(n) - r(n)``.
    """
    if not math.isfinite(error):
        raise DivergenceError(phase="lms")
    fir.coefficients += (fir.mu * error) * fir.delay_line
    return fir


def stability_bound(taps: int, signal_power: float) -> float:
    """Largest stable LMS step size ``1/(M·P_y)``."""
    if taps < 1:
        raise InvalidInputError(f"tap count must be >= 1, got {taps}")
    if not signal_power > 0:
        raise DegenerateSignalError(f"signal power must be positive, got {signal_power}")
    return 1.0 / (taps * signal_power)


def estimate_secondary_path(
    plant: Plant,
    noise: WhiteNoiseSource,
    taps: int,
    mu_sp: float,
    duration_s: float,
    sample_rate_hz: float,
    *,
    axis: Axis | None = None,
    divergence_threshold: float = DIVERGENCE_NORM,
    dc_tolerance_nt: float | None = None,
    residual_flag_ratio: float | None = None,
) -> SecondaryPathModel:
    """Identify the plant's impulse response with LMS driven by white noise.

    Each sample the plant is driven with y(n), its output e(n) is read, and
    the model is adapted on ``e(n) - r(n)``. The residual and output powers
    are averaged over the final second.

    Args:
        plant: Plant to identify. Its DC response should already be nulled.
        noise: Drive noise description.
        taps: Model length M.
        mu_sp: LMS step size.
        duration_s: Identification time T_sp.
        sample_rate_hz: Rate at which the plant is stepped.
        axis: Axis label stored on the model and used in diagnostics.
        divergence_threshold: Coefficient norm treated as divergence.
        dc_tolerance_nt: Abort when the running mean of e(n) exceeds this, checked every second.
        residual_flag_ratio: Flag the model when residual/output power exceeds this.
    """
    n_samples = int(round(duration_s * sample_rate_hz))
    drive = generate_white_noise(noise, n_samples, sample_rate_hz).samples
    fir = AdaptiveFir.zeros(taps, mu_sp)
    axis_name = axis.value if axis is not None else None

    second = max(1, int(round(sample_rate_hz)))
    tail_start = max(0, n_samples - second)
    error_sum = 0.0
    residual_energy = 0.0
    output_energy = 0.0

    for n in range(n_samples):
        y = drive[n]
        fir.push(y)
        e = plant.step(y)
        e_prime = e - lms_predict(fir)
        if not math.isfinite(e_prime):
            raise DivergenceError(n, axis_name, "sp")
        lms_update(fir, e_prime)

        error_sum += e
        if n >= tail_start:
            residual_energy += e_prime * e_prime
            output_energy += e * e
        if n % NORM_CHECK_INTERVAL == 0:
            fir.check_divergence(n, divergence_threshold, axis_name, "sp")
        if dc_tolerance_nt is not None and (n + 1) % second == 0:
            running_mean = error_sum / (n + 1)
            if abs(running_mean) > dc_tolerance_nt:
                raise UnnulledDcError(n, running_mean, axis_name)
            _LOGGER.debug(
                "sp %s: t=%.0f s, |c|=%.4g", axis_name or "-", (n + 1) / sample_rate_hz, fir.norm
            )
    fir.check_divergence(n_samples, divergence_threshold, axis_name, "sp")

    tail = n_samples - tail_start
    residual_power = residual_energy / tail
    output_power = output_energy / tail
    elevated = (
        residual_flag_ratio is not None
        and output_power > 0
        and residual_power / output_power > residual_flag_ratio
    )
    if elevated:
        _LOGGER.warning(
            "secondary path %s: residual power %.3g is %.2g of output power",
            axis_name or "-",
            residual_power,
            residual_power / output_power,
        )
    return SecondaryPathModel(
        axis=axis,
        sample_rate_hz=sample_rate_hz,
        taps=taps,
        mu_sp=mu_sp,
        duration_s=duration_s,
        residual_power=residual_power,
        output_power=output_power,
        residual_elevated=elevated,
        coefficients=tuple(fir.coefficients.tolist()),
    )
