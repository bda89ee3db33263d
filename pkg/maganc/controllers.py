"""Discrete PID controller, DC pre-nulling and the PID baseline loop."""

from __future__ import annotations

from dataclasses import dataclass
import logging
import math

from pydantic import BaseModel, ConfigDict, PositiveFloat

from .config import PidConfig
from .data_models.secondary_path import PrenullResult
from .errors import InvalidInputError, SettleTimeoutError
from .testbench import Testbench

_LOGGER = logging.getLogger(__name__)


class PidGains(BaseModel):
    """Gains of a parallel-form PID with output clamp."""

    model_config = ConfigDict(frozen=True)

    kp: float = 0.0
    ki: float = 0.0
    kd: float = 0.0
    output_limit: PositiveFloat = 1000.0
    dt_s: PositiveFloat

    @classmethod
    def from_config(cls, config: PidConfig, sample_rate_hz: float) -> PidGains:
        return cls(
            kp=config.kp,
            ki=config.ki,
            kd=config.kd,
            output_limit=config.output_limit,
            dt_s=1.0 / sample_rate_hz,
        )

    @property
    def integral_limit(self) -> float:
        """Anti-windup bound on the integral accumulator; infinite without an integral term."""
        return self.output_limit / abs(self.ki) if self.ki else math.inf


@dataclass(frozen=True, slots=True)
class PidState:
    integral: float = 0.0
    previous_error: float | None = None


def _clamp(value: float, limit: float) -> float:
    return max(-limit, min(limit, value))


def pid_step(gains: PidGains, state: PidState, error: float) -> tuple[float, PidState]:
    """Advance the controller by one sample.

    The derivative term is zero on the first sample. The integral is clamped
    to ``output_limit / ki`` and the output to ``output_limit``.

    Args:
        gains: Controller gains.
        state: State after the previous sample.
        error: Control error of this sample.

    Returns:
        The clamped output and the updated state.

    Raises:
        InvalidInputError: ``error`` is not finite.
    """
    if not math.isfinite(error):
        raise InvalidInputError(f"PID error must be finite, got {error}")
    integral = _clamp(state.integral + error * gains.dt_s, gains.integral_limit)
    derivative = 0.0
    if state.previous_error is not None:
        derivative = (error - state.previous_error) / gains.dt_s
    output = gains.kp * error + gains.ki * integral + gains.kd * derivative
    return _clamp(output, gains.output_limit), PidState(integral, error)


def dc_prenull(
    bench: Testbench,
    gains: PidGains,
    threshold_nt: float = 5.0,
    hold_s: float = 1.0,
    timeout_s: float = 30.0,
    ema_tau_s: float = 0.1,
) -> PrenullResult:
    """Null the static field with a closed-loop PID on every axis.

    The loop runs until the low-passed error of all three axes stays below
    ``threshold_nt`` for ``hold_s``. The returned offsets are the mean drive
    over that hold period. The drive applied at a tick is computed from the
    reading of the tick before.

    Raises:
        SettleTimeoutError: The axes did not settle within ``timeout_s``.
    """
    fs = 1.0 / gains.dt_s
    hold_ticks = max(int(round(hold_s * fs)), 1)
    timeout_ticks = int(round(timeout_s * fs))
    alpha = 1.0 - math.exp(-gains.dt_s / ema_tau_s)

    states = [PidState(), PidState(), PidState()]
    drive = [0.0, 0.0, 0.0]
    ema: list[float] | None = None
    held = 0
    drive_sums = [0.0, 0.0, 0.0]
    for n in range(timeout_ticks):
        reading = bench.sense(drive)
        if ema is None:
            ema = list(reading.error_nt)
        else:
            ema = [m + alpha * (e - m) for m, e in zip(ema, reading.error_nt)]
        if all(abs(m) < threshold_nt for m in ema):
            held += 1
            drive_sums = [s + d for s, d in zip(drive_sums, drive)]
        else:
            held = 0
            drive_sums = [0.0, 0.0, 0.0]
        if held >= hold_ticks:
            offsets = tuple(s / held for s in drive_sums)
            settle = (n + 1) / fs
            _LOGGER.info(
                "DC pre-null settled after %.2f s, offsets %s",
                settle,
                ", ".join(f"{o:.4g}" for o in offsets),
            )
            return PrenullResult(dc_offsets=offsets, settle_time_s=settle)
        for k in range(3):
            drive[k], states[k] = pid_step(gains, states[k], -reading.error_nt[k])
        if n % int(fs) == 0:
            _LOGGER.debug("pre-null t=%.0f s, mean error %s", n / fs, ema)

    raise SettleTimeoutError(ema or (0.0, 0.0, 0.0), bench.dac_saturated, timeout_s)


def pid_regulate(
    bench: Testbench,
    gains: PidGains,
    offsets: tuple[float, float, float],
    n_samples: int,
    on_reading=None,
) -> list[float]:
    """Run the PID baseline for ``n_samples`` ticks on top of the DC ``offsets``.

    Args:
        bench: Plant to drive.
        gains: Controller gains; all zero reproduces the open-loop run.
        offsets: Static drive held from the pre-null.
        n_samples: Ticks to run.
        on_reading: Called with every :class:`SensorReading`.

    Returns:
        The drive applied on the last tick.
    """
    states = [PidState(), PidState(), PidState()]
    drive = list(offsets)
    for _ in range(n_samples):
        reading = bench.sense(drive)
        if on_reading is not None:
            on_reading(reading)
        for k in range(3):
            output, states[k] = pid_step(gains, states[k], -reading.error_nt[k])
            drive[k] = offsets[k] + output
    return drive
