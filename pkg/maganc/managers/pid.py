from __future__ import annotations

import logging
from typing import TYPE_CHECKING

import numpy as np

from ..controllers import PidGains, pid_regulate
from ..data_models.recording import StageRecording
from ..data_models.secondary_path import PrenullResult
from ..data_models.stage import Stage
from ..testbench import Testbench

if TYPE_CHECKING:
    from ..config import ExperimentConfig

_LOGGER = logging.getLogger(__name__)


class PidManager:
    """Record the open-loop noise and the PID baseline.

    Access via ``experiment.pid``.
    """

    def __init__(self, config: ExperimentConfig):
        self._config = config

    def gains(self, config: ExperimentConfig | None = None) -> PidGains:
        """Configured gains at the configured sample rate."""
        config = config or self._config
        return PidGains.from_config(config.pid, config.sample_rate_hz)

    def run_raw(
        self,
        prenull: PrenullResult,
        duration_s: float | None = None,
        config: ExperimentConfig | None = None,
    ) -> StageRecording:
        """Hold the pre-null offsets and record the uncompensated noise.

        Args:
            prenull: Offsets from the secondary path stage.
            duration_s: Stage length, ``duration_anc_s`` by default.
            config: Run against a modified configuration.
        """
        config = config or self._config
        zero = PidGains(output_limit=config.pid.output_limit, dt_s=config.sample_period_s)
        return self._record(Stage.RAW, zero, prenull, duration_s, config)

    def run_baseline(
        self,
        prenull: PrenullResult,
        duration_s: float | None = None,
        config: ExperimentConfig | None = None,
    ) -> StageRecording:
        """Closed-loop PID on all three axes on top of the pre-null offsets."""
        config = config or self._config
        return self._record(Stage.PID, self.gains(config), prenull, duration_s, config)

    def _record(
        self,
        stage: Stage,
        gains: PidGains,
        prenull: PrenullResult,
        duration_s: float | None,
        config: ExperimentConfig,
    ) -> StageRecording:
        duration_s = config.duration_anc_s if duration_s is None else duration_s
        n_samples = config.samples(duration_s)
        _LOGGER.info("%s stage: %.1f s", stage.value.upper(), duration_s)
        bench = Testbench(config, initial_drive=prenull.dc_offsets)
        error = np.empty((n_samples, 3))
        reference = np.empty((n_samples, 3))
        position = 0

        def record(reading):
            nonlocal position
            error[position] = reading.error_nt
            reference[position] = reading.reference_nt
            position += 1

        pid_regulate(bench, gains, prenull.dc_offsets, n_samples, on_reading=record)
        if bench.saturated:
            _LOGGER.warning("%s stage: a converter clipped", stage.value.upper())
        return StageRecording(
            stage=stage,
            sample_rate_hz=config.sample_rate_hz,
            error=error,
            reference=reference,
            trace=error,
            saturated=bench.saturated,
        )
