from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import TYPE_CHECKING

import numpy as np
from pydantic import ValidationError

from ..adaptive.lms import estimate_secondary_path, stability_bound
from ..controllers import PidGains, dc_prenull
from ..data_models.secondary_path import PrenullResult, SecondaryPathModel, SecondaryPathStage
from ..data_models.signal import FirFilter, WhiteNoiseSource
from ..data_models.stage import Axis
from ..dsp.signals import generate_white_noise, stream_seed
from ..errors import MissingStageError, ModelFormatError
from ..plant.streams import StreamKey
from ..testbench import Testbench
from ..utils import format_vector, write_table_csv

if TYPE_CHECKING:
    from ..config import ExperimentConfig

_LOGGER = logging.getLogger(__name__)

PRENULL_FILE = "prenull.json"


def model_file_name(axis: Axis) -> str:
    return f"model_{axis.value}.json"


class _AxisPlant:
    """One axis of the bench seen as a SISO plant, the other axes held at their offsets."""

    def __init__(self, bench: Testbench, axis: Axis, prenull: PrenullResult):
        self._bench = bench
        self._index = axis.index
        self._drive = list(prenull.dc_offsets)
        self._offset = prenull.dc_offsets[axis.index]
        self._error_offset = prenull.error_offsets[axis.index]

    def step(self, drive: float) -> float:
        self._drive[self._index] = self._offset + drive
        reading = self._bench.sense(self._drive)
        return reading.error_nt[self._index] - self._error_offset


class SecondaryPathManager:
    """Identify, store and load the secondary path models of the three axes.

    Access via ``experiment.secondary_path``.
    """

    def __init__(self, config: ExperimentConfig):
        self._config = config

    def drive_source(self, axis: Axis) -> WhiteNoiseSource:
        """White noise driving the identification of ``axis``."""
        seed = stream_seed(self._config.seed, StreamKey.SP_DRIVE, axis.index)
        return WhiteNoiseSource(
            sigma=self._config.sp.drive_sigma,
            seed=int(seed.generate_state(1, np.uint64)[0]),
            band_limit_hz=self._config.sp.band_limit_hz,
        )

    def true_responses(self) -> tuple[FirFilter, FirFilter, FirFilter]:
        """Composite impulse responses of the simulated channels."""
        bench = Testbench(self._config)
        return tuple(channel.composite_response for channel in bench.channels)

    def prenull(self, bench: Testbench) -> PrenullResult:
        """Null the DC field on ``bench`` and measure the sensor offsets that remain.

        Args:
            bench: A fresh testbench; it is left running with the offsets applied.
        """
        config = self._config
        settings = config.prenull
        result = dc_prenull(
            bench,
            PidGains.from_config(config.pid, config.sample_rate_hz),
            threshold_nt=settings.threshold_nt,
            hold_s=settings.hold_s,
            timeout_s=settings.timeout_s,
            ema_tau_s=settings.ema_tau_s,
        )
        n_samples = max(config.samples(settings.reference_average_s), 1)
        reference = np.zeros(3)
        error = np.zeros(3)
        for _ in range(n_samples):
            reading = bench.sense(result.dc_offsets)
            reference += reading.reference_nt
            error += reading.error_nt
        result = result.model_copy(
            update={
                "reference_offsets": tuple(float(v) for v in reference / n_samples),
                "error_offsets": tuple(float(v) for v in error / n_samples),
            }
        )
        _LOGGER.info(
            "Reference offsets %s nT, error offsets %s nT",
            format_vector(result.reference_offsets),
            format_vector(result.error_offsets),
        )
        return result

    def run(self) -> SecondaryPathStage:
        """Pre-null the DC field, then identify x, y and z in turn with the PID off.

        Raises:
            SettleTimeoutError: The pre-null did not settle.
            DivergenceError: Identification diverged.
            UnnulledDcError: The running mean error left the DC tolerance.
        """
        config = self._config
        settings = config.sp
        _LOGGER.info("Secondary path stage: ambient %s, M=%d", settings.ambient.value, config.filter_length)
        bench = Testbench(config, ambient=settings.ambient)
        prenull = self.prenull(bench)

        models = []
        for axis in Axis:
            source = self.drive_source(axis)
            calibration = generate_white_noise(
                source, max(config.samples(settings.calibration_s), 1), config.sample_rate_hz
            )
            drive_power = float(np.mean(calibration.samples**2))
            mu_sp = config.mu_sp_safety * stability_bound(config.filter_length, drive_power)
            _LOGGER.info("Axis %s: drive power %.4g, mu_sp %.4g", axis.value, drive_power, mu_sp)
            model = estimate_secondary_path(
                _AxisPlant(bench, axis, prenull),
                source,
                config.filter_length,
                mu_sp,
                config.duration_sp_s,
                config.sample_rate_hz,
                axis=axis,
                divergence_threshold=settings.divergence_norm,
                dc_tolerance_nt=settings.dc_tolerance_nt,
                residual_flag_ratio=settings.residual_flag_ratio,
            )
            models.append(model)
        stage = SecondaryPathStage(models=tuple(models), prenull=prenull)

        for model, truth in zip(stage.models, self.true_responses()):
            _LOGGER.info(
                "Axis %s identified: residual ratio %.3g, error vs simulated channel %.3g",
                model.axis.value,
                model.residual_ratio,
                model.relative_error(truth),
            )
        return stage

    def save(self, stage: SecondaryPathStage, directory: str | Path) -> list[Path]:
        """Write one JSON model per axis and the pre-null offsets into ``directory``."""
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        written = []
        for axis, model in zip(Axis, stage.models):
            path = directory / model_file_name(axis)
            path.write_text(model.model_dump_json(indent=2) + "\n")
            written.append(path)
        path = directory / PRENULL_FILE
        path.write_text(stage.prenull.model_dump_json(indent=2) + "\n")
        written.append(path)
        _LOGGER.debug("Saved secondary path models to %s", directory)
        return written

    def load(self, directory: str | Path) -> SecondaryPathStage:
        """Read models written by :meth:`save`.

        Raises:
            MissingStageError: A model or the pre-null file does not exist.
            ModelFormatError: A file is not a valid document, or its sample
                rate differs from the configured one.
        """
        directory = Path(directory)
        paths = [directory / model_file_name(axis) for axis in Axis] + [directory / PRENULL_FILE]
        for path in paths:
            if not path.is_file():
                raise MissingStageError("sp", f"{path} not found; run sp-estimate or pass --estimate-first")
        try:
            models = tuple(SecondaryPathModel.model_validate_json(p.read_text()) for p in paths[:3])
            prenull = PrenullResult.model_validate_json(paths[3].read_text())
        except (ValidationError, json.JSONDecodeError) as err:
            raise ModelFormatError(f"invalid secondary path document in {directory}: {err}") from err
        for model in models:
            if model.sample_rate_hz != self._config.sample_rate_hz:
                raise ModelFormatError(
                    f"model sampled at {model.sample_rate_hz} Hz, "
                    f"config runs at {self._config.sample_rate_hz} Hz"
                )
        return SecondaryPathStage(models=models, prenull=prenull)

    def write_taps_csv(
        self, stage: SecondaryPathStage, path: str | Path, header_comment: str | None = None
    ) -> Path:
        """Coefficient against tap index for each axis."""
        columns = [model.coefficients for model in stage.models]
        taps = max(len(c) for c in columns)
        rows = (
            [tap, *(c[tap] if tap < len(c) else None for c in columns)] for tap in range(taps)
        )
        return write_table_csv(path, ["tap", "c_x", "c_y", "c_z"], rows, header_comment)
