from __future__ import annotations

from collections.abc import Mapping
from importlib.metadata import PackageNotFoundError, version
import json
import logging
import math
from pathlib import Path
from typing import TYPE_CHECKING

import numpy as np

from ..config import config_hash
from ..data_models.recording import StageRecording
from ..data_models.report import CoherenceSpectrum, ReportRow, RunReport, ToneSuppression
from ..data_models.secondary_path import SecondaryPathStage
from ..data_models.stage import Axis, Stage
from ..dsp.io import write_sample_buffer
from ..dsp.spectral import (
    amplitude_spectral_density,
    band_power,
    coherence,
    field_rms_to_larmor_hz,
    max_cancellation_db,
    suppression_db,
    tone_psd,
    welch_psd,
)
from ..errors import MissingStageError
from ..plant.streams import StreamKey
from ..utils import decimate, provenance_comment, write_table_csv

if TYPE_CHECKING:
    from ..config import ExperimentConfig

_LOGGER = logging.getLogger(__name__)

PACKAGE_NAME = "maganc-py"


def package_version() -> str:
    try:
        return version(PACKAGE_NAME)
    except PackageNotFoundError:
        return "0.0.0.dev0"


def tone_column(frequency_hz: float) -> str:
    """Report column name of a tone, e.g. ``supp_50hz_db``."""
    return f"supp_{frequency_hz:g}hz_db"


def _entry(
    frequency_hz: float | None, before: float, after: float, at_floor: bool, ceiling_db: float
) -> ToneSuppression:
    """Suppression entry from two amplitudes, with the noise-floor sentinel."""
    if before <= 0:
        return ToneSuppression(frequency_hz=frequency_hz)
    if at_floor or after <= 0:
        return ToneSuppression(frequency_hz=frequency_hz, value_db=ceiling_db, at_ceiling=True)
    value = suppression_db(before, after)
    if value >= ceiling_db:
        return ToneSuppression(frequency_hz=frequency_hz, value_db=ceiling_db, at_ceiling=True)
    return ToneSuppression(frequency_hz=frequency_hz, value_db=value)


def build_report(
    recordings: Mapping[Stage, StageRecording],
    config: ExperimentConfig,
    stages: list[Stage] | None = None,
) -> RunReport:
    """Table of band RMS, Larmor equivalents, suppression and coherence.

    Analysis skips the first ``report.settle_s`` of every stream. Suppression
    of the PID and ANC stages is measured against the raw stage with
    identical Welch settings, and entries at the sensor noise floor are
    reported at the ceiling. Coherence spectra compare the raw reference and
    error streams. The function is pure: the same recordings give the same
    report.

    Args:
        recordings: Recorded stages; the raw stage is required.
        config: Configuration the stages ran with.
        stages: Stages to report, all recorded ones by default.

    Raises:
        MissingStageError: A requested stage, or the raw stage, was not recorded.
    """
    stages = [s for s in Stage if s in recordings] if stages is None else list(stages)
    if Stage.RAW not in recordings:
        raise MissingStageError(Stage.RAW.value, "the raw noise stage is the reference of every report")
    for stage in stages:
        if stage not in recordings:
            raise MissingStageError(stage.value)

    report_cfg = config.report
    welch = config.welch.kwargs()
    fs = config.sample_rate_hz
    ceiling = report_cfg.ceiling_db
    raw = recordings[Stage.RAW]

    rows = []
    for axis in Axis:
        floor = config.channels[axis.index].noise_floor_nt
        floor_psd = floor * floor / (fs / 2)
        spectra = {
            stage: welch_psd(recordings[stage].error_buffer(axis).skip(report_cfg.settle_s), **welch)
            for stage in stages
        }
        if Stage.RAW in spectra:
            raw_spectrum = spectra[Stage.RAW]
        else:
            raw_spectrum = welch_psd(raw.error_buffer(axis).skip(report_cfg.settle_s), **welch)
        for stage in stages:
            spectrum = spectra[stage]
            for f_lo, f_hi in report_cfg.bands:
                rms = math.sqrt(band_power(spectrum, f_lo, f_hi))
                band_entry = None
                tones = []
                if stage is not Stage.RAW:
                    before = math.sqrt(band_power(raw_spectrum, f_lo, f_hi))
                    band_entry = _entry(None, before, rms, rms < 2 * floor, ceiling)
                    for frequency in report_cfg.tones_hz:
                        after_psd = tone_psd(spectrum, frequency)
                        tones.append(
                            _entry(
                                frequency,
                                math.sqrt(tone_psd(raw_spectrum, frequency)),
                                math.sqrt(max(after_psd, 0.0)),
                                after_psd <= 4 * floor_psd,
                                ceiling,
                            )
                        )
                rows.append(
                    ReportRow(
                        axis=axis,
                        stage=stage,
                        band_lo_hz=f_lo,
                        band_hi_hz=f_hi,
                        rms_nt=rms,
                        rms_larmor_hz=field_rms_to_larmor_hz(rms, report_cfg.gamma_hz_per_nt),
                        band_suppression=band_entry,
                        tones=tones,
                    )
                )

    spectra_coherence = []
    for axis in Axis:
        coh = coherence(
            raw.reference_buffer(axis).skip(report_cfg.settle_s),
            raw.error_buffer(axis).skip(report_cfg.settle_s),
            **welch,
        )
        alpha = max_cancellation_db(coh, ceiling)
        spectra_coherence.append(
            CoherenceSpectrum(
                axis=axis,
                frequencies_hz=coh.frequencies_hz.tolist(),
                gamma_sq=np.real(coh.values).tolist(),
                alpha_db=np.real(alpha.values).tolist(),
                segment_count=coh.segment_count,
            )
        )

    anc = recordings[Stage.ANC].diagnostics if Stage.ANC in stages else None
    return RunReport(
        config_hash=config_hash(config),
        seed=config.seed,
        stages=stages,
        rows=rows,
        coherence=spectra_coherence,
        anc=anc,
        saturated={stage: recordings[stage].saturated for stage in stages},
    )


class ReportManager:
    """Build reports and write the run directory.

    Access via ``experiment.reports``.
    """

    def __init__(self, config: ExperimentConfig):
        self._config = config

    def build(
        self, recordings: Mapping[Stage, StageRecording], stages: list[Stage] | None = None
    ) -> RunReport:
        """See :func:`build_report`."""
        return build_report(recordings, self._config, stages)

    @property
    def header_comment(self) -> str:
        return provenance_comment(config_hash(self._config), self._config.seed)

    def write_report_csv(self, report: RunReport, path: str | Path) -> Path:
        """One row per axis, stage and band; empty suppression cells for the raw stage."""
        tones_hz = self._config.report.tones_hz
        ceiling = f">={self._config.report.ceiling_db:g}"
        header = ["axis", "stage", "band_lo_hz", "band_hi_hz", "rms_nt", "rms_larmor_hz"]
        header += [tone_column(f) for f in tones_hz]
        rows = []
        for row in report.rows:
            cells = [row.axis, row.stage, row.band_lo_hz, row.band_hi_hz, row.rms_nt, row.rms_larmor_hz]
            for frequency in tones_hz:
                entry = row.tone(frequency)
                if entry is None:
                    cells.append(None)
                elif entry.at_ceiling:
                    cells.append(ceiling)
                else:
                    cells.append(entry.value_db)
            rows.append(cells)
        return write_table_csv(path, header, rows, self.header_comment)

    def write_coherence_csv(self, report: RunReport, path: str | Path) -> Path:
        """γ² and α(f) per axis against frequency."""
        spectra = {spectrum.axis: spectrum for spectrum in report.coherence}
        header = ["frequency_hz"]
        header += [f"gamma_sq_{axis.value}" for axis in Axis]
        header += [f"alpha_db_{axis.value}" for axis in Axis]
        frequencies = spectra[Axis.X].frequencies_hz
        rows = []
        for index, frequency in enumerate(frequencies):
            cells = [frequency]
            cells += [spectra[axis].gamma_sq[index] for axis in Axis]
            cells += [spectra[axis].alpha_db[index] for axis in Axis]
            rows.append(cells)
        return write_table_csv(path, header, rows, self.header_comment)

    def write_spectra_csv(self, recording: StageRecording, path: str | Path) -> Path:
        """Amplitude spectral density of the settled error streams."""
        settle = self._config.report.settle_s
        welch = self._config.welch.kwargs()
        densities = [
            amplitude_spectral_density(welch_psd(recording.error_buffer(axis).skip(settle), **welch))
            for axis in Axis
        ]
        rows = (
            [frequency, *(float(d.values[i]) for d in densities)]
            for i, frequency in enumerate(densities[0].frequencies_hz)
        )
        return write_table_csv(path, ["frequency_hz", "asd_x", "asd_y", "asd_z"], rows, self.header_comment)

    def write_trace_csv(self, recording: StageRecording, path: str | Path) -> Path:
        """Decimated full-timeline error trace."""
        factor = self._config.report.trace_decimation
        trace = decimate(recording.trace, factor)
        period = factor / recording.sample_rate_hz
        rows = ([i * period, *values] for i, values in enumerate(trace.tolist()))
        return write_table_csv(path, ["time_s", "x", "y", "z"], rows, self.header_comment)

    def write_streams(self, recording: StageRecording, directory: str | Path) -> list[Path]:
        """Binary error and reference streams of every axis."""
        directory = Path(directory)
        written = []
        for axis in Axis:
            for sensor, buffer in (
                ("error", recording.error_buffer(axis)),
                ("reference", recording.reference_buffer(axis)),
            ):
                path = directory / f"{recording.stage.value}_{sensor}_{axis.value}.ancb"
                written.append(write_sample_buffer(path, buffer))
        return written

    def write(
        self,
        report: RunReport,
        recordings: Mapping[Stage, StageRecording],
        out_dir: str | Path,
        sp_stage: SecondaryPathStage | None = None,
    ) -> list[Path]:
        """Write every run output plus ``manifest.json`` into ``out_dir``.

        Returns:
            The written paths, manifest last.
        """
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        written = [
            self.write_report_csv(report, out_dir / "report.csv"),
            self._write_json(out_dir / "report.json", report.model_dump(mode="json")),
            self.write_coherence_csv(report, out_dir / "coherence.csv"),
        ]
        for stage in report.stages:
            recording = recordings[stage]
            written.append(self.write_spectra_csv(recording, out_dir / f"spectra_{stage.value}.csv"))
            written.append(self.write_trace_csv(recording, out_dir / f"trace_{stage.value}.csv"))
            written.extend(self.write_streams(recording, out_dir / "streams"))
        written.append(self.write_manifest(out_dir, written, sp_stage))
        _LOGGER.info("Wrote %d files to %s", len(written), out_dir)
        return written

    def write_manifest(
        self, out_dir: str | Path, files: list[Path], sp_stage: SecondaryPathStage | None = None
    ) -> Path:
        """Provenance of a run directory: version, config hash, seeds and files."""
        out_dir = Path(out_dir)
        manifest = {
            "package": PACKAGE_NAME,
            "version": package_version(),
            "config_hash": config_hash(self._config),
            "seed": self._config.seed,
            "streams": {key.name.lower(): int(key) for key in StreamKey},
            "offsets": None if sp_stage is None else sp_stage.prenull.model_dump(mode="json"),
            "files": sorted(str(Path(p).relative_to(out_dir)) for p in files),
        }
        return self._write_json(out_dir / "manifest.json", manifest)

    @staticmethod
    def _write_json(path: Path, payload: dict) -> Path:
        path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
        return path

