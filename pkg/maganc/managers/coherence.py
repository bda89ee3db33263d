from __future__ import annotations

from collections.abc import Sequence
import logging
import math
from pathlib import Path
from typing import TYPE_CHECKING

import numpy as np

from ..config import config_hash
from ..data_models.report import CoherenceScan, CoherenceScanRow, CoherenceSpectrum
from ..data_models.secondary_path import SecondaryPathStage
from ..data_models.stage import Axis
from ..dsp.spectral import (
    ZERO_POWER,
    band_power,
    coherence,
    max_cancellation_db,
    suppression_db,
    tone_suppression_db,
    welch_psd,
)
from ..errors import InvalidInputError
from ..utils import provenance_comment, write_table_csv
from .anc import AncManager
from .pid import PidManager

if TYPE_CHECKING:
    from ..config import ExperimentConfig

_LOGGER = logging.getLogger(__name__)

RELIABLE_SEGMENTS = 32


class CoherenceManager:
    """Compare achieved suppression with the coherence ceiling as the reference degrades.

    Access via ``experiment.coherence``.
    """

    def __init__(self, config: ExperimentConfig):
        self._config = config
        self._pid = PidManager(config)
        self._anc = AncManager(config)

    def level_config(self, level: float) -> ExperimentConfig:
        """Configuration with reference line contamination set to ``level``."""
        environment = self._config.environment.model_copy(update={"line_contamination": level})
        return self._config.model_copy(update={"environment": environment})

    def scan(self, sp_stage: SecondaryPathStage, levels: Sequence[float] | None = None) -> CoherenceScan:
        """Run a raw stage and a slowly adapting ANC stage at every contamination level.

        A level L adds narrowband noise of L times the tone power around each
        line tone at the reference sensor only, so the tone coherence is about
        ``1 / (1 + L)``. Both runs last ``scan.duration_s`` and only their
        last ``scan.analysis_s`` are analysed.

        Args:
            sp_stage: Identified secondary path models and DC offsets.
            levels: Contamination levels, ``scan.levels`` by default.

        Raises:
            InvalidInputError: ``levels`` is empty or has a negative entry.
            DivergenceError: An ANC run diverged.
        """
        scan = self._config.scan
        levels = list(scan.levels if levels is None else levels)
        if not levels:
            raise InvalidInputError("at least one contamination level is required")
        if any(level < 0 for level in levels):
            raise InvalidInputError(f"contamination levels must be non-negative, got {levels}")

        rows = []
        spectra = []
        for level in levels:
            config = self.level_config(level)
            _LOGGER.info("Coherence scan: level %g", level)
            raw = self._pid.run_raw(sp_stage.prenull, duration_s=scan.duration_s, config=config)
            anc = self._anc.run(
                sp_stage,
                sequential=False,
                duration_s=scan.duration_s,
                mu_safety=scan.mu_safety,
                config=config,
            )
            for axis in Axis:
                row, spectrum = self._analyse(level, axis, raw, anc)
                rows.append(row)
                spectra.append(spectrum)
                _LOGGER.info(
                    "level %g axis %s: gamma^2 %.3f, ceiling %.1f dB, achieved %.1f dB",
                    level,
                    axis.value,
                    row.gamma_sq_tone,
                    row.alpha_tone_db,
                    row.achieved_tone_db,
                )
        return CoherenceScan(
            config_hash=config_hash(self._config),
            seed=self._config.seed,
            tone_hz=scan.tone_hz,
            band_hz=scan.band_hz,
            rows=rows,
            spectra=spectra,
        )

    def _analyse(self, level, axis, raw, anc) -> tuple[CoherenceScanRow, CoherenceSpectrum]:
        config = self._config
        scan = config.scan
        welch = config.welch.kwargs()
        ceiling = config.report.ceiling_db
        raw_error = raw.error_buffer(axis).tail(scan.analysis_s)
        anc_error = anc.error_buffer(axis).tail(scan.analysis_s)
        raw_reference = raw.reference_buffer(axis).tail(scan.analysis_s)

        coh = coherence(raw_reference, raw_error, **welch)
        alpha = max_cancellation_db(coh, ceiling)
        gamma_sq = np.real(coh.values)
        alpha_db = np.real(alpha.values)
        reliable = coh.segment_count >= RELIABLE_SEGMENTS
        if not reliable:
            _LOGGER.warning(
                "Only %d Welch segments; coherence estimates below %d segments are biased, "
                "ceiling excess not evaluated",
                coh.segment_count,
                RELIABLE_SEGMENTS,
            )

        before = welch_psd(raw_error, **welch)
        after = welch_psd(anc_error, **welch)
        lo, hi = scan.band_hz
        mask = coh.band_mask(lo, hi)
        ratio = np.maximum(np.real(before.values[mask]), ZERO_POWER) / np.maximum(
            np.real(after.values[mask]), ZERO_POWER
        )
        excess = float(np.max(10.0 * np.log10(ratio) - alpha_db[mask])) if reliable else None

        row = CoherenceScanRow(
            level=level,
            axis=axis,
            gamma_sq_tone=float(np.real(coh.at(scan.tone_hz))),
            gamma_sq_band_mean=float(np.mean(gamma_sq[mask])),
            alpha_tone_db=float(np.real(alpha.at(scan.tone_hz))),
            achieved_tone_db=_safe_db(lambda: tone_suppression_db(before, after, scan.tone_hz), ceiling),
            achieved_band_db=_safe_db(
                lambda: suppression_db(
                    math.sqrt(band_power(before, lo, hi)), math.sqrt(band_power(after, lo, hi))
                ),
                ceiling,
            ),
            max_ceiling_excess_db=excess,
        )
        spectrum = CoherenceSpectrum(
            axis=axis,
            level=level,
            frequencies_hz=coh.frequencies_hz.tolist(),
            gamma_sq=gamma_sq.tolist(),
            alpha_db=alpha_db.tolist(),
            segment_count=coh.segment_count,
        )
        return row, spectrum

    def write(self, result: CoherenceScan, out_dir: str | Path) -> list[Path]:
        """Write ``coherence_scan.csv`` and the per-level ``coherence.csv``."""
        out_dir = Path(out_dir)
        comment = provenance_comment(result.config_hash, result.seed)
        scan_path = write_table_csv(
            out_dir / "coherence_scan.csv",
            [
                "level",
                "axis",
                "gamma_sq_tone",
                "gamma_sq_band_mean",
                "alpha_tone_db",
                "achieved_tone_db",
                "achieved_band_db",
                "max_ceiling_excess_db",
            ],
            (
                [
                    row.level,
                    row.axis,
                    row.gamma_sq_tone,
                    row.gamma_sq_band_mean,
                    row.alpha_tone_db,
                    row.achieved_tone_db,
                    row.achieved_band_db,
                    row.max_ceiling_excess_db,
                ]
                for row in result.rows
            ),
            comment,
        )

        header = ["level", "frequency_hz"]
        header += [f"gamma_sq_{axis.value}" for axis in Axis]
        header += [f"alpha_db_{axis.value}" for axis in Axis]
        rows = []
        for level in dict.fromkeys(spectrum.level for spectrum in result.spectra):
            per_axis = {s.axis: s for s in result.spectra if s.level == level}
            for index, frequency in enumerate(per_axis[Axis.X].frequencies_hz):
                rows.append(
                    [level, frequency]
                    + [per_axis[axis].gamma_sq[index] for axis in Axis]
                    + [per_axis[axis].alpha_db[index] for axis in Axis]
                )
        coherence_path = write_table_csv(out_dir / "coherence.csv", header, rows, comment)
        return [scan_path, coherence_path]


def _safe_db(compute, ceiling_db: float) -> float:
    """Suppression in dB, capped at the ceiling when the after-stream vanishes."""
    try:
        return min(compute(), ceiling_db)
    except InvalidInputError:
        return ceiling_db
