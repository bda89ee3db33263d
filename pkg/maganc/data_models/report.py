"""Serialised results: report rows, convergence entries and coherence tables."""

from __future__ import annotations

from pydantic import BaseModel, ConfigDict

from .stage import Axis, Stage


class _Frozen(BaseModel):
    model_config = ConfigDict(frozen=True)


class ConvergenceEntry(_Frozen):
    """When one axis reached steady state in one adaptation phase."""

    axis: Axis
    phase: str
    converged: bool
    time_s: float | None = None


class AncDiagnostics(_Frozen):
    """Calibrated step sizes and adaptation history of an ANC stage."""

    filtered_reference_power: tuple[float, float, float]
    mu_anc: tuple[float, float, float]
    convergence: list[ConvergenceEntry] = []
    coefficient_drift: tuple[float, float, float] | None = None
    phase1_ticks: int = 0


class ToneSuppression(_Frozen):
    """Amplitude suppression at one tone bin, or over a whole band when ``frequency_hz`` is None.

    ``at_ceiling`` marks entries whose after-stream is at the sensor noise
    floor; ``value_db`` is then the configured ceiling.
    """

    frequency_hz: float | None = None
    value_db: float | None = None
    at_ceiling: bool = False


class ReportRow(_Frozen):
    """Noise of one axis in one band for one stage."""

    axis: Axis
    stage: Stage
    band_lo_hz: float
    band_hi_hz: float
    rms_nt: float
    rms_larmor_hz: float
    band_suppression: ToneSuppression | None = None
    tones: list[ToneSuppression] = []

    def tone(self, frequency_hz: float) -> ToneSuppression | None:
        """Tone entry at ``frequency_hz``, if reported."""
        for entry in self.tones:
            if entry.frequency_hz == frequency_hz:
                return entry
        return None


class CoherenceSpectrum(_Frozen):
    """Coherence between reference and error sensors and the cancellation ceiling."""

    axis: Axis
    level: float | None = None
    frequencies_hz: list[float]
    gamma_sq: list[float]
    alpha_db: list[float]
    segment_count: int


class RunReport(_Frozen):
    """Table of band noise per axis and stage, plus coherence and convergence."""

    version: int = 1
    config_hash: str
    seed: int
    stages: list[Stage]
    rows: list[ReportRow]
    coherence: list[CoherenceSpectrum] = []
    anc: AncDiagnostics | None = None
    saturated: dict[Stage, bool] = {}

    def row(self, axis: Axis, stage: Stage, band: tuple[float, float]) -> ReportRow:
        """The row for ``axis``, ``stage`` and ``band``."""
        for row in self.rows:
            if row.axis is axis and row.stage is stage and (row.band_lo_hz, row.band_hi_hz) == tuple(band):
                return row
        raise KeyError((axis, stage, band))


class CoherenceScanRow(_Frozen):
    """Achieved suppression against the coherence ceiling at one contamination level.

    ``max_ceiling_excess_db`` is the largest amount by which the achieved
    suppression exceeds the ceiling over the in-band bins; None when the
    coherence rests on too few Welch segments to be trusted.
    """

    level: float
    axis: Axis
    gamma_sq_tone: float
    gamma_sq_band_mean: float
    alpha_tone_db: float
    achieved_tone_db: float
    achieved_band_db: float
    max_ceiling_excess_db: float | None = None


class CoherenceScan(_Frozen):
    """Rows of a contamination scan and the raw-stage coherence at every level."""

    config_hash: str
    seed: int
    tone_hz: float
    band_hz: tuple[float, float]
    rows: list[CoherenceScanRow]
    spectra: list[CoherenceSpectrum] = []

    def at_level(self, level: float) -> list[CoherenceScanRow]:
        """Rows of one contamination level, in axis order."""
        return [row for row in self.rows if row.level == level]
