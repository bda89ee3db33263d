"""Experiment configuration: pydantic models, TOML loading and ``ANC_`` overrides."""

from __future__ import annotations

from collections.abc import Mapping
import hashlib
import json
import logging
import os
from pathlib import Path
import tomllib
from typing import Any

from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    NonNegativeFloat,
    PositiveFloat,
    PositiveInt,
    ValidationError,
    field_validator,
    model_validator,
)

from .data_models.stage import AmbientMode, NoiseShape
from .errors import ConfigError

_LOGGER = logging.getLogger(__name__)

ENV_PREFIX = "ANC_"

Vector3 = tuple[float, float, float]


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class ToneConfig(_Section):
    """A line-frequency tone present on all three axes."""

    frequency_hz: PositiveFloat
    amplitude_nt: Vector3
    phase_rad: Vector3 = (0.0, 0.0, 0.0)
    drift_rate: float = Field(0.0, description="Fractional amplitude change per second.")


class DriftConfig(_Section):
    """Slow second-order low-pass field drift."""

    sigma_nt: Vector3 = (473.1, 88.7, 266.1)
    corner_hz: PositiveFloat = 0.2


class BroadbandConfig(_Section):
    """Colored broadband noise."""

    sigma_nt: Vector3 = (12.0, 2.25, 6.75)
    shape: NoiseShape = NoiseShape.PINK
    f_lo_hz: PositiveFloat = 0.2
    f_hi_hz: PositiveFloat = 2000.0
    sections_per_decade: PositiveInt = 3


def _default_tones() -> list[ToneConfig]:
    return [
        ToneConfig(
            frequency_hz=50.0, amplitude_nt=(884.9, 165.9, 497.8), phase_rad=(0.0, 2.1, 4.2)
        ),
        ToneConfig(
            frequency_hz=150.0, amplitude_nt=(221.2, 41.5, 124.4), phase_rad=(0.3, 2.4, 4.5)
        ),
    ]


class EnvironmentConfig(_Section):
    """Ambient 3-axis field and sensor coupling."""

    dc_field_nt: Vector3 = (48000.0, 5000.0, 20000.0)
    tones: list[ToneConfig] = Field(default_factory=_default_tones)
    drift: DriftConfig = DriftConfig()
    broadband: BroadbandConfig = BroadbandConfig()
    crosstalk: tuple[Vector3, Vector3, Vector3] = (
        (1.0, 0.05, -0.05),
        (-0.05, 1.0, 0.05),
        (0.05, -0.05, 1.0),
    )
    echo_coupling: float = Field(0.02, ge=0.0, lt=1.0)
    reference_contamination_sigma_nt: NonNegativeFloat = 0.0
    line_contamination: NonNegativeFloat = 0.0
    line_bandwidth_hz: PositiveFloat = 0.5
    reference_adc_bits: int = Field(24, ge=8)
    reference_adc_range_nt: PositiveFloat = 100000.0
    reference_quantize: bool = True
    primary_path: list[float] | None = None

    @field_validator("crosstalk")
    @classmethod
    def _check_crosstalk(cls, value):
        for row, coefficients in enumerate(value):
            for column, coefficient in enumerate(coefficients):
                if row == column and coefficient != 1.0:
                    raise ValueError("crosstalk diagonal must be 1")
                if row != column and abs(coefficient) >= 1.0:
                    raise ValueError("crosstalk off-diagonal magnitudes must be < 1")
        return value


class ChannelConfig(_Section):
    """Hardware chain of one axis: DAC, current source and coil, sensor, anti-alias filter, ADC."""

    dac_gain: PositiveFloat = 1.0
    dac_range: PositiveFloat = 1000.0
    actuator_taps: list[float] = Field(default_factory=lambda: [0.7, 0.3], min_length=1)
    actuator_gain_nt_per_v: PositiveFloat = 100.0
    aa_taps: PositiveInt = 63
    aa_cutoff_hz: PositiveFloat | None = 1000.0
    extra_delay_samples: int = Field(5, ge=0)
    noise_floor_nt: NonNegativeFloat = 0.01
    adc_bits: int = Field(16, ge=8)
    adc_range_nt: PositiveFloat = 5000.0
    quantize: bool = True


class PidConfig(_Section):
    """Discrete PID gains; error in nT, output in drive units."""

    kp: float = 0.0002
    ki: float = 0.2
    kd: float = 0.0
    output_limit: PositiveFloat = 1000.0


class PrenullConfig(_Section):
    """DC pre-null settling criterion."""

    threshold_nt: PositiveFloat = 5.0
    hold_s: PositiveFloat = 1.0
    timeout_s: PositiveFloat = 30.0
    ema_tau_s: PositiveFloat = 0.1
    reference_average_s: PositiveFloat = 1.0


class SecondaryPathConfig(_Section):
    """Secondary path identification settings beyond T_sp and mu_sp."""

    ambient: AmbientMode = AmbientMode.DC
    drive_sigma: PositiveFloat = 1.0
    band_limit_hz: PositiveFloat | None = None
    calibration_s: PositiveFloat = 1.0
    dc_tolerance_nt: PositiveFloat | None = 50.0
    residual_flag_ratio: PositiveFloat = 1e-3
    divergence_norm: PositiveFloat = 1e6


class AncConfig(_Section):
    """FxLMS calibration, low-frequency split and convergence settings.

    The FxLMS reference is high-passed at ``reference_highpass_hz``; what lies
    below is held by an integral loop on the error whose unity-gain crossover
    is ``dc_hold_crossover_hz`` (0 disables it). The convergence monitor sees
    the error high-passed at ``convergence_highpass_hz``.
    """

    calibration_s: PositiveFloat = 1.0
    reference_highpass_hz: PositiveFloat = 1.0
    dc_hold_crossover_hz: NonNegativeFloat = 10.0
    convergence_highpass_hz: PositiveFloat = 5.0
    convergence_window_s: PositiveFloat = 2.0
    rel_tolerance: PositiveFloat = 0.05
    consecutive: PositiveInt = 3
    phase1_max_s: PositiveFloat = 30.0
    divergence_norm: PositiveFloat = 1e6


class WelchConfig(_Section):
    """Welch segmentation shared by every spectral estimate."""

    segment_len: PositiveInt = 4096
    overlap: float = Field(0.5, ge=0.0, lt=1.0)
    window: str = "hann"

    def kwargs(self) -> dict[str, Any]:
        """Keyword arguments for the spectral estimators."""
        return {
            "segment_len": self.segment_len,
            "overlap_fraction": self.overlap,
            "window": self.window,
        }


class ReportConfig(_Section):
    """What the report computes."""

    bands: list[tuple[float, float]] = Field(
        default_factory=lambda: [(0.0, 1000.0), (0.0, 150.0)], min_length=1
    )
    tones_hz: list[PositiveFloat] = Field(default_factory=lambda: [50.0, 150.0])
    settle_s: NonNegativeFloat = 20.0
    gamma_hz_per_nt: PositiveFloat = 3.5
    ceiling_db: PositiveFloat = 60.0
    trace_decimation: PositiveInt = 10


class ScanConfig(_Section):
    """Coherence scan over reference contamination levels."""

    levels: list[NonNegativeFloat] = Field(default_factory=lambda: [0.0, 0.33, 1.0, 3.0])
    duration_s: PositiveFloat = 60.0
    analysis_s: PositiveFloat = 20.0
    mu_safety: PositiveFloat = 1e-4
    tone_hz: PositiveFloat = 50.0
    band_hz: tuple[float, float] = (45.0, 55.0)


def _default_channels() -> list[ChannelConfig]:
    return [ChannelConfig() for _ in range(3)]


class ExperimentConfig(_Section):
    """Top-level configuration of the simulated experiment.

    ``filter_length`` is the tap count M shared by the secondary path model
    and the anti-noise filter. Step sizes are given as fractions of the LMS
    stability bound.
    """

    sample_rate_hz: PositiveFloat = 5000.0
    seed: int = Field(0, ge=0, lt=2**63)
    filter_length: PositiveInt = 128
    duration_sp_s: PositiveFloat = 20.0
    duration_anc_s: PositiveFloat = 60.0
    mu_sp_safety: PositiveFloat = 0.1
    mu_anc_safety: PositiveFloat = 0.05
    environment: EnvironmentConfig = EnvironmentConfig()
    channels: list[ChannelConfig] = Field(default_factory=_default_channels)
    pid: PidConfig = PidConfig()
    prenull: PrenullConfig = PrenullConfig()
    sp: SecondaryPathConfig = SecondaryPathConfig()
    anc: AncConfig = AncConfig()
    welch: WelchConfig = WelchConfig()
    report: ReportConfig = ReportConfig()
    scan: ScanConfig = ScanConfig()

    @model_validator(mode="after")
    def _check_consistency(self) -> ExperimentConfig:
        nyquist = self.sample_rate_hz / 2
        if len(self.channels) != 3:
            raise ValueError(f"exactly 3 channels are required, got {len(self.channels)}")
        for f_lo, f_hi in self.report.bands:
            if not 0 <= f_lo < f_hi <= nyquist:
                raise ValueError(f"report band ({f_lo}, {f_hi}) must satisfy 0 <= lo < hi <= {nyquist}")
        lo, hi = self.scan.band_hz
        if not 0 <= lo < hi <= nyquist:
            raise ValueError(f"scan band ({lo}, {hi}) must satisfy 0 <= lo < hi <= {nyquist}")
        for frequency in [*self.report.tones_hz, self.scan.tone_hz]:
            if frequency >= nyquist:
                raise ValueError(f"tone {frequency} Hz is above Nyquist")
        for channel in self.channels:
            if channel.aa_cutoff_hz is not None and channel.aa_cutoff_hz >= nyquist:
                raise ValueError(f"anti-alias cutoff {channel.aa_cutoff_hz} Hz is above Nyquist")
        for name in ("reference_highpass_hz", "dc_hold_crossover_hz", "convergence_highpass_hz"):
            if getattr(self.anc, name) >= nyquist:
                raise ValueError(f"anc.{name} is above Nyquist")
        if self.report.settle_s >= self.duration_anc_s:
            raise ValueError("report.settle_s must be shorter than duration_anc_s")
        if self.scan.analysis_s > self.scan.duration_s:
            raise ValueError("scan.analysis_s must not exceed scan.duration_s")
        analysed = (self.duration_anc_s - self.report.settle_s) * self.sample_rate_hz
        if min(analysed, self.scan.analysis_s * self.sample_rate_hz) < self.welch.segment_len:
            raise ValueError("analysis windows are shorter than welch.segment_len")
        return self

    @property
    def sample_period_s(self) -> float:
        """Sample period in seconds."""
        return 1.0 / self.sample_rate_hz

    def samples(self, seconds: float) -> int:
        """Number of ticks covering ``seconds``."""
        return int(round(seconds * self.sample_rate_hz))


def config_hash(config: ExperimentConfig) -> str:
    """Short SHA-256 digest of the canonical JSON form of ``config``."""
    return hashlib.sha256(config.model_dump_json().encode()).hexdigest()[:16]


def _decode_value(raw: str) -> Any:
    try:
        return json.loads(raw)
    except ValueError:
        return raw


def _set_path(data: dict, path: list[str], value: Any) -> None:
    node: Any = data
    for position, key in enumerate(path):
        last = position == len(path) - 1
        if isinstance(node, list):
            if not key.isdigit() or int(key) >= len(node):
                raise ConfigError(f"invalid list index '{key}' in override {'.'.join(path)}")
            if last:
                node[int(key)] = value
            else:
                node = node[int(key)]
            continue
        if last:
            node[key] = value
        else:
            node = node.setdefault(key, {})
            if not isinstance(node, dict | list):
                raise ConfigError(f"override {'.'.join(path)} descends into a scalar")


def _merge(base: dict, update: Mapping) -> dict:
    for key, value in update.items():
        if isinstance(value, Mapping) and isinstance(base.get(key), dict):
            _merge(base[key], value)
        else:
            base[key] = value
    return base


def environment_overrides(environ: Mapping[str, str]) -> dict[str, Any]:
    """Collect ``ANC_`` variables as dotted-path overrides.

    Both ``ANC_ENVIRONMENT.ECHO_COUPLING`` and ``ANC_ENVIRONMENT__ECHO_COUPLING``
    address ``environment.echo_coupling``. Values are decoded as JSON where
    possible, so ``ANC_SEED=7`` yields an integer.
    """
    overrides = {}
    for name, raw in sorted(environ.items()):
        if not name.upper().startswith(ENV_PREFIX):
            continue
        dotted = name[len(ENV_PREFIX) :].replace("__", ".").lower()
        overrides[dotted] = _decode_value(raw)
    return overrides


def load_config(
    path: str | Path | None = None,
    overrides: Mapping[str, Any] | None = None,
    environ: Mapping[str, str] | None = None,
) -> ExperimentConfig:
    """Load and validate an experiment configuration.

    Args:
        path: TOML file; defaults are used when omitted.
        overrides: Dotted-path values applied last (e.g. ``{"seed": 3}``).
        environ: Environment to read ``ANC_`` overrides from; ``os.environ`` by default.
    """
    data = ExperimentConfig().model_dump(mode="json")
    source = str(path) if path is not None else None
    if path is not None:
        try:
            with Path(path).open("rb") as handle:
                _merge(data, tomllib.load(handle))
        except FileNotFoundError as exc:
            raise ConfigError("config file not found", source) from exc
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"invalid TOML: {exc}", source) from exc
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}", source) from exc

    env_values = environment_overrides(os.environ if environ is None else environ)
    for dotted, value in [*env_values.items(), *(overrides or {}).items()]:
        _LOGGER.debug("config override %s=%r", dotted, value)
        _set_path(data, dotted.split("."), value)

    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(str(exc), source) from exc
