from __future__ import annotations

import math

import numpy as np
from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    NonNegativeFloat,
    PositiveFloat,
    model_validator,
)

from .signal import FirFilter
from .stage import Axis

MODEL_VERSION = 1


class SecondaryPathModel(BaseModel):
    """Frozen FIR estimate C(z) of one axis' secondary path H(z).

    Serialised field names follow the stored document layout, so the tap
    count is written as ``M``.
    """

    model_config = ConfigDict(
        frozen=True, validate_by_name=True, validate_by_alias=True, serialize_by_alias=True
    )

    version: int = MODEL_VERSION
    axis: Axis | None = None
    sample_rate_hz: PositiveFloat
    taps: int = Field(alias="M", ge=1)
    mu_sp: PositiveFloat
    duration_s: PositiveFloat
    residual_power: NonNegativeFloat
    output_power: NonNegativeFloat = 0.0
    residual_elevated: bool = False
    coefficients: tuple[float, ...]

    @model_validator(mode="after")
    def _check_coefficients(self) -> SecondaryPathModel:
        if len(self.coefficients) != self.taps:
            raise ValueError(f"expected {self.taps} coefficients, got {len(self.coefficients)}")
        if not all(math.isfinite(c) for c in self.coefficients):
            raise ValueError("coefficients must be finite")
        return self

    @property
    def fir(self) -> FirFilter:
        """The coefficients as a FirFilter."""
        return FirFilter(np.asarray(self.coefficients))

    @property
    def residual_ratio(self) -> float:
        """Residual identification power relative to the plant output power."""
        if self.output_power <= 0:
            return 0.0
        return self.residual_power / self.output_power

    def relative_error(self, truth: FirFilter) -> float:
        """Relative L2 distance to a reference impulse response.

        The reference is zero padded or truncated to ``M`` taps, and the
        distance is normalised by its full energy.
        """
        reference = np.zeros(self.taps)
        count = min(self.taps, truth.taps)
        reference[:count] = truth.coefficients[:count]
        distance = np.linalg.norm(np.asarray(self.coefficients) - reference)
        return float(distance / np.linalg.norm(truth.coefficients))


class PrenullResult(BaseModel):
    """Outcome of the DC pre-null.

    ``dc_offsets`` is the drive held on every axis afterwards; the sensor
    offsets are the mean readings measured with that drive applied.
    """

    model_config = ConfigDict(frozen=True)

    dc_offsets: tuple[float, float, float]
    reference_offsets: tuple[float, float, float] = (0.0, 0.0, 0.0)
    error_offsets: tuple[float, float, float] = (0.0, 0.0, 0.0)
    settle_time_s: NonNegativeFloat = 0.0


class SecondaryPathStage(BaseModel):
    """Everything the ANC stages need from secondary path identification."""

    model_config = ConfigDict(frozen=True)

    models: tuple[SecondaryPathModel, SecondaryPathModel, SecondaryPathModel]
    prenull: PrenullResult

    def model(self, axis: Axis) -> SecondaryPathModel:
        """Model identified for ``axis``."""
        return self.models[axis.index]
