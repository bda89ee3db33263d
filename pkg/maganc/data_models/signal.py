from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, PositiveFloat

from ..errors import DegenerateSignalError, InvalidInputError
from .stage import SpectrumKind


def _frozen_array(values, dtype=np.float64) -> np.ndarray:
    array = np.array(values, dtype=dtype, copy=True).reshape(-1)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class SampleBuffer:
    """A finite real-valued sequence sampled at a fixed rate.

    Units depend on where the buffer was taken: drive units at the DAC,
    nanotesla at the sensors.
    """

    samples: np.ndarray
    sample_rate_hz: float

    def __post_init__(self):
        samples = _frozen_array(self.samples)
        if not self.sample_rate_hz > 0:
            raise InvalidInputError(
                f"sample_rate_hz must be positive, got {self.sample_rate_hz}"
            )
        if not np.all(np.isfinite(samples)):
            raise InvalidInputError("samples must be finite")
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "sample_rate_hz", float(self.sample_rate_hz))

    def __len__(self) -> int:
        return self.samples.size

    @property
    def duration_s(self) -> float:
        """Length of the buffer in seconds."""
        return self.samples.size / self.sample_rate_hz

    @property
    def times_s(self) -> np.ndarray:
        """Sample instants starting at zero."""
        return np.arange(self.samples.size) / self.sample_rate_hz

    def tail(self, seconds: float) -> SampleBuffer:
        """Return the last ``seconds`` of the buffer."""
        count = min(self.samples.size, int(round(seconds * self.sample_rate_hz)))
        return SampleBuffer(self.samples[self.samples.size - count :], self.sample_rate_hz)

    def skip(self, seconds: float) -> SampleBuffer:
        """Return the buffer without its first ``seconds``."""
        start = min(self.samples.size, int(round(seconds * self.sample_rate_hz)))
        return SampleBuffer(self.samples[start:], self.sample_rate_hz)

    def require_samples(self) -> SampleBuffer:
        """Raise DegenerateSignalError for an empty buffer, return self otherwise."""
        if self.samples.size == 0:
            raise DegenerateSignalError("signal is empty")
        return self


@dataclass(frozen=True, eq=False)
class FirFilter:
    """Finite impulse response filter with ``M`` fixed coefficients."""

    coefficients: np.ndarray

    def __post_init__(self):
        coefficients = _frozen_array(self.coefficients)
        if coefficients.size < 1:
            raise InvalidInputError("a FIR filter needs at least one tap")
        if not np.all(np.isfinite(coefficients)):
            raise InvalidInputError("filter coefficients must be finite")
        object.__setattr__(self, "coefficients", coefficients)

    @property
    def taps(self) -> int:
        """Tap count M."""
        return self.coefficients.size

    def resolution_hz(self, sample_rate_hz: float) -> float:
        """Frequency resolution f_s/M."""
        return sample_rate_hz / self.taps

    def then(self, other: FirFilter) -> FirFilter:
        """Cascade: this filter followed by ``other``."""
        return FirFilter(np.convolve(self.coefficients, other.coefficients))

    def delayed(self, samples: int) -> FirFilter:
        """Prepend ``samples`` zero taps."""
        return FirFilter(np.concatenate([np.zeros(samples), self.coefficients]))


@dataclass(frozen=True, eq=False)
class SpectrumEstimate:
    """Frequency-binned spectral quantity.

    Auto-spectra are real power densities (units²/Hz). Cross-spectra are
    complex. Coherence and cancellation ceilings reuse the same carrier.
    """

    frequencies_hz: np.ndarray
    values: np.ndarray
    bin_width_hz: float
    segment_count: int
    kind: SpectrumKind = SpectrumKind.PSD

    def __post_init__(self):
        object.__setattr__(self, "frequencies_hz", _frozen_array(self.frequencies_hz))
        dtype = np.complex128 if np.iscomplexobj(self.values) else np.float64
        object.__setattr__(self, "values", _frozen_array(self.values, dtype=dtype))

    def __len__(self) -> int:
        return self.frequencies_hz.size

    @property
    def bins(self) -> list[tuple[float, float | complex]]:
        """(frequency, value) pairs."""
        return list(zip(self.frequencies_hz.tolist(), self.values.tolist(), strict=True))

    def nearest_bin(self, frequency_hz: float) -> int:
        """Index of the bin closest to ``frequency_hz``."""
        return int(np.argmin(np.abs(self.frequencies_hz - frequency_hz)))

    def at(self, frequency_hz: float) -> float | complex:
        """Value at the bin nearest to ``frequency_hz``."""
        return self.values[self.nearest_bin(frequency_hz)].item()

    def band_mask(self, f_lo: float, f_hi: float) -> np.ndarray:
        """Boolean mask of bins whose centre lies in [f_lo, f_hi]."""
        return (self.frequencies_hz >= f_lo) & (self.frequencies_hz <= f_hi)


class WhiteNoiseSource(BaseModel):
    """Gaussian white noise generator description.

    Generated streams are zero-mean with variance ``sigma**2`` and no
    correlation between distinct lags. With ``band_limit_hz`` set, the
    stream is low-pass filtered and renormalised to the same variance.
    """

    model_config = ConfigDict(frozen=True)

    sigma: PositiveFloat = 1.0
    seed: int = Field(0, ge=0, lt=2**64)
    band_limit_hz: PositiveFloat | None = None
