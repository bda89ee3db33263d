"""Welch-based spectral estimators and the figures of merit built on them."""

from __future__ import annotations

import numpy as np
from scipy import signal

from ..data_models.signal import SampleBuffer, SpectrumEstimate
from ..data_models.stage import SpectrumKind
from ..errors import InvalidInputError

DEFAULT_SEGMENT_LEN = 4096
DEFAULT_OVERLAP = 0.5
DEFAULT_WINDOW = "hann"

# Cesium: 350 kHz/G expressed per nanotesla.
DEFAULT_GAMMA_HZ_PER_NT = 3.5

CANCELLATION_CEILING_DB = 60.0
ZERO_POWER = 1e-30


def _segmentation(n_samples: int, segment_len: int, overlap_fraction: float) -> tuple[int, int]:
    if segment_len < 1:
        raise InvalidInputError(f"segment_len must be >= 1, got {segment_len}")
    if not 0 <= overlap_fraction < 1:
        raise InvalidInputError(f"overlap_fraction must be in [0, 1), got {overlap_fraction}")
    if segment_len > n_samples:
        raise InvalidInputError(
            f"segment length {segment_len} is longer than the signal ({n_samples} samples)"
        )
    noverlap = int(segment_len * overlap_fraction)
    segments = 1 + (n_samples - segment_len) // (segment_len - noverlap)
    return noverlap, segments


def welch_psd(
    buffer: SampleBuffer,
    segment_len: int = DEFAULT_SEGMENT_LEN,
    overlap_fraction: float = DEFAULT_OVERLAP,
    window: str = DEFAULT_WINDOW,
) -> SpectrumEstimate:
    """One-sided power spectral density by Welch's method.

    Segments are not detrended, so DC content stays in the 0 Hz bin and the
    bins integrate to the mean square of the signal.

    Args:
        buffer: Signal to analyse.
        segment_len: Samples per segment.
        overlap_fraction: Fraction of a segment shared with the next one.
        window: Any window name understood by ``scipy.signal.get_window``.
    """
    buffer.require_samples()
    noverlap, segments = _segmentation(len(buffer), segment_len, overlap_fraction)
    frequencies, density = signal.welch(
        buffer.samples,
        fs=buffer.sample_rate_hz,
        window=window,
        nperseg=segment_len,
        noverlap=noverlap,
        detrend=False,
        scaling="density",
    )
    return SpectrumEstimate(
        frequencies, density, buffer.sample_rate_hz / segment_len, segments, SpectrumKind.PSD
    )


def cross_psd(
    x: SampleBuffer,
    y: SampleBuffer,
    segment_len: int = DEFAULT_SEGMENT_LEN,
    overlap_fraction: float = DEFAULT_OVERLAP,
    window: str = DEFAULT_WINDOW,
) -> SpectrumEstimate:
    """Complex one-sided cross spectral density ``conj(X)·Y``.

    Uses the same segmentation as :func:`welch_psd`, so ``cross_psd(x, x)``
    equals ``welch_psd(x)``.
    """
    x.require_samples()
    if len(x) != len(y) or x.sample_rate_hz != y.sample_rate_hz:
        raise InvalidInputError(
            f"signals differ: {len(x)} samples at {x.sample_rate_hz} Hz vs "
            f"{len(y)} samples at {y.sample_rate_hz} Hz"
        )
    noverlap, segments = _segmentation(len(x), segment_len, overlap_fraction)
    frequencies, density = signal.csd(
        x.samples,
        y.samples,
        fs=x.sample_rate_hz,
        window=window,
        nperseg=segment_len,
        noverlap=noverlap,
        detrend=False,
        scaling="density",
    )
    return SpectrumEstimate(
        frequencies, density, x.sample_rate_hz / segment_len, segments, SpectrumKind.CSD
    )


def coherence(
    x: SampleBuffer,
    y: SampleBuffer,
    segment_len: int = DEFAULT_SEGMENT_LEN,
    overlap_fraction: float = DEFAULT_OVERLAP,
    window: str = DEFAULT_WINDOW,
) -> SpectrumEstimate:
    """Magnitude-squared coherence ``|Sxy|² / (Sx·Sy)`` per bin.

    Bins where either auto-spectrum is below 1e-30 are set to 0.
    """
    params = {"segment_len": segment_len, "overlap_fraction": overlap_fraction, "window": window}
    sxy = cross_psd(x, y, **params)
    if sxy.segment_count < 2:
        raise InvalidInputError("coherence needs at least two segments")
    sxx = welch_psd(x, **params).values
    syy = welch_psd(y, **params).values

    valid = (sxx > ZERO_POWER) & (syy > ZERO_POWER)
    gamma_sq = np.zeros(sxx.shape)
    gamma_sq[valid] = np.abs(sxy.values[valid]) ** 2 / (sxx[valid] * syy[valid])
    return SpectrumEstimate(
        sxy.frequencies_hz,
        np.clip(gamma_sq, 0.0, 1.0),
        sxy.bin_width_hz,
        sxy.segment_count,
        SpectrumKind.COHERENCE,
    )


def max_cancellation_db(
    coh: SpectrumEstimate, ceiling_db: float = CANCELLATION_CEILING_DB
) -> SpectrumEstimate:
    """Theoretical cancellation limit ``-10·log10(1-γ²)`` per bin, capped at ``ceiling_db``."""
    gamma_sq = np.real(coh.values)
    if np.any(~np.isfinite(gamma_sq)) or np.any((gamma_sq < 0) | (gamma_sq > 1)):
        raise InvalidInputError("coherence values must lie in [0, 1]")
    residual = 1.0 - gamma_sq
    alpha = np.full(gamma_sq.shape, ceiling_db)
    open_bins = residual > 10.0 ** (-ceiling_db / 10.0)
    alpha[open_bins] = -10.0 * np.log10(residual[open_bins])
    return SpectrumEstimate(
        coh.frequencies_hz,
        np.minimum(alpha, ceiling_db),
        coh.bin_width_hz,
        coh.segment_count,
        SpectrumKind.CANCELLATION,
    )


def band_power(spectrum: SpectrumEstimate, f_lo: float, f_hi: float) -> float:
    """Integrated power of the bins whose centre lies in [f_lo, f_hi]."""
    mask = spectrum.band_mask(f_lo, f_hi)
    return float(np.sum(np.real(spectrum.values[mask])) * spectrum.bin_width_hz)


def rms_in_band(
    buffer: SampleBuffer,
    f_lo: float,
    f_hi: float,
    segment_len: int = DEFAULT_SEGMENT_LEN,
    overlap_fraction: float = DEFAULT_OVERLAP,
    window: str = DEFAULT_WINDOW,
) -> float:
    """RMS of ``buffer`` restricted to the band [f_lo, f_hi], in the buffer's units."""
    if not 0 <= f_lo < f_hi <= buffer.sample_rate_hz / 2:
        raise InvalidInputError(
            f"invalid band [{f_lo}, {f_hi}] Hz for sample rate {buffer.sample_rate_hz} Hz"
        )
    psd = welch_psd(buffer, segment_len, overlap_fraction, window)
    return float(np.sqrt(band_power(psd, f_lo, f_hi)))


def suppression_db(before_rms: float, after_rms: float) -> float:
    """Amplitude suppression ``20·log10(before/after)``."""
    if not (before_rms > 0 and after_rms > 0):
        raise InvalidInputError(
            f"suppression needs positive RMS values, got {before_rms} and {after_rms}"
        )
    return float(20.0 * np.log10(before_rms / after_rms))


def field_rms_to_larmor_hz(
    rms_nt: float, gamma_hz_per_nt: float = DEFAULT_GAMMA_HZ_PER_NT
) -> float:
    """Express a field RMS as a Larmor-frequency RMS."""
    if rms_nt < 0 or gamma_hz_per_nt < 0:
        raise InvalidInputError("field RMS and gyromagnetic ratio must be non-negative")
    return rms_nt * gamma_hz_per_nt


def tone_psd(spectrum: SpectrumEstimate, frequency_hz: float) -> float:
    """Power density at the bin nearest to ``frequency_hz``."""
    return float(np.real(spectrum.at(frequency_hz)))


def tone_suppression_db(
    before: SpectrumEstimate, after: SpectrumEstimate, frequency_hz: float
) -> float:
    """Amplitude suppression of a tone from matched Welch bins."""
    return suppression_db(
        np.sqrt(tone_psd(before, frequency_hz)), np.sqrt(tone_psd(after, frequency_hz))
    )


def amplitude_spectral_density(spectrum: SpectrumEstimate) -> SpectrumEstimate:
    """Square root of a power spectral density (units/√Hz)."""
    return SpectrumEstimate(
        spectrum.frequencies_hz,
        np.sqrt(np.real(spectrum.values)),
        spectrum.bin_width_hz,
        spectrum.segment_count,
        spectrum.kind,
    )
