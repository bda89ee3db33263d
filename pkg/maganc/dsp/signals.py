from __future__ import annotations

import numpy as np
from scipy import signal

from ..data_models.signal import FirFilter, SampleBuffer, WhiteNoiseSource
from ..errors import InvalidInputError

BAND_LIMIT_TAPS = 101


def stream_seed(master_seed: int, *key: int) -> np.random.SeedSequence:
    """Child seed for the stream identified by ``key`` under ``master_seed``."""
    return np.random.SeedSequence(master_seed, spawn_key=tuple(key))


def make_rng(seed: int | np.random.SeedSequence) -> np.random.Generator:
    """Counter-based Philox generator for ``seed``."""
    return np.random.Generator(np.random.Philox(seed))


def fir_apply(fir: FirFilter, buffer: SampleBuffer) -> SampleBuffer:
    """Convolve ``buffer`` with ``fir`` from a zero initial state.

    Args:
        fir: Filter to apply.
        buffer: Signal to filter. Must not be empty.

    Returns:
        Filtered signal with the same length and sample rate as ``buffer``.
    """
    buffer.require_samples()
    output = signal.lfilter(fir.coefficients, [1.0], buffer.samples)
    return SampleBuffer(output, buffer.sample_rate_hz)


def generate_white_noise(
    source: WhiteNoiseSource, n_samples: int, sample_rate_hz: float
) -> SampleBuffer:
    """Draw ``n_samples`` of Gaussian white noise described by ``source``.

    The output is bit-identical for a fixed seed. When the source is band
    limited, a windowed-sinc low-pass is applied and its power gain divided
    out, so the variance stays ``sigma**2``.
    """
    if n_samples < 1:
        raise InvalidInputError(f"n_samples must be >= 1, got {n_samples}")
    if not sample_rate_hz > 0:
        raise InvalidInputError(f"sample_rate_hz must be positive, got {sample_rate_hz}")

    rng = make_rng(source.seed)
    if source.band_limit_hz is None:
        return SampleBuffer(source.sigma * rng.standard_normal(n_samples), sample_rate_hz)

    if source.band_limit_hz >= sample_rate_hz / 2:
        raise InvalidInputError(
            f"band_limit_hz {source.band_limit_hz} must be below Nyquist ({sample_rate_hz / 2})"
        )
    taps = signal.firwin(BAND_LIMIT_TAPS, source.band_limit_hz, fs=sample_rate_hz)
    # warm-up samples are dropped so the filter starts in steady state
    white = rng.standard_normal(n_samples + BAND_LIMIT_TAPS - 1)
    shaped = signal.lfilter(taps, [1.0], white)[BAND_LIMIT_TAPS - 1 :]
    shaped *= source.sigma / np.sqrt(np.sum(taps**2))
    return SampleBuffer(shaped, sample_rate_hz)


class StreamingHighpass:
    """Butterworth high-pass evaluated one sample at a time.

    The second-order sections come from :func:`scipy.signal.butter` and run
    in transposed direct form II. The state is primed on the first sample so
    that a constant input produces no start-up transient.

    Args:
        cutoff_hz: -3 dB corner.
        sample_rate_hz: Sampling rate.
        order: Filter order, an even number gives whole sections.
    """

    def __init__(self, cutoff_hz: float, sample_rate_hz: float, order: int = 2):
        if not 0 < cutoff_hz < sample_rate_hz / 2:
            raise InvalidInputError(
                f"high-pass corner {cutoff_hz} Hz must lie between 0 and Nyquist ({sample_rate_hz / 2})"
            )
        self._sos = signal.butter(order, cutoff_hz, "highpass", fs=sample_rate_hz, output="sos")
        self._zi_unit = signal.sosfilt_zi(self._sos)
        self._sections = [tuple(float(c) for c in row) for row in self._sos]
        self._state: list[list[float]] | None = None

    @property
    def sos(self) -> np.ndarray:
        """Second-order sections, one row ``b0 b1 b2 a0 a1 a2`` each."""
        return self._sos

    def reset(self) -> None:
        """Forget the state; the next sample primes it again."""
        self._state = None

    def step(self, value: float) -> float:
        """Filter one sample."""
        if self._state is None:
            self._state = [[float(z) * value for z in row] for row in self._zi_unit]
        for (b0, b1, b2, _, a1, a2), z in zip(self._sections, self._state):
            out = b0 * value + z[0]
            z[0] = b1 * value - a1 * out + z[1]
            z[1] = b2 * value - a2 * out
            value = out
        return value
