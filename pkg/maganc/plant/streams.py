"""Seeded noise streams generated block by block."""

from __future__ import annotations

from enum import IntEnum
import math

import numpy as np
from scipy import signal

from ..dsp.signals import make_rng

NOISE_BLOCK_LEN = 4096


class StreamKey(IntEnum):
    """First spawn-key element of each stochastic stream under the master seed."""

    DRIFT = 1
    PINK = 2
    BROADBAND = 3
    LINE = 4
    REFERENCE = 5
    SENSOR = 6
    SP_DRIVE = 7


class NoiseCursor:
    """Sample-at-a-time reader over a standard normal stream."""

    def __init__(self, seed: int | np.random.SeedSequence, block_len: int = NOISE_BLOCK_LEN):
        self._rng = make_rng(seed)
        self._block_len = block_len
        self._block: list[float] = []
        self._position = 0

    def next(self) -> float:
        """Next standard normal sample."""
        if self._position >= len(self._block):
            self._block = self._rng.standard_normal(self._block_len).tolist()
            self._position = 0
        value = self._block[self._position]
        self._position += 1
        return value


class FilteredNoise:
    """Unit-variance Gaussian noise shaped by an IIR filter, carried across blocks."""

    def __init__(
        self,
        seed: int | np.random.SeedSequence,
        b: np.ndarray,
        a: np.ndarray,
        initial_state: np.ndarray | None = None,
        burn_in: int = 0,
    ):
        self._rng = make_rng(seed)
        self._b = np.asarray(b, dtype=np.float64)
        self._a = np.asarray(a, dtype=np.float64)
        order = max(self._a.size, self._b.size) - 1
        self._state = np.zeros(order) if initial_state is None else initial_state
        if burn_in:
            self.next_block(burn_in)

    def next_block(self, n_samples: int) -> np.ndarray:
        """The next ``n_samples`` of the stream."""
        out, self._state = signal.lfilter(
            self._b, self._a, self._rng.standard_normal(n_samples), zi=self._state
        )
        return out


def pole_for_corner(corner_hz: float, sample_rate_hz: float) -> float:
    """Pole of a one-pole low-pass with the given corner frequency."""
    return math.exp(-2.0 * math.pi * corner_hz / sample_rate_hz)


def first_order_lowpass(
    seed: np.random.SeedSequence, corner_hz: float, sample_rate_hz: float
) -> FilteredNoise:
    """Unit-variance AR(1) process (Lorentzian spectrum) started in steady state."""
    pole = pole_for_corner(corner_hz, sample_rate_hz)
    rng = make_rng(seed.spawn(1)[0])
    # DF-II transposed state for y[-1] ~ N(0, 1)
    initial = np.array([pole * rng.standard_normal()])
    return FilteredNoise(seed, [math.sqrt(1.0 - pole * pole)], [1.0, -pole], initial)


def second_order_lowpass(
    seed: np.random.SeedSequence, corner_hz: float, sample_rate_hz: float
) -> FilteredNoise:
    """Unit-variance critically damped two-pole process, burned in to steady state."""
    pole = pole_for_corner(corner_hz, sample_rate_hz)
    # variance of white noise through 1/(1 - p z^-1)^2
    gain = (1.0 + pole * pole) / (1.0 - pole * pole) ** 3
    burn_in = int(math.ceil(12.0 / (1.0 - pole)))
    return FilteredNoise(
        seed, [1.0 / math.sqrt(gain)], [1.0, -2.0 * pole, pole * pole], burn_in=burn_in
    )
