"""Ambient 3-axis field: Earth field, line tones, drift, broadband noise and reference contamination."""

from __future__ import annotations

from dataclasses import dataclass
import logging
import math

import numpy as np
from scipy import signal

from ..config import EnvironmentConfig
from ..data_models.stage import AmbientMode, NoiseShape
from ..dsp.signals import make_rng, stream_seed
from ..errors import InvalidInputError
from .streams import FilteredNoise, StreamKey, first_order_lowpass, second_order_lowpass

_LOGGER = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class EnvironmentBlock:
    """A contiguous run of environment samples, one column per axis.

    Attributes:
        start_tick: Tick of the first row.
        ambient: Field at the reference sensor location, shape ``(n, 3)``.
        primary: Ambient field after the primary path, as seen at the error sensor.
        contamination: Noise seen by the reference sensor only.
    """

    start_tick: int
    ambient: np.ndarray
    primary: np.ndarray
    contamination: np.ndarray

    def __len__(self) -> int:
        return self.ambient.shape[0]


class _AxisSources:
    """Stochastic streams of one axis."""

    def __init__(self, config: EnvironmentConfig, fs: float, seed: int, axis: int):
        broadband = config.broadband
        self.drift = second_order_lowpass(
            stream_seed(seed, StreamKey.DRIFT, axis), config.drift.corner_hz, fs
        )
        self.broadband: list[FilteredNoise] = []
        self.white = None
        if broadband.shape is NoiseShape.PINK:
            decades = math.log10(broadband.f_hi_hz / broadband.f_lo_hz)
            sections = int(round(broadband.sections_per_decade * decades)) + 1
            for index, corner in enumerate(np.geomspace(broadband.f_lo_hz, broadband.f_hi_hz, sections)):
                self.broadband.append(
                    first_order_lowpass(stream_seed(seed, StreamKey.PINK, axis, index), corner, fs)
                )
        elif broadband.shape is NoiseShape.BROWN:
            self.broadband.append(
                first_order_lowpass(stream_seed(seed, StreamKey.BROADBAND, axis), broadband.f_lo_hz, fs)
            )
        else:
            self.white = make_rng(stream_seed(seed, StreamKey.BROADBAND, axis))
        self.line = [
            (
                first_order_lowpass(
                    stream_seed(seed, StreamKey.LINE, axis, tone, 0), config.line_bandwidth_hz / 2, fs
                ),
                first_order_lowpass(
                    stream_seed(seed, StreamKey.LINE, axis, tone, 1), config.line_bandwidth_hz / 2, fs
                ),
            )
            for tone in range(len(config.tones))
        ]
        self.reference = make_rng(stream_seed(seed, StreamKey.REFERENCE, axis))

    def broadband_block(self, n_samples: int) -> np.ndarray:
        if self.white is not None:
            return self.white.standard_normal(n_samples)
        # equal-variance sections sum to a 1/f spectrum
        total = sum(section.next_block(n_samples) for section in self.broadband)
        return total / math.sqrt(len(self.broadband))


class NoiseEnvironment:
    """Deterministic ambient field generator.

    Samples are generated in blocks of ``block_len`` and read forwards one tick
    at a time. Every stochastic part has its own seed stream, so the same
    ``seed`` reproduces the same field bit for bit.

    Args:
        config: Environment description.
        sample_rate_hz: Sample rate.
        seed: Master seed.
        ambient: ``AmbientMode.DC`` keeps only the static Earth field.
        block_len: Samples per generated block, one second by default.
    """

    def __init__(
        self,
        config: EnvironmentConfig,
        sample_rate_hz: float,
        seed: int = 0,
        ambient: AmbientMode = AmbientMode.FULL,
        block_len: int | None = None,
    ):
        if not sample_rate_hz > 0:
            raise InvalidInputError(f"sample rate must be positive, got {sample_rate_hz}")
        self._config = config
        self._fs = float(sample_rate_hz)
        self._seed = seed
        self._mode = AmbientMode(ambient)
        self._block_len = block_len or max(int(round(sample_rate_hz)), 1)
        self._dc = np.asarray(config.dc_field_nt, dtype=np.float64)
        self._primary_taps = (
            None if config.primary_path is None else np.asarray(config.primary_path, dtype=np.float64)
        )
        self.reset()

    @property
    def config(self) -> EnvironmentConfig:
        return self._config

    @property
    def mode(self) -> AmbientMode:
        return self._mode

    @property
    def sample_rate_hz(self) -> float:
        return self._fs

    @property
    def block_len(self) -> int:
        return self._block_len

    def reset(self) -> None:
        """Rewind to tick 0 with freshly seeded streams."""
        self._sources = [_AxisSources(self._config, self._fs, self._seed, axis) for axis in range(3)]
        self._primary_state = (
            None
            if self._primary_taps is None
            else [np.zeros(self._primary_taps.size - 1) for _ in range(3)]
        )
        self._next_start = 0
        self._block: EnvironmentBlock | None = None
        self._rows: tuple[list, list, list] | None = None

    def _tones(self, times: np.ndarray) -> np.ndarray:
        out = np.zeros((times.size, 3))
        for tone in self._config.tones:
            envelope = 1.0 + tone.drift_rate * times
            for axis in range(3):
                out[:, axis] += (
                    tone.amplitude_nt[axis]
                    * envelope
                    * np.sin(2.0 * np.pi * tone.frequency_hz * times + tone.phase_rad[axis])
                )
        return out

    def _contamination(self, times: np.ndarray) -> np.ndarray:
        config = self._config
        n_samples = times.size
        out = np.zeros((n_samples, 3))
        for axis, sources in enumerate(self._sources):
            # streams advance even when their contribution is zero
            white = sources.reference.standard_normal(n_samples)
            out[:, axis] += config.reference_contamination_sigma_nt * white
            for tone, (in_phase, quadrature) in zip(config.tones, sources.line):
                u1 = in_phase.next_block(n_samples)
                u2 = quadrature.next_block(n_samples)
                scale = tone.amplitude_nt[axis] * math.sqrt(config.line_contamination / 2.0)
                phase = 2.0 * np.pi * tone.frequency_hz * times
                out[:, axis] += scale * (u1 * np.sin(phase) + u2 * np.cos(phase))
        return out

    def _generate_block(self) -> EnvironmentBlock:
        start = self._next_start
        n_samples = self._block_len
        self._next_start += n_samples
        if self._mode is AmbientMode.DC:
            ambient = np.tile(self._dc, (n_samples, 1))
            contamination = np.zeros((n_samples, 3))
        else:
            times = (start + np.arange(n_samples)) / self._fs
            ambient = self._tones(times) + self._dc
            for axis, sources in enumerate(self._sources):
                ambient[:, axis] += self._config.drift.sigma_nt[axis] * sources.drift.next_block(n_samples)
                ambient[:, axis] += self._config.broadband.sigma_nt[axis] * sources.broadband_block(n_samples)
            contamination = self._contamination(times)
        primary = ambient
        if self._primary_taps is not None:
            primary = np.empty_like(ambient)
            for axis in range(3):
                primary[:, axis], self._primary_state[axis] = signal.lfilter(
                    self._primary_taps, [1.0], ambient[:, axis], zi=self._primary_state[axis]
                )
        _LOGGER.debug("Generated environment block at tick %d", start)
        return EnvironmentBlock(start, ambient, primary, contamination)

    def block_at(self, tick: int) -> EnvironmentBlock:
        """The block containing ``tick``. Ticks must not move backwards past the current block."""
        if tick < 0:
            raise InvalidInputError(f"tick must be non-negative, got {tick}")
        block = self._block
        if block is not None and block.start_tick <= tick < block.start_tick + len(block):
            return block
        if block is not None and tick < block.start_tick:
            raise InvalidInputError(f"tick {tick} is before the current block at {block.start_tick}")
        while True:
            block = self._generate_block()
            if tick < block.start_tick + len(block):
                break
        self._block = block
        self._rows = (block.ambient.tolist(), block.primary.tolist(), block.contamination.tolist())
        return block

    def sample(self, tick: int) -> tuple[list[float], list[float], list[float]]:
        """Ambient, primary and contamination 3-vectors at ``tick``."""
        block = self.block_at(tick)
        ambient, primary, contamination = self._rows
        offset = tick - block.start_tick
        return ambient[offset], primary[offset], contamination[offset]

    def field(self, tick: int) -> tuple[float, float, float]:
        """Ambient 3-vector in nT at ``tick``."""
        return tuple(self.sample(tick)[0])

    def generate(self, n_samples: int) -> EnvironmentBlock:
        """Rewind and return the first ``n_samples`` ticks as one block."""
        if n_samples < 1:
            raise InvalidInputError(f"n_samples must be at least 1, got {n_samples}")
        self.reset()
        blocks = []
        while self._next_start < n_samples:
            blocks.append(self._generate_block())
        self.reset()
        return EnvironmentBlock(
            0,
            np.concatenate([b.ambient for b in blocks])[:n_samples],
            np.concatenate([b.primary for b in blocks])[:n_samples],
            np.concatenate([b.contamination for b in blocks])[:n_samples],
        )


def environment_step(env: NoiseEnvironment, tick: int) -> tuple[float, float, float]:
    """Ambient field in nT at ``tick``; deterministic for a given seed and tick sequence."""
    return env.field(tick)
