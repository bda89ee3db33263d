"""Lockstep 3-axis simulation of the shielded-room hardware."""

from __future__ import annotations

from collections.abc import Sequence
import logging

from .config import ExperimentConfig
from .data_models.sensor import SensorReading
from .data_models.stage import AmbientMode
from .dsp.signals import stream_seed
from .plant.channel import AdcQuantizer, SecondaryPathChannel
from .plant.environment import NoiseEnvironment
from .plant.streams import StreamKey

_LOGGER = logging.getLogger(__name__)


class Testbench:
    """Low-level plant driven by the managers.

    One call to :meth:`sense` advances the environment and all three channels
    by one tick. The error sensor sees the cross-talk mix of primary field and
    anti-noise; the reference sensor sees the ambient field, the echo fraction
    of its own axis' anti-noise and any contamination.

    Most users should go through :class:`maganc.Experiment` instead.

    Args:
        config: Experiment configuration.
        seed: Master seed, ``config.seed`` when omitted.
        ambient: Which part of the ambient field to generate.
        initial_drive: Per-axis drive the channels are settled on before the
            first tick, usually the DC pre-null offsets. Rest when omitted.
    """

    __test__ = False

    def __init__(
        self,
        config: ExperimentConfig,
        seed: int | None = None,
        ambient: AmbientMode = AmbientMode.FULL,
        initial_drive: Sequence[float] | None = None,
    ):
        self._config = config
        self._seed = config.seed if seed is None else seed
        environment = config.environment
        self._environment = NoiseEnvironment(
            environment, config.sample_rate_hz, self._seed, ambient=ambient
        )
        self._channels = [
            SecondaryPathChannel.from_config(
                channel, config.sample_rate_hz, stream_seed(self._seed, StreamKey.SENSOR, axis)
            )
            for axis, channel in enumerate(config.channels)
        ]
        if initial_drive is not None:
            for channel, drive in zip(self._channels, initial_drive, strict=True):
                channel.preload(drive)
        self._crosstalk = [list(row) for row in environment.crosstalk]
        self._echo = environment.echo_coupling
        self._reference_adc = AdcQuantizer(
            environment.reference_adc_bits,
            environment.reference_adc_range_nt,
            environment.reference_quantize,
        )
        self._tick = 0
        _LOGGER.debug("Testbench ready: seed %d, ambient %s", self._seed, self._environment.mode.value)

    @property
    def config(self) -> ExperimentConfig:
        return self._config

    @property
    def seed(self) -> int:
        return self._seed

    @property
    def tick(self) -> int:
        """Index of the next tick :meth:`sense` will produce."""
        return self._tick

    @property
    def environment(self) -> NoiseEnvironment:
        return self._environment

    @property
    def channels(self) -> list[SecondaryPathChannel]:
        return self._channels

    @property
    def reference_adc(self) -> AdcQuantizer:
        return self._reference_adc

    @property
    def saturated(self) -> bool:
        """True once any DAC or ADC has clipped."""
        return self._reference_adc.saturated or any(ch.saturated for ch in self._channels)

    @property
    def dac_saturated(self) -> bool:
        return any(ch.dac_saturated for ch in self._channels)

    def sense(self, drive: Sequence[float]) -> SensorReading:
        """Apply ``drive`` to the three channels for one tick and read both sensors."""
        ambient, primary, contamination = self._environment.sample(self._tick)
        channels = self._channels
        anti_noise = [channels[k].field(drive[k]) for k in range(3)]
        combined = [primary[k] + anti_noise[k] for k in range(3)]
        error = []
        reference = []
        for k in range(3):
            row = self._crosstalk[k]
            mixed = row[0] * combined[0] + row[1] * combined[1] + row[2] * combined[2]
            error.append(channels[k].adc(mixed + channels[k].sensor_noise()))
            reference.append(
                self._reference_adc(ambient[k] + self._echo * anti_noise[k] + contamination[k])
            )
        reading = SensorReading(self._tick, tuple(error), tuple(reference), tuple(anti_noise))
        self._tick += 1
        return reading


def sense(bench: Testbench, anti_noise_drive: Sequence[float]) -> SensorReading:
    """One lockstep tick of ``bench``; see :meth:`Testbench.sense`."""
    return bench.sense(anti_noise_drive)
