"""Per-axis secondary path: DAC, current source and coil, sensor, anti-alias filter, ADC."""

from __future__ import annotations

import numpy as np
from scipy import signal

from ..data_models.signal import FirFilter
from ..errors import InvalidInputError
from .streams import NoiseCursor


class AdcQuantizer:
    """Mid-tread quantizer over the two's complement codes of ``bits``.

    Codes run from ``-2**(bits-1)`` to ``2**(bits-1) - 1``, so the largest
    reading is one step below full scale. Any input whose code falls outside
    that span is clipped and latches :attr:`saturated`. With ``enabled`` False
    the converter is ideal: no rounding, no clipping.
    """

    def __init__(self, bits: int, range_nt: float, enabled: bool = True):
        if bits < 8:
            raise InvalidInputError(f"ADC needs at least 8 bits, got {bits}")
        if not range_nt > 0:
            raise InvalidInputError(f"ADC range must be positive, got {range_nt}")
        self._range = float(range_nt)
        self._step = 2.0 * self._range / 2**bits
        self._max_code = 2 ** (bits - 1) - 1
        self._min_code = -(2 ** (bits - 1))
        self._enabled = enabled
        self.saturated = False

    @property
    def step(self) -> float:
        """Quantization step ``2·range/2**bits``."""
        return self._step

    @property
    def enabled(self) -> bool:
        """Whether rounding and clipping are applied."""
        return self._enabled

    def __call__(self, value: float) -> float:
        if not self._enabled:
            return value
        code = round(value / self._step)
        if code > self._max_code:
            code = self._max_code
            self.saturated = True
        elif code < self._min_code:
            code = self._min_code
            self.saturated = True
        return self._step * code


class SecondaryPathChannel:
    """Simulated hardware chain H(z) of one axis.

    The drive is clipped to the DAC range, scaled by the DAC gain and run
    through the composite impulse response (actuator, anti-alias filter and
    extra delay). :meth:`field` returns that anti-noise field; :meth:`step`
    also adds the sensor noise floor and passes the ADC.

    Args:
        actuator_fir: Current source and coil response in nT per volt.
        aa_filter: Anti-alias low-pass.
        dac_gain: Volts per drive unit.
        dac_range: Largest drive magnitude before clipping.
        extra_delay_samples: Processing delay in samples.
        noise_floor_nt: Sensor noise standard deviation.
        adc_bits: ADC resolution.
        adc_range_nt: ADC full scale (±).
        quantize: Apply ADC rounding and clipping.
        noise_seed: Seed of the sensor noise stream.
    """

    def __init__(
        self,
        actuator_fir: FirFilter,
        aa_filter: FirFilter | None = None,
        *,
        dac_gain: float = 1.0,
        dac_range: float = 1000.0,
        extra_delay_samples: int = 0,
        noise_floor_nt: float = 0.0,
        adc_bits: int = 16,
        adc_range_nt: float = 1000.0,
        quantize: bool = True,
        noise_seed: int | np.random.SeedSequence | None = None,
    ):
        if extra_delay_samples < 0:
            raise InvalidInputError("extra_delay_samples must be non-negative")
        if noise_floor_nt < 0:
            raise InvalidInputError("noise_floor_nt must be non-negative")
        response = actuator_fir if aa_filter is None else actuator_fir.then(aa_filter)
        self._composite = response.delayed(extra_delay_samples)
        self._taps = np.array(self._composite.coefficients)
        self._history = np.zeros(self._taps.size)
        self._dac_gain = float(dac_gain)
        self._dac_range = float(dac_range)
        self._noise_floor = float(noise_floor_nt)
        self._noise = NoiseCursor(noise_seed if noise_seed is not None else 0)
        self.adc = AdcQuantizer(adc_bits, adc_range_nt, quantize)
        self.dac_saturated = False

    @classmethod
    def from_config(
        cls, config, sample_rate_hz: float, noise_seed: int | np.random.SeedSequence | None = None
    ) -> SecondaryPathChannel:
        """Build a channel from a ``ChannelConfig``."""
        actuator = FirFilter(np.asarray(config.actuator_taps) * config.actuator_gain_nt_per_v)
        aa_filter = None
        if config.aa_cutoff_hz is not None:
            aa_filter = FirFilter(
                signal.firwin(config.aa_taps, config.aa_cutoff_hz, fs=sample_rate_hz)
            )
        return cls(
            actuator,
            aa_filter,
            dac_gain=config.dac_gain,
            dac_range=config.dac_range,
            extra_delay_samples=config.extra_delay_samples,
            noise_floor_nt=config.noise_floor_nt,
            adc_bits=config.adc_bits,
            adc_range_nt=config.adc_range_nt,
            quantize=config.quantize,
            noise_seed=noise_seed,
        )

    @property
    def composite_response(self) -> FirFilter:
        """Impulse response from drive unit to field in nT, DAC gain included."""
        return FirFilter(self._composite.coefficients * self._dac_gain)

    @property
    def quantization_step(self) -> float:
        """ADC step in nT."""
        return self.adc.step

    @property
    def noise_floor_nt(self) -> float:
        """Sensor noise standard deviation."""
        return self._noise_floor

    @property
    def saturated(self) -> bool:
        """True once the DAC or the ADC has clipped."""
        return self.dac_saturated or self.adc.saturated

    def reset_flags(self) -> None:
        """Clear the saturation flags."""
        self.dac_saturated = False
        self.adc.saturated = False

    def _clip(self, drive: float) -> float:
        if drive > self._dac_range:
            self.dac_saturated = True
            return self._dac_range
        if drive < -self._dac_range:
            self.dac_saturated = True
            return -self._dac_range
        return drive

    def preload(self, drive: float) -> None:
        """Fill the history as if ``drive`` had been held forever.

        The next :meth:`field` call then starts from the settled response to
        ``drive`` instead of from rest.
        """
        self._history[:] = self._dac_gain * self._clip(float(drive))

    def field(self, drive: float) -> float:
        """Advance one sample and return the noise-free anti-noise field in nT."""
        drive = self._clip(drive)
        history = self._history
        history[1:] = history[:-1]
        history[0] = self._dac_gain * drive
        return float(np.dot(self._taps, history))

    def sensor_noise(self) -> float:
        """One sample of the sensor noise floor."""
        if self._noise_floor == 0.0:
            return 0.0
        return self._noise_floor * self._noise.next()

    def step(self, drive: float) -> float:
        """Drive the channel alone and read its sensor."""
        return self.adc(self.field(drive) + self.sensor_noise())


def plant_step(channel: SecondaryPathChannel, drive: float) -> float:
    """Advance ``channel`` by one sample and return the quantized sensor reading."""
    return channel.step(drive)
