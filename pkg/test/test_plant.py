from test.conftest import QUIET_CHANNEL, QUIET_ENVIRONMENT, make_config
from test.test_const import CONST_SAMPLE_RATE_HZ

import numpy as np
import pytest

from maganc.config import ChannelConfig, EnvironmentConfig
from maganc.data_models.signal import FirFilter, SampleBuffer
from maganc.data_models.stage import AmbientMode
from maganc.dsp.spectral import welch_psd
from maganc.errors import InvalidInputError
from maganc.plant import AdcQuantizer, NoiseEnvironment, SecondaryPathChannel, environment_step, plant_step
from maganc.testbench import Testbench, sense

FS = CONST_SAMPLE_RATE_HZ

SILENT_ENVIRONMENT = {
    "dc_field_nt": [0.0, 0.0, 0.0],
    "tones": [],
    "drift": {"sigma_nt": [0.0, 0.0, 0.0]},
    "broadband": {"sigma_nt": [0.0, 0.0, 0.0]},
}


def _impulse_response(channel: SecondaryPathChannel, length: int) -> np.ndarray:
    return np.array([channel.field(1.0 if n == 0 else 0.0) for n in range(length)])


class TestAdcQuantizer:
    def test_step(self):
        assert AdcQuantizer(16, 100.0).step == pytest.approx(0.00305, abs=1e-5)

    def test_rounds_to_nearest_step(self):
        adc = AdcQuantizer(16, 100.0)

        assert adc(0.004) == adc.step
        assert adc(-0.001) == 0.0
        assert adc.saturated is False

    def test_clips_and_flags(self):
        adc = AdcQuantizer(16, 100.0)

        assert adc(150.0) == 100.0 - adc.step
        assert adc(-150.0) == -100.0
        assert adc.saturated is True

    def test_flags_whenever_it_clips(self):
        adc = AdcQuantizer(8, 100.0)
        step = adc.step
        assert step == 0.78125

        reading = adc(100.0 - step / 4)

        assert reading == 100.0 - step
        assert adc.saturated is True

    def test_top_code_neighbourhood_is_plain_rounding(self):
        adc = AdcQuantizer(8, 100.0)
        value = 100.0 - adc.step + adc.step / 4

        reading = adc(value)

        assert reading == 100.0 - adc.step
        assert abs(reading - value) <= adc.step / 2
        assert adc.saturated is False

    def test_bottom_code_is_full_scale(self):
        adc = AdcQuantizer(8, 100.0)

        assert adc(-100.0 - adc.step / 4) == -100.0
        assert adc.saturated is False
        assert adc(-100.0 - adc.step) == -100.0
        assert adc.saturated is True

    def test_disabled_is_ideal(self):
        adc = AdcQuantizer(16, 100.0, enabled=False)

        assert adc(123.456) == 123.456
        assert adc.saturated is False

    @pytest.mark.parametrize("bits, range_nt", [(4, 100.0), (16, 0.0)])
    def test_rejects_bad_converter(self, bits, range_nt):
        with pytest.raises(InvalidInputError):
            AdcQuantizer(bits, range_nt)


class TestSecondaryPathChannel:
    def test_impulse_response_is_composite(self):
        channel = SecondaryPathChannel.from_config(ChannelConfig(quantize=False, noise_floor_nt=0.0), FS)
        composite = channel.composite_response.coefficients

        response = _impulse_response(channel, composite.size)

        assert np.allclose(response, composite, atol=1e-12)
        assert int(np.argmax(np.abs(composite))) >= ChannelConfig().extra_delay_samples

    def test_extra_delay(self):
        channel = SecondaryPathChannel.from_config(
            ChannelConfig(**{**QUIET_CHANNEL, "extra_delay_samples": 5}), FS
        )

        response = _impulse_response(channel, 8)

        assert response.tolist() == pytest.approx([0.0] * 5 + [70.0, 30.0, 0.0])

    def test_dac_gain_scales_response(self):
        channel = SecondaryPathChannel.from_config(ChannelConfig(**QUIET_CHANNEL, dac_gain=2.0), FS)

        assert channel.composite_response.coefficients.tolist() == pytest.approx([140.0, 60.0])

    def test_dac_saturation(self):
        channel = SecondaryPathChannel.from_config(ChannelConfig(**QUIET_CHANNEL, dac_range=10.0), FS)

        assert channel.field(25.0) == pytest.approx(700.0)
        assert channel.dac_saturated is True
        assert channel.saturated is True

        channel.reset_flags()
        assert channel.saturated is False

    def test_quantized_reading(self):
        channel = SecondaryPathChannel.from_config(
            ChannelConfig(**{**QUIET_CHANNEL, "quantize": True}, adc_range_nt=100.0), FS
        )

        reading = plant_step(channel, 0.01)

        assert channel.quantization_step == pytest.approx(0.00305, abs=1e-5)
        assert reading == channel.quantization_step * round(0.7 / channel.quantization_step)

    def test_sensor_noise_floor(self):
        channel = SecondaryPathChannel.from_config(
            ChannelConfig(**{**QUIET_CHANNEL, "noise_floor_nt": 0.5}), FS, noise_seed=4
        )

        readings = np.array([channel.step(0.0) for _ in range(20_000)])

        assert channel.noise_floor_nt == 0.5
        assert np.std(readings) == pytest.approx(0.5, rel=0.03)

    def test_preload_starts_settled(self):
        channel = SecondaryPathChannel.from_config(ChannelConfig(quantize=False, noise_floor_nt=0.0), FS)
        dc_gain = float(np.sum(channel.composite_response.coefficients))

        channel.preload(-4.8)

        assert channel.field(-4.8) == pytest.approx(-4.8 * dc_gain, rel=1e-12)
        assert channel.saturated is False

    def test_preload_clips_to_dac_range(self):
        channel = SecondaryPathChannel.from_config(ChannelConfig(**QUIET_CHANNEL, dac_range=10.0), FS)

        channel.preload(25.0)

        assert channel.field(0.0) == pytest.approx(300.0)
        assert channel.dac_saturated is True

    def test_rejects_negative_delay(self):
        with pytest.raises(InvalidInputError):
            SecondaryPathChannel(FirFilter([1.0]), extra_delay_samples=-1)


class TestNoiseEnvironment:
    def test_dc_only(self):
        env = NoiseEnvironment(EnvironmentConfig(), FS, seed=3, ambient=AmbientMode.DC)

        block = env.generate(1000)

        assert np.all(block.ambient == np.array([48000.0, 5000.0, 20000.0]))
        assert not np.any(block.contamination)

    def test_single_tone(self):
        config = EnvironmentConfig(
            **{
                **SILENT_ENVIRONMENT,
                "tones": [
                    {"frequency_hz": 50.0, "amplitude_nt": [10.0, 0.0, 2.0], "phase_rad": [0.0, 0.0, 1.0]}
                ],
            }
        )
        t = np.arange(2 * int(FS)) / FS

        block = NoiseEnvironment(config, FS).generate(t.size)

        assert np.allclose(block.ambient[:, 0], 10.0 * np.sin(2 * np.pi * 50.0 * t), atol=1e-9)
        assert np.allclose(block.ambient[:, 2], 2.0 * np.sin(2 * np.pi * 50.0 * t + 1.0), atol=1e-9)
        assert not np.any(block.ambient[:, 1])

    def test_tone_amplitude_drift(self):
        config = EnvironmentConfig(
            **{
                **SILENT_ENVIRONMENT,
                "tones": [{"frequency_hz": 50.0, "amplitude_nt": [10.0, 0.0, 0.0], "drift_rate": 0.1}],
            }
        )
        env = NoiseEnvironment(config, FS)

        block = env.generate(int(10 * FS))

        assert np.max(np.abs(block.ambient[-int(FS) :, 0])) == pytest.approx(20.0, rel=0.05)

    def test_pink_slope(self):
        config = EnvironmentConfig(
            **{**SILENT_ENVIRONMENT, "broadband": {"sigma_nt": [1.0, 0.0, 0.0], "shape": "pink"}}
        )
        block = NoiseEnvironment(config, FS, seed=5).generate(int(60 * FS))
        psd = welch_psd(SampleBuffer(block.ambient[:, 0], FS), segment_len=16384)

        low = np.mean(psd.values[psd.band_mask(8.0, 12.0)])
        high = np.mean(psd.values[psd.band_mask(80.0, 120.0)])

        assert 10 * np.log10(low / high) == pytest.approx(10.0, abs=2.0)
        assert np.std(block.ambient[:, 0]) == pytest.approx(1.0, rel=0.2)

    def test_deterministic_for_a_seed(self):
        config = EnvironmentConfig()
        first = NoiseEnvironment(config, FS, seed=9).generate(7000)
        second = NoiseEnvironment(config, FS, seed=9).generate(7000)
        other = NoiseEnvironment(config, FS, seed=10).generate(7000)

        assert first.ambient.tobytes() == second.ambient.tobytes()
        assert not np.array_equal(first.ambient, other.ambient)

    def test_tick_reads_match_generate(self):
        env = NoiseEnvironment(EnvironmentConfig(), FS, seed=2, block_len=1000)
        block = env.generate(2500)

        ticks = [environment_step(env, tick) for tick in range(2500)]

        assert np.array_equal(np.array(ticks), block.ambient)

    def test_rejects_going_back(self):
        env = NoiseEnvironment(EnvironmentConfig(), FS, block_len=100)
        env.sample(250)

        with pytest.raises(InvalidInputError):
            env.sample(10)

    def test_line_contamination_only_at_reference(self):
        config = EnvironmentConfig(
            **{
                **SILENT_ENVIRONMENT,
                "tones": [{"frequency_hz": 50.0, "amplitude_nt": [10.0, 10.0, 10.0]}],
                "line_contamination": 1.0,
            }
        )
        block = NoiseEnvironment(config, FS, seed=1).generate(int(40 * FS))

        assert np.mean(block.contamination[:, 0] ** 2) == pytest.approx(50.0, rel=0.5)
        assert np.allclose(block.primary, block.ambient)

    def test_primary_path(self):
        config = EnvironmentConfig(
            **{**SILENT_ENVIRONMENT, "dc_field_nt": [1.0, 2.0, 3.0], "primary_path": [0.0, 0.5]}
        )

        block = NoiseEnvironment(config, FS).generate(3)

        assert block.primary[:, 1].tolist() == [0.0, 1.0, 1.0]


class TestTestbench:
    def test_superposition(self, quiet_config):
        rng = np.random.default_rng(8)
        a = rng.standard_normal((500, 3))
        b = rng.standard_normal((500, 3))
        benches = [Testbench(quiet_config) for _ in range(3)]

        readings = [
            [np.array(sense(bench, drive).error_nt) for drive in drives]
            for bench, drives in zip(benches, (a, b, a + b))
        ]

        assert np.allclose(np.array(readings[2]), np.array(readings[0]) + np.array(readings[1]), atol=1e-9)

    def test_superposition_over_live_ambient(self):
        config = make_config(
            channels=[{"quantize": False}] * 3, environment={"reference_quantize": False}
        )
        rng = np.random.default_rng(9)
        drives = rng.standard_normal((400, 3))
        driven, idle = Testbench(config), Testbench(config)
        crosstalk = np.array(config.environment.crosstalk)
        echo = config.environment.echo_coupling

        for drive in drives:
            active = driven.sense(drive)
            silent = idle.sense([0.0, 0.0, 0.0])
            anti_noise = np.array(active.anti_noise_nt)

            assert np.allclose(
                np.subtract(active.error_nt, silent.error_nt), crosstalk @ anti_noise, atol=1e-6
            )
            assert np.allclose(
                np.subtract(active.reference_nt, silent.reference_nt), echo * anti_noise, atol=1e-6
            )
        assert abs(silent.error_nt[0]) > 1000.0

    def test_initial_drive_settles_channels(self):
        config = make_config(environment={**QUIET_ENVIRONMENT, "dc_field_nt": [48000.0, 5000.0, 20000.0]})
        offsets = (-480.0, -50.0, -200.0)

        cold = Testbench(config).sense(offsets)
        settled = Testbench(config, initial_drive=offsets)
        readings = [settled.sense(offsets) for _ in range(200)]

        assert abs(cold.error_nt[0]) >= config.channels[0].adc_range_nt - 1.0
        assert max(abs(v) for reading in readings for v in reading.error_nt) < 1.0
        assert settled.saturated is False

    def test_echo_reaches_reference(self):
        config = make_config(
            environment={**QUIET_ENVIRONMENT, "echo_coupling": 0.3}, channels=[QUIET_CHANNEL] * 3
        )
        bench = Testbench(config)

        reading = bench.sense([1.0, 0.0, 0.0])

        assert reading.anti_noise_nt == pytest.approx((70.0, 0.0, 0.0))
        assert reading.reference_nt[0] == pytest.approx(21.0)
        assert reading.reference_nt[1] == 0.0

    def test_crosstalk_mix(self):
        crosstalk = [[1.0, 0.0, 0.0], [0.25, 1.0, 0.0], [0.0, 0.0, 1.0]]
        config = make_config(
            environment={**QUIET_ENVIRONMENT, "crosstalk": crosstalk}, channels=[QUIET_CHANNEL] * 3
        )

        reading = Testbench(config).sense([1.0, 0.0, 0.0])

        assert reading.error_nt[0] == pytest.approx(70.0)
        assert reading.error_nt[1] == pytest.approx(17.5)
        assert reading.error_nt[2] == 0.0

    def test_ticks_advance(self, quiet_config):
        bench = Testbench(quiet_config)
        bench.sense([0.0, 0.0, 0.0])

        assert bench.sense([0.0, 0.0, 0.0]).tick == 1
        assert bench.tick == 2

    def test_same_seed_same_readings(self, fast_config):
        first = Testbench(fast_config).sense([0.0, 0.0, 0.0])
        second = Testbench(fast_config).sense([0.0, 0.0, 0.0])

        assert first == second

    def test_seed_override(self, fast_config):
        assert Testbench(fast_config, seed=99).seed == 99
        assert Testbench(fast_config).seed == fast_config.seed
