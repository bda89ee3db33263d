from test.conftest import QUIET_CHANNEL, QUIET_ENVIRONMENT, make_config
from test.test_secondary_path import _stage

import math

import numpy as np
import pytest

from maganc.data_models.secondary_path import PrenullResult, SecondaryPathModel, SecondaryPathStage
from maganc.data_models.stage import Axis
from maganc.managers import AncManager, PidManager, SecondaryPathManager
from maganc.managers.anc import _hold_gains

DRIFT_ENVIRONMENT = {
    **QUIET_ENVIRONMENT,
    "tones": [{"frequency_hz": 50.0, "amplitude_nt": [100.0, 100.0, 100.0], "phase_rad": [0.0, 1.0, 2.0]}],
    "drift": {"sigma_nt": [300.0, 0.0, 0.0]},
}


def _rms(values) -> float:
    return float(np.sqrt(np.mean(np.square(values))))


def _matched_stage(config) -> SecondaryPathStage:
    """Models equal to the simulated channels, no DC to null."""
    models = tuple(
        SecondaryPathModel(
            axis=axis,
            sample_rate_hz=config.sample_rate_hz,
            M=truth.coefficients.size,
            mu_sp=1e-3,
            duration_s=1.0,
            residual_power=0.0,
            coefficients=tuple(float(c) for c in truth.coefficients),
        )
        for axis, truth in zip(Axis, SecondaryPathManager(config).true_responses())
    )
    return SecondaryPathStage(models=models, prenull=PrenullResult(dc_offsets=(0.0, 0.0, 0.0)))


class TestHoldGains:
    def test_crossover_sets_integral_gain(self, fast_config):
        model = _stage().models[0]

        gains = _hold_gains(fast_config, model, Axis.X)

        dc_gain = sum(model.coefficients)
        assert gains.ki == pytest.approx(2 * math.pi * fast_config.anc.dc_hold_crossover_hz / dc_gain)
        assert gains.kp == 0.0
        assert gains.output_limit == fast_config.pid.output_limit
        assert gains.dt_s == fast_config.sample_period_s

    def test_disabled_by_zero_crossover(self):
        config = make_config(anc={"dc_hold_crossover_hz": 0.0})

        assert _hold_gains(config, _stage().models[0], Axis.X) is None

    def test_disabled_without_dc_gain(self, fast_config):
        model = _stage().models[0].model_copy(update={"coefficients": (0.5, -0.5, 0.0, 0.0)})

        assert _hold_gains(fast_config, model, Axis.X) is None


class TestLowFrequencyDrift:
    @pytest.fixture(scope="class")
    def config(self):
        return make_config(environment=DRIFT_ENVIRONMENT, channels=[QUIET_CHANNEL] * 3)

    @pytest.fixture(scope="class")
    def raw(self, config):
        return PidManager(config).run_raw(PrenullResult(dc_offsets=(0.0, 0.0, 0.0)), duration_s=10.0)

    def _run(self, config):
        return AncManager(config).run(_matched_stage(config), sequential=False, duration_s=10.0)

    def test_drift_is_held_and_filters_stay_bounded(self, config, raw):
        anc = self._run(config)
        fs = int(config.sample_rate_hz)

        assert anc.saturated is False
        assert _rms(anc.error[-5 * fs :, 0]) < _rms(raw.error[-5 * fs :, 0]) / 10.0
        assert np.linalg.norm(anc.weights["final"][0]) < 10.0

    def test_drift_passes_without_hold(self, config):
        anc = config.anc.model_copy(update={"dc_hold_crossover_hz": 0.0})
        unheld = config.model_copy(update={"anc": anc})
        fs = int(config.sample_rate_hz)

        held = self._run(config)
        free = self._run(unheld)

        assert _rms(free.error[-5 * fs :, 0]) > 5.0 * _rms(held.error[-5 * fs :, 0])
