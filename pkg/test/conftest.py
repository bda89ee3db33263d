from test.test_const import CONST_SAMPLE_RATE_HZ, CONST_SEED

import numpy as np
import pytest

from maganc.config import ExperimentConfig
from maganc.data_models.signal import SampleBuffer
from maganc.experiment import Experiment

QUIET_CHANNEL = {
    "aa_cutoff_hz": None,
    "extra_delay_samples": 0,
    "noise_floor_nt": 0.0,
    "quantize": False,
}

QUIET_ENVIRONMENT = {
    "dc_field_nt": [0.0, 0.0, 0.0],
    "tones": [],
    "drift": {"sigma_nt": [0.0, 0.0, 0.0]},
    "broadband": {"sigma_nt": [0.0, 0.0, 0.0]},
    "crosstalk": [[1, 0, 0], [0, 1, 0], [0, 0, 1]],
    "echo_coupling": 0.0,
    "reference_quantize": False,
}


def make_config(**overrides) -> ExperimentConfig:
    """Short-running configuration; keyword arguments replace top-level sections."""
    data = {
        "seed": CONST_SEED,
        "sample_rate_hz": CONST_SAMPLE_RATE_HZ,
        "duration_sp_s": 5.0,
        "duration_anc_s": 12.0,
        "prenull": {"hold_s": 0.5, "reference_average_s": 0.5},
        "anc": {"convergence_window_s": 0.5, "phase1_max_s": 5.0},
        "welch": {"segment_len": 4096},
        "report": {"settle_s": 4.0},
        "scan": {"duration_s": 12.0, "analysis_s": 8.0},
    }
    data.update(overrides)
    return ExperimentConfig.model_validate(data)


@pytest.fixture
def fast_config() -> ExperimentConfig:
    return make_config()


@pytest.fixture
def quiet_config() -> ExperimentConfig:
    """Noise-free ideal converters and an empty environment."""
    return make_config(environment=QUIET_ENVIRONMENT, channels=[QUIET_CHANNEL] * 3)


@pytest.fixture(scope="session")
def tones_experiment() -> Experiment:
    """Line tones only, no cross-talk: the cancellation problem is exactly solvable."""
    config = make_config(
        environment={
            "drift": {"sigma_nt": [0.0, 0.0, 0.0]},
            "broadband": {"sigma_nt": [0.0, 0.0, 0.0]},
            "crosstalk": [[1, 0, 0], [0, 1, 0], [0, 0, 1]],
        },
    )
    return Experiment(config)


@pytest.fixture(scope="session")
def tones_sp_stage(tones_experiment):
    return tones_experiment.secondary_path.run()


@pytest.fixture(scope="session")
def tones_run(tones_experiment, tones_sp_stage):
    return tones_experiment.run(sp_stage=tones_sp_stage)


@pytest.fixture(scope="session")
def default_experiment() -> Experiment:
    """The default laboratory environment: drift, pink noise, cross-talk and echo all present."""
    config = make_config(
        duration_anc_s=16.0,
        anc={"phase1_max_s": 20.0},
        scan={"levels": [0.0, 1 / 9], "duration_s": 60.0, "analysis_s": 40.0, "mu_safety": 2e-4},
    )
    return Experiment(config)


@pytest.fixture(scope="session")
def default_sp_stage(default_experiment):
    return default_experiment.secondary_path.run()


@pytest.fixture(scope="session")
def default_run(default_experiment, default_sp_stage):
    return default_experiment.run(sp_stage=default_sp_stage)


@pytest.fixture
def white_buffer() -> SampleBuffer:
    rng = np.random.default_rng(7)
    return SampleBuffer(rng.standard_normal(200_000), CONST_SAMPLE_RATE_HZ)
