import pytest

from maganc.config import ExperimentConfig, config_hash, environment_overrides, load_config
from maganc.data_models.stage import AmbientMode, NoiseShape
from maganc.errors import ConfigError


class TestDefaults:
    def test_experiment_defaults(self):
        config = ExperimentConfig()

        assert config.sample_rate_hz == 5000.0
        assert config.filter_length == 128
        assert config.sp.ambient is AmbientMode.DC
        assert config.environment.broadband.shape is NoiseShape.PINK
        assert [tone.frequency_hz for tone in config.environment.tones] == [50.0, 150.0]
        assert config.samples(1.5) == 7500
        assert config.sample_period_s == pytest.approx(2e-4)

    def test_welch_kwargs(self):
        assert ExperimentConfig().welch.kwargs() == {
            "segment_len": 4096,
            "overlap_fraction": 0.5,
            "window": "hann",
        }

    def test_sections_are_frozen(self):
        config = ExperimentConfig()

        with pytest.raises(ValueError):
            config.seed = 3


class TestValidation:
    @pytest.mark.parametrize(
        "environment",
        [
            {"crosstalk": [[0.9, 0, 0], [0, 1, 0], [0, 0, 1]]},
            {"crosstalk": [[1, 1.2, 0], [0, 1, 0], [0, 0, 1]]},
            {"echo_coupling": 1.0},
            {"echo_coupling": -0.1},
        ],
    )
    def test_environment_rejected(self, environment):
        with pytest.raises(ValueError):
            ExperimentConfig(environment=environment)

    def test_unknown_key(self):
        with pytest.raises(ValueError):
            ExperimentConfig.model_validate({"filter_lenght": 64})

    def test_band_above_nyquist(self):
        with pytest.raises(ValueError):
            ExperimentConfig(report={"bands": [(0.0, 3000.0)]})

    @pytest.mark.parametrize(
        "name", ["reference_highpass_hz", "dc_hold_crossover_hz", "convergence_highpass_hz"]
    )
    def test_anc_corner_above_nyquist(self, name):
        with pytest.raises(ValueError, match=name):
            ExperimentConfig(anc={name: 2600.0})

    def test_anc_low_frequency_defaults(self):
        anc = ExperimentConfig().anc

        assert anc.reference_highpass_hz == 1.0
        assert anc.dc_hold_crossover_hz == 10.0
        assert anc.convergence_highpass_hz == 5.0

    def test_three_channels_required(self):
        with pytest.raises(ValueError):
            ExperimentConfig(channels=[{}, {}])

    def test_analysis_shorter_than_a_segment(self):
        with pytest.raises(ValueError):
            ExperimentConfig(duration_anc_s=21.0, report={"settle_s": 20.5})


class TestLoadConfig:
    def test_defaults_without_file(self):
        assert load_config(environ={}) == ExperimentConfig()

    def test_toml_merges_into_defaults(self, tmp_path):
        path = tmp_path / "run.toml"
        path.write_text(
            "seed = 7\n\n[environment]\necho_coupling = 0.1\n\n[environment.drift]\ncorner_hz = 0.5\n"
        )

        config = load_config(path, environ={})

        assert config.seed == 7
        assert config.environment.echo_coupling == 0.1
        assert config.environment.drift.corner_hz == 0.5
        assert config.environment.drift.sigma_nt == ExperimentConfig().environment.drift.sigma_nt

    def test_environment_variables(self):
        environ = {
            "ANC_SEED": "9",
            "ANC_ENVIRONMENT__ECHO_COUPLING": "0.2",
            "ANC_PID.KP": "0.001",
            "HOME": "/root",
        }

        config = load_config(environ=environ)

        assert config.seed == 9
        assert config.environment.echo_coupling == 0.2
        assert config.pid.kp == 0.001

    def test_environment_override_names(self):
        assert environment_overrides({"ANC_SP__AMBIENT": "full", "PATH": "/bin"}) == {"sp.ambient": "full"}

    def test_explicit_overrides_win(self):
        config = load_config(overrides={"seed": 3, "channels.1.dac_gain": 2.0}, environ={"ANC_SEED": "9"})

        assert config.seed == 3
        assert config.channels[1].dac_gain == 2.0
        assert config.channels[0].dac_gain == 1.0

    def test_missing_file(self, tmp_path):
        path = tmp_path / "absent.toml"

        with pytest.raises(ConfigError) as exc_info:
            load_config(path, environ={})

        assert exc_info.value.path == str(path)

    def test_invalid_toml(self, tmp_path):
        path = tmp_path / "broken.toml"
        path.write_text("seed = \n")

        with pytest.raises(ConfigError, match="invalid TOML"):
            load_config(path, environ={})

    def test_unknown_key_in_file(self, tmp_path):
        path = tmp_path / "typo.toml"
        path.write_text("[anc]\nphase_one_max_s = 3\n")

        with pytest.raises(ConfigError) as exc_info:
            load_config(path, environ={})

        assert "phase_one_max_s" in exc_info.value.message
        assert exc_info.value.path == str(path)

    def test_bad_list_index(self):
        with pytest.raises(ConfigError):
            load_config(overrides={"channels.5.dac_gain": 2.0}, environ={})


class TestConfigHash:
    def test_stable(self):
        assert config_hash(ExperimentConfig()) == config_hash(load_config(environ={}))
        assert len(config_hash(ExperimentConfig())) == 16

    def test_changes_with_content(self):
        assert config_hash(ExperimentConfig(seed=1)) != config_hash(ExperimentConfig(seed=2))
