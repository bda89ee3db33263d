from test.test_const import (
    CONST_BAND_LARMOR_HZ,
    CONST_BAND_RMS_NT,
    CONST_GAMMA_HZ_PER_NT,
    CONST_SAMPLE_RATE_HZ,
)

import json

import numpy as np
import pytest

from maganc.data_models.recording import StageRecording
from maganc.data_models.stage import Axis, Stage
from maganc.dsp.io import read_sample_buffer
from maganc.errors import MissingStageError
from maganc.managers import ReportManager
from maganc.managers.reports import build_report, tone_column

N_SAMPLES = int(12 * CONST_SAMPLE_RATE_HZ)
FULL_BAND = (0.0, 1000.0)


def _recording(stage: Stage, tone_nt: float, noise_nt: float, seed: int = 0) -> StageRecording:
    t = np.arange(N_SAMPLES) / CONST_SAMPLE_RATE_HZ
    rng = np.random.default_rng(seed)
    tone = np.sin(2 * np.pi * 50.0 * t)
    error = np.column_stack([tone_nt * tone + noise_nt * rng.standard_normal(N_SAMPLES) for _ in Axis])
    reference = np.column_stack([100.0 * tone + 0.5 * rng.standard_normal(N_SAMPLES) for _ in Axis])
    return StageRecording(
        stage=stage,
        sample_rate_hz=CONST_SAMPLE_RATE_HZ,
        error=error,
        reference=reference,
        trace=error,
    )


@pytest.fixture
def recordings():
    return {
        Stage.RAW: _recording(Stage.RAW, 100.0, 0.5, seed=1),
        Stage.ANC: _recording(Stage.ANC, 1.0, 0.5, seed=1),
    }


class TestBuildReport:
    def test_rows_per_axis_stage_and_band(self, recordings, fast_config):
        report = build_report(recordings, fast_config)

        assert report.stages == [Stage.RAW, Stage.ANC]
        assert len(report.rows) == 3 * 2 * len(fast_config.report.bands)

    def test_larmor_equivalent(self, recordings, fast_config):
        report = build_report(recordings, fast_config)

        for row in report.rows:
            assert row.rms_larmor_hz == pytest.approx(CONST_GAMMA_HZ_PER_NT * row.rms_nt)

    def test_raw_band_rms(self, recordings, fast_config):
        row = build_report(recordings, fast_config).row(Axis.X, Stage.RAW, FULL_BAND)

        assert row.rms_nt == pytest.approx(np.sqrt(100.0**2 / 2 + 0.25 * 1000 / 2500), rel=0.02)
        assert row.band_suppression is None
        assert row.tones == []

    def test_table_band_noise(self, fast_config):
        t = np.arange(N_SAMPLES) / CONST_SAMPLE_RATE_HZ
        tone = np.sqrt(2) * np.sin(2 * np.pi * 100.0 * t)
        error = np.column_stack([rms * tone for rms in CONST_BAND_RMS_NT])
        raw = StageRecording(Stage.RAW, CONST_SAMPLE_RATE_HZ, error, error + 1.0, error)

        report = build_report({Stage.RAW: raw}, fast_config)

        for axis, rms, larmor in zip(Axis, CONST_BAND_RMS_NT, CONST_BAND_LARMOR_HZ):
            row = report.row(axis, Stage.RAW, FULL_BAND)
            assert row.rms_nt == pytest.approx(rms, rel=0.01)
            assert row.rms_larmor_hz == pytest.approx(larmor, rel=0.01)

    def test_tone_suppression(self, recordings, fast_config):
        row = build_report(recordings, fast_config).row(Axis.Y, Stage.ANC, FULL_BAND)

        entry = row.tone(50.0)
        assert entry.value_db == pytest.approx(40.0, abs=0.5)
        assert entry.at_ceiling is False
        assert row.band_suppression.frequency_hz is None

    def test_noise_floor_sentinel(self, recordings, fast_config):
        recordings[Stage.ANC] = _recording(Stage.ANC, 0.0, 0.0)

        row = build_report(recordings, fast_config).row(Axis.Z, Stage.ANC, FULL_BAND)

        assert row.tone(50.0).at_ceiling is True
        assert row.tone(50.0).value_db == fast_config.report.ceiling_db
        assert row.band_suppression.at_ceiling is True

    def test_coherence_of_raw_stage(self, recordings, fast_config):
        report = build_report(recordings, fast_config)

        spectrum = report.coherence[0]
        index = int(np.argmin(np.abs(np.array(spectrum.frequencies_hz) - 50.0)))
        assert spectrum.gamma_sq[index] > 0.99
        assert spectrum.alpha_db[index] > 20.0
        assert spectrum.segment_count >= 2

    def test_is_pure(self, recordings, fast_config):
        assert build_report(recordings, fast_config) == build_report(recordings, fast_config)

    def test_raw_stage_required(self, recordings, fast_config):
        del recordings[Stage.RAW]

        with pytest.raises(MissingStageError) as exc_info:
            build_report(recordings, fast_config)

        assert exc_info.value.stage == "raw"

    def test_requested_stage_missing(self, recordings, fast_config):
        with pytest.raises(MissingStageError) as exc_info:
            build_report(recordings, fast_config, [Stage.RAW, Stage.PID])

        assert exc_info.value.stage == "pid"

    def test_row_lookup_misses(self, recordings, fast_config):
        report = build_report(recordings, fast_config)

        with pytest.raises(KeyError):
            report.row(Axis.X, Stage.PID, FULL_BAND)


class TestReportManager:
    def test_report_csv(self, recordings, fast_config, tmp_path):
        manager = ReportManager(fast_config)
        recordings[Stage.ANC] = _recording(Stage.ANC, 0.0, 0.0)
        report = manager.build(recordings)

        lines = manager.write_report_csv(report, tmp_path / "report.csv").read_text().splitlines()

        assert lines[0] == f"# {manager.header_comment}"
        assert lines[1].split(",")[-2:] == [tone_column(50.0), tone_column(150.0)]
        assert tone_column(50.0) == "supp_50hz_db"
        raw_row = lines[2].split(",")
        anc_row = next(line for line in lines if line.startswith("x,anc,")).split(",")
        assert raw_row[-2:] == ["", ""]
        assert anc_row[-2] == ">=60"

    def test_write_run_directory(self, recordings, fast_config, tmp_path):
        manager = ReportManager(fast_config)
        report = manager.build(recordings)

        written = manager.write(report, recordings, tmp_path)

        names = {str(p.relative_to(tmp_path)) for p in written}
        assert {"report.csv", "report.json", "coherence.csv", "manifest.json"} <= names
        assert {"spectra_raw.csv", "trace_anc.csv", "streams/anc_reference_z.ancb"} <= names
        assert written[-1].name == "manifest.json"

        stream = read_sample_buffer(tmp_path / "streams" / "raw_error_x.ancb")
        assert stream.samples.tobytes() == recordings[Stage.RAW].error[:, 0].tobytes()

        manifest = json.loads((tmp_path / "manifest.json").read_text())
        assert manifest["seed"] == fast_config.seed
        assert manifest["offsets"] is None
        assert "report.json" in manifest["files"]

        document = json.loads((tmp_path / "report.json").read_text())
        assert document["config_hash"] == manifest["config_hash"]

    def test_trace_is_decimated(self, recordings, fast_config, tmp_path):
        manager = ReportManager(fast_config)

        path = manager.write_trace_csv(recordings[Stage.RAW], tmp_path / "trace.csv")

        lines = path.read_text().splitlines()

        assert lines[1] == "time_s,x,y,z"
        assert len(lines) == 2 + N_SAMPLES // fast_config.report.trace_decimation
        assert lines[3].startswith("0.002,")
