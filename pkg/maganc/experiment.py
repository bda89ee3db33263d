from __future__ import annotations

from collections.abc import Sequence
from functools import cached_property
import logging

from .config import ExperimentConfig
from .data_models.recording import StageRecording
from .data_models.report import RunReport
from .data_models.secondary_path import SecondaryPathStage
from .data_models.stage import Stage
from .managers.anc import AncManager
from .managers.coherence import CoherenceManager
from .managers.pid import PidManager
from .managers.reports import ReportManager
from .managers.secondary_path import SecondaryPathManager

_LOGGER = logging.getLogger(__name__)


class Experiment:
    """Entry point for the staged 3-axis active noise control experiment.

    Provides access to the stage managers as cached properties. Every
    manager works on the same configuration and master seed.

    Args:
        config: Experiment configuration, all defaults when omitted.
        debug: Enable debug logging for the whole package.
    """

    def __init__(self, config: ExperimentConfig | None = None, debug: bool = False):
        self._config = config or ExperimentConfig()
        if debug:
            logging.getLogger("maganc").setLevel(logging.DEBUG)

    @property
    def config(self) -> ExperimentConfig:
        return self._config

    @cached_property
    def secondary_path(self) -> SecondaryPathManager:
        """Access secondary path identification and model storage."""
        return SecondaryPathManager(self._config)

    @cached_property
    def anc(self) -> AncManager:
        """Access the FxLMS cancellation stage."""
        return AncManager(self._config)

    @cached_property
    def pid(self) -> PidManager:
        """Access the raw noise and PID baseline stages."""
        return PidManager(self._config)

    @cached_property
    def reports(self) -> ReportManager:
        """Access report building and output writing."""
        return ReportManager(self._config)

    @cached_property
    def coherence(self) -> CoherenceManager:
        """Access the reference coherence scan."""
        return CoherenceManager(self._config)

    def record(
        self,
        stages: Sequence[Stage] = (Stage.RAW, Stage.PID, Stage.ANC),
        sp_stage: SecondaryPathStage | None = None,
    ) -> dict[Stage, StageRecording]:
        """Record the requested stages, identifying the secondary path first if needed.

        The raw stage is always recorded since every report is relative to it.
        """
        if sp_stage is None:
            sp_stage = self.secondary_path.run()
        recordings = {Stage.RAW: self.pid.run_raw(sp_stage.prenull)}
        if Stage.PID in stages:
            recordings[Stage.PID] = self.pid.run_baseline(sp_stage.prenull)
        if Stage.ANC in stages:
            recordings[Stage.ANC] = self.anc.run(sp_stage)
        return recordings

    def run(
        self,
        stages: Sequence[Stage] = (Stage.RAW, Stage.PID, Stage.ANC),
        sp_stage: SecondaryPathStage | None = None,
    ) -> tuple[RunReport, dict[Stage, StageRecording]]:
        """Record ``stages`` and build their report."""
        recordings = self.record(stages, sp_stage)
        ordered = [stage for stage in Stage if stage in stages or stage is Stage.RAW]
        report = self.reports.build(recordings, ordered)
        return report, recordings
