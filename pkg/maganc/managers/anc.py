from __future__ import annotations

import logging
import math
from typing import TYPE_CHECKING

import numpy as np

from ..adaptive.convergence import ConvergenceMonitor
from ..adaptive.fxlms import (
    FxLmsState,
    fxlms_compute_antinoise,
    fxlms_filter_reference,
    fxlms_update,
)
from ..controllers import PidGains, PidState, pid_step
from ..data_models.recording import StageRecording
from ..data_models.report import AncDiagnostics, ConvergenceEntry
from ..data_models.secondary_path import SecondaryPathModel, SecondaryPathStage
from ..data_models.stage import Axis, Stage
from ..dsp.signals import StreamingHighpass
from ..errors import DegenerateSignalError, DivergenceError
from ..testbench import Testbench
from ..utils import format_vector

if TYPE_CHECKING:
    from ..config import ExperimentConfig

_LOGGER = logging.getLogger(__name__)

NORM_CHECK_INTERVAL = 256
DC_GAIN_FLOOR = 1e-3


class _AncLoop:
    """Three FxLMS filters driving one testbench with one tick of controller latency.

    Each axis drives its pre-null offset, the output of an integral hold on
    the error below the reference high-pass corner, and, once active, the
    FxLMS anti-noise computed from the high-passed reference.
    """

    def __init__(self, config: ExperimentConfig, sp_stage: SecondaryPathStage, bench: Testbench):
        settings = config.anc
        fs = config.sample_rate_hz
        self._config = config
        self._bench = bench
        self._offsets = sp_stage.prenull.dc_offsets
        self._reference_offsets = sp_stage.prenull.reference_offsets
        self._error_offsets = sp_stage.prenull.error_offsets
        # the step size is set after calibration
        self.states = [
            FxLmsState.create(config.filter_length, model, mu=1.0) for model in sp_stage.models
        ]
        self._reference_filters = [StreamingHighpass(settings.reference_highpass_hz, fs) for _ in Axis]
        self._monitor_filters = [StreamingHighpass(settings.convergence_highpass_hz, fs) for _ in Axis]
        self.hold_gains = [_hold_gains(config, model, axis) for model, axis in zip(sp_stage.models, Axis)]
        self._hold_states = [PidState() for _ in Axis]
        self.hold = [0.0, 0.0, 0.0]
        self.trace: list[tuple[float, float, float]] = []
        self.ticks = 0

    def tick(self, adapt: tuple[bool, bool, bool], active: tuple[bool, bool, bool], phase: str):
        """One sample: actuate, sense, adapt the flagged axes, then push x(n).

        Returns the reading and the offset-corrected errors high-passed for
        the convergence monitor.
        """
        drive = [offset + hold for offset, hold in zip(self._offsets, self.hold)]
        for k, state in enumerate(self.states):
            if active[k]:
                drive[k] += fxlms_compute_antinoise(state)
        reading = self._bench.sense(drive)
        errors = [reading.error_nt[k] - self._error_offsets[k] for k in range(3)]
        for k, state in enumerate(self.states):
            if adapt[k]:
                try:
                    fxlms_update(state, errors[k])
                except DivergenceError as err:
                    raise DivergenceError(self.ticks, "xyz"[k], phase) from err
            reference = reading.reference_nt[k] - self._reference_offsets[k]
            fxlms_filter_reference(state, self._reference_filters[k].step(reference))
            gains = self.hold_gains[k]
            if gains is not None:
                self.hold[k], self._hold_states[k] = pid_step(gains, self._hold_states[k], -errors[k])
        if self.ticks % NORM_CHECK_INTERVAL == 0:
            for k, state in enumerate(self.states):
                if adapt[k]:
                    state.w.check_divergence(
                        self.ticks, self._config.anc.divergence_norm, "xyz"[k], phase
                    )
        self.trace.append(reading.error_nt)
        self.ticks += 1
        return reading, [f.step(e) for f, e in zip(self._monitor_filters, errors)]


def _hold_gains(config: ExperimentConfig, model: SecondaryPathModel, axis: Axis) -> PidGains | None:
    """Integral-only gains placing the hold crossover at ``anc.dc_hold_crossover_hz``.

    The loop gain is ``C(1) * ki / s`` with C(1) the DC gain of the identified
    path. Returns None when the hold is disabled or the model has no DC gain.
    """
    crossover = config.anc.dc_hold_crossover_hz
    if crossover == 0:
        return None
    dc_gain = math.fsum(model.coefficients)
    norm = float(np.linalg.norm(model.coefficients))
    if norm == 0 or abs(dc_gain) <= DC_GAIN_FLOOR * norm:
        _LOGGER.warning("Secondary path of axis %s has no DC gain, low-frequency hold disabled", axis.value)
        return None
    return PidGains(
        ki=2 * math.pi * crossover / dc_gain,
        output_limit=config.pid.output_limit,
        dt_s=config.sample_period_s,
    )


class AncManager:
    """Run the staged 3-axis FxLMS cancellation.

    Access via ``experiment.anc``.
    """

    def __init__(self, config: ExperimentConfig):
        self._config = config

    def run(
        self,
        sp_stage: SecondaryPathStage,
        *,
        sequential: bool = True,
        duration_s: float | None = None,
        mu_safety: float | None = None,
        config: ExperimentConfig | None = None,
    ) -> StageRecording:
        """Calibrate, adapt each axis alone, then all axes together.

        The anti-noise filters start from zero. During calibration they stay
        silent while the filtered-reference power P_x' of every axis is
        measured, giving ``mu_anc = mu_safety / (M * P_x')``. Phase 1 adapts
        x, y and z one after another until each reaches steady state (or
        ``anc.phase1_max_s`` elapses); phase 2 adapts all three at once for
        ``duration_anc_s`` and is the recorded part.

        The channels start settled on the pre-null offsets. The reference is
        high-passed at ``anc.reference_highpass_hz`` before it enters the
        filters, so slow drift never reaches the adaptation; an integral hold
        on each error, running from the first calibration tick, keeps that
        band nulled instead.

        Args:
            sp_stage: Identified secondary path models and DC offsets.
            sequential: Run phase 1; False starts phase 2 directly.
            duration_s: Phase 2 length, ``duration_anc_s`` by default.
            mu_safety: Fraction of the stability bound, ``mu_anc_safety`` by default.
            config: Run against a modified configuration.

        Raises:
            DegenerateSignalError: A filtered reference has zero power.
            DivergenceError: A filter diverged; names the axis and phase.
        """
        config = config or self._config
        settings = config.anc
        fs = config.sample_rate_hz
        duration_s = config.duration_anc_s if duration_s is None else duration_s
        mu_safety = config.mu_anc_safety if mu_safety is None else mu_safety
        bench = Testbench(config, initial_drive=sp_stage.prenull.dc_offsets)
        loop = _AncLoop(config, sp_stage, bench)
        _LOGGER.debug(
            "Low-frequency hold ki %s",
            ", ".join("off" if gains is None else f"{gains.ki:.4g}" for gains in loop.hold_gains),
        )
        silent = (False, False, False)

        _LOGGER.info("ANC stage: calibrating for %.1f s", settings.calibration_s)
        energy = np.zeros(3)
        n_calibration = max(config.samples(settings.calibration_s), 1)
        for _ in range(n_calibration):
            loop.tick(silent, silent, "calibration")
            energy += [state.xf_history[0] ** 2 for state in loop.states]
        power = energy / n_calibration
        for k, axis in enumerate(Axis):
            if power[k] <= 0:
                raise DegenerateSignalError(f"filtered reference of axis {axis.value} has zero power")
        mu = mu_safety / (config.filter_length * power)
        for state, value in zip(loop.states, mu):
            state.mu = float(value)
        _LOGGER.info("Filtered reference power %s, mu_anc %s", format_vector(power), format_vector(mu))

        convergence: list[ConvergenceEntry] = []
        active = [False, False, False]
        if sequential:
            limit = config.samples(settings.phase1_max_s)
            for k, axis in enumerate(Axis):
                active[k] = True
                adapt = tuple(j == k for j in range(3))
                monitor = self._monitor(config)
                for _ in range(limit):
                    _, errors = loop.tick(adapt, tuple(active), "phase1")
                    if monitor.push(errors[k]):
                        break
                convergence.append(
                    ConvergenceEntry(
                        axis=axis,
                        phase="phase1",
                        converged=monitor.converged,
                        time_s=monitor.converged_at_s,
                    )
                )
                if monitor.converged:
                    _LOGGER.info("Axis %s converged after %.1f s", axis.value, monitor.converged_at_s)
                else:
                    _LOGGER.warning(
                        "Axis %s did not reach steady state within %.1f s, continuing",
                        axis.value,
                        settings.phase1_max_s,
                    )
        phase1_ticks = loop.ticks - n_calibration
        phase1_weights = np.array([state.w.coefficients.copy() for state in loop.states])

        _LOGGER.info("ANC stage: all axes simultaneously for %.1f s", duration_s)
        everything = (True, True, True)
        monitors = [self._monitor(config) for _ in Axis]
        n_samples = config.samples(duration_s)
        error = np.empty((n_samples, 3))
        reference = np.empty((n_samples, 3))
        second = max(int(round(fs)), 1)
        for n in range(n_samples):
            reading, errors = loop.tick(everything, everything, "phase2")
            error[n] = reading.error_nt
            reference[n] = reading.reference_nt
            for monitor, value in zip(monitors, errors):
                monitor.push(value)
            if (n + 1) % second == 0:
                norms = format_vector(state.w.norm for state in loop.states)
                _LOGGER.debug("phase2 t=%.0f s, |w| %s", (n + 1) / fs, norms)
        for axis, monitor in zip(Axis, monitors):
            convergence.append(
                ConvergenceEntry(
                    axis=axis, phase="phase2", converged=monitor.converged, time_s=monitor.converged_at_s
                )
            )
            if monitor.growing:
                _LOGGER.warning("Axis %s error is still growing at the end of phase 2", axis.value)
        final_weights = np.array([state.w.coefficients.copy() for state in loop.states])

        drift = None
        if sequential:
            drift = tuple(
                float(np.linalg.norm(final - start) / np.linalg.norm(start))
                if np.linalg.norm(start) > 0
                else 0.0
                for start, final in zip(phase1_weights, final_weights)
            )
            _LOGGER.info("Coefficient drift between phases %s", format_vector(drift))

        diagnostics = AncDiagnostics(
            filtered_reference_power=tuple(float(p) for p in power),
            mu_anc=tuple(float(m) for m in mu),
            convergence=convergence,
            coefficient_drift=drift,
            phase1_ticks=phase1_ticks,
        )
        return StageRecording(
            stage=Stage.ANC,
            sample_rate_hz=fs,
            error=error,
            reference=reference,
            trace=np.array(loop.trace),
            saturated=bench.saturated,
            diagnostics=diagnostics,
            weights={"phase1": phase1_weights, "final": final_weights},
        )

    @staticmethod
    def _monitor(config: ExperimentConfig) -> ConvergenceMonitor:
        return ConvergenceMonitor(
            config.sample_rate_hz,
            config.anc.convergence_window_s,
            config.anc.rel_tolerance,
            config.anc.consecutive,
        )
