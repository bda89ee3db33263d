"""Filtered-x LMS anti-noise filter."""

from __future__ import annotations

from dataclasses import dataclass
import math

import numpy as np

from ..data_models.secondary_path import SecondaryPathModel
from ..data_models.signal import FirFilter
from ..errors import DivergenceError
from .lms import AdaptiveFir


@dataclass(eq=False)
class FxLmsState:
    """Anti-noise filter W(z) together with the frozen secondary path model C(z).

    ``x_history`` keeps enough reference samples for both filters; W reads its
    first M entries. ``xf_history`` holds the filtered reference x'(n).
    """

    w: AdaptiveFir
    secondary_path: np.ndarray
    x_history: np.ndarray
    xf_history: np.ndarray

    @classmethod
    def create(
        cls,
        taps: int,
        secondary_path: SecondaryPathModel | FirFilter,
        mu: float,
        coefficients: np.ndarray | None = None,
    ) -> FxLmsState:
        """Fresh state with zero histories.

        Args:
            taps: Length M of the anti-noise filter.
            secondary_path: Frozen estimate C(z).
            mu: Step size mu_anc.
            coefficients: Warm-start coefficients for W; zeros when omitted.
        """
        path = np.asarray(secondary_path.coefficients, dtype=np.float64)
        x_history = np.zeros(max(taps, path.size))
        initial = np.zeros(taps) if coefficients is None else coefficients
        w = AdaptiveFir(initial, np.zeros(taps), mu)
        w.delay_line = x_history[:taps]
        return cls(w, path, x_history, np.zeros(taps))

    @property
    def taps(self) -> int:
        """Length M of W."""
        return self.w.taps

    @property
    def mu(self) -> float:
        """Step size mu_anc."""
        return self.w.mu

    @mu.setter
    def mu(self, value: float) -> None:
        self.w.mu = value


def fxlms_filter_reference(state: FxLmsState, x_n: float) -> float:
    """Push x(n) and return the filtered reference ``x'(n) = Σ c(i)·x(n-i)``."""
    history = state.x_history
    history[1:] = history[:-1]
    history[0] = x_n
    xf = float(np.dot(state.secondary_path, history[: state.secondary_path.size]))
    filtered = state.xf_history
    filtered[1:] = filtered[:-1]
    filtered[0] = xf
    return xf


def fxlms_compute_antinoise(state: FxLmsState) -> float:
    """Anti-noise sample ``y(n) = Σ w_i(n)·x(n-i)`` for the actuator."""
    return float(np.dot(state.w.coefficients, state.w.delay_line))


def fxlms_update(state: FxLmsState, e_n: float) -> FxLmsState:
    """Apply ``w_i(n+1) = w_i(n) - mu·e(n)·x'(n-i)`` in place."""
    if not math.isfinite(e_n):
        raise DivergenceError(phase="anc")
    state.w.coefficients -= (state.w.mu * e_n) * state.xf_history
    return state
