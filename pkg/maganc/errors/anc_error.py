from __future__ import annotations

from collections.abc import Sequence


class AncError(Exception):
    """Base class for every error raised by the library."""


class InvalidInputError(AncError, ValueError):
    """A numeric input violates the precondition of an operation."""


class DegenerateSignalError(InvalidInputError):
    """The signal is empty or carries no power."""


class ModelFormatError(InvalidInputError):
    """A stored stream or model document could not be decoded."""


class ConfigError(AncError):
    """Raised when a configuration file or override cannot be used.

    Attributes:
        path: Config file the error refers to, if any.
        message: Human readable description.
    """

    def __init__(self, message: str, path: str | None = None):
        self._message = message
        self._path = path
        super().__init__(f"{path}: {message}" if path else message)

    @property
    def message(self) -> str:
        """Description of the problem."""
        return self._message

    @property
    def path(self) -> str | None:
        """Path of the offending config file."""
        return self._path


class DivergenceError(AncError):
    """Raised when an adaptive filter or control loop blows up.

    Attributes:
        step: Sample index at which divergence was detected.
        axis: Axis name (``"x"``, ``"y"``, ``"z"``), if known.
        phase: Procedure phase, e.g. ``"sp"``, ``"phase1"``, ``"phase2"``.
        norm: Coefficient L2 norm at detection, or None for non-finite values.
    """

    def __init__(
        self,
        step: int | None = None,
        axis: str | None = None,
        phase: str | None = None,
        norm: float | None = None,
    ):
        self._step = step
        self._axis = axis
        self._phase = phase
        self._norm = norm
        where = ", ".join(
            part
            for part in (
                f"axis {axis}" if axis else "",
                f"phase {phase}" if phase else "",
            )
            if part
        )
        detail = f"coefficient norm {norm:.3g}" if norm is not None else "non-finite value"
        at = f" at step {step}" if step is not None else ""
        super().__init__(f"divergence{at}" + (f" ({where})" if where else "") + f": {detail}")

    @property
    def step(self) -> int | None:
        """Sample index of detection."""
        return self._step

    @property
    def axis(self) -> str | None:
        """Axis that diverged."""
        return self._axis

    @property
    def phase(self) -> str | None:
        """Phase in which divergence occurred."""
        return self._phase

    @property
    def norm(self) -> float | None:
        """Coefficient norm at detection."""
        return self._norm


class UnnulledDcError(AncError):
    """Raised when the error sensor still carries a DC field during identification."""

    def __init__(self, step: int, mean_nt: float, axis: str | None = None):
        self._step = step
        self._mean_nt = mean_nt
        self._axis = axis
        super().__init__(
            f"running mean of the error signal is {mean_nt:.3f} nT at step {step}"
            + (f" on axis {axis}" if axis else "")
            + "; pre-null the DC field first"
        )

    @property
    def step(self) -> int:
        """Sample index of detection."""
        return self._step

    @property
    def mean_nt(self) -> float:
        """Running mean of e(n) in nT."""
        return self._mean_nt

    @property
    def axis(self) -> str | None:
        """Axis being identified."""
        return self._axis


class SettleTimeoutError(AncError):
    """Raised when the DC pre-null loop does not settle in time.

    Attributes:
        final_means: Low-passed error per axis when the timeout hit (nT).
        saturated: True if any actuator clipped during the attempt.
    """

    def __init__(self, final_means: Sequence[float], saturated: bool, timeout_s: float):
        self._final_means = tuple(float(v) for v in final_means)
        self._saturated = saturated
        means = ", ".join(f"{v:.2f}" for v in self._final_means)
        super().__init__(
            f"DC pre-null did not settle within {timeout_s:g} s (final means [{means}] nT"
            + (", actuator saturated)" if saturated else ")")
        )

    @property
    def final_means(self) -> tuple[float, ...]:
        """Low-passed error per axis at timeout."""
        return self._final_means

    @property
    def saturated(self) -> bool:
        """Whether the actuator clipped."""
        return self._saturated


class MissingStageError(AncError):
    """Raised when a report or run needs a stage that was not recorded."""

    def __init__(self, stage: str, hint: str | None = None):
        self._stage = stage
        super().__init__(f"stage '{stage}' is missing" + (f": {hint}" if hint else ""))

    @property
    def stage(self) -> str:
        """Name of the missing stage."""
        return self._stage
