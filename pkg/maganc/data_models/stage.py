from enum import Enum


class Axis(str, Enum):
    """Magnetic field vector axes, in the order they are processed."""

    X = "x"
    Y = "y"
    Z = "z"

    @property
    def index(self) -> int:
        """Position of the axis in 3-vectors."""
        return "xyz".index(self.value)


class Stage(str, Enum):
    """Recorded stages of an experiment run."""

    RAW = "raw"
    PID = "pid"
    ANC = "anc"


class AmbientMode(str, Enum):
    """Which part of the ambient field the testbench generates."""

    FULL = "full"
    DC = "dc"


class NoiseShape(str, Enum):
    """Spectral shape of the broadband ambient noise."""

    WHITE = "white"
    PINK = "pink"
    BROWN = "brown"


class SpectrumKind(str, Enum):
    """What a SpectrumEstimate holds."""

    PSD = "psd"
    CSD = "csd"
    COHERENCE = "coherence"
    CANCELLATION = "cancellation"
