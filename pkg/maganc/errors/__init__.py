from .anc_error import (  # noqa: F401
    AncError,
    ConfigError,
    DegenerateSignalError,
    DivergenceError,
    InvalidInputError,
    MissingStageError,
    ModelFormatError,
    SettleTimeoutError,
    UnnulledDcError,
)
