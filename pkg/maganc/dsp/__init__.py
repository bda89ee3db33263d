"""Signal primitives, generators and spectral estimators."""

from .io import read_sample_buffer, write_sample_buffer, write_sample_buffer_csv
from .signals import StreamingHighpass, fir_apply, generate_white_noise, make_rng, stream_seed
from .spectral import (
    CANCELLATION_CEILING_DB,
    DEFAULT_GAMMA_HZ_PER_NT,
    amplitude_spectral_density,
    coherence,
    cross_psd,
    field_rms_to_larmor_hz,
    max_cancellation_db,
    rms_in_band,
    suppression_db,
    tone_psd,
    tone_suppression_db,
    welch_psd,
)

__all__ = [
    "CANCELLATION_CEILING_DB",
    "DEFAULT_GAMMA_HZ_PER_NT",
    "StreamingHighpass",
    "amplitude_spectral_density",
    "coherence",
    "cross_psd",
    "field_rms_to_larmor_hz",
    "fir_apply",
    "generate_white_noise",
    "make_rng",
    "max_cancellation_db",
    "read_sample_buffer",
    "rms_in_band",
    "stream_seed",
    "suppression_db",
    "tone_psd",
    "tone_suppression_db",
    "welch_psd",
    "write_sample_buffer",
    "write_sample_buffer_csv",
]
