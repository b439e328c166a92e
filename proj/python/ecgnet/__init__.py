"""Python view of the ecgnet C++ core."""

from ._ecgnet import (
    DEFAULT_THRESHOLD,
    NUM_CLASSES,
    ConfigError,
    EcgnetError,
    NumericError,
    ParseError,
    ShapeError,
    ValidationError,
    brady_rule,
    challenge_score,
    class_abbreviations,
    class_codes,
    detect_rpeaks,
    final_brady,
    postprocess,
    read_record,
    sign_loss,
    sign_loss_grad,
    synth,
    wavelet_denoise,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
