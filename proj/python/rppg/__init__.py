"""Heart rate from facial video with self-supervised pre-training.

The heavy lifting lives in the C++ core; this package re-exports it.
"""

from ._core import (
    FormatError,
    Model,
    NumericError,
    ShapeError,
    SpectrumError,
    augment,
    config_hash,
    estimate_hr,
    git_describe,
    label_subset,
    make_model,
    mean_absolute_error,
    pearson_r,
    preset,
    root_mean_square_error,
    synth_video,
    welch_psd,
)

__all__ = [
    "FormatError",
    "Model",
    "NumericError",
    "ShapeError",
    "SpectrumError",
    "augment",
    "config_hash",
    "estimate_hr",
    "git_describe",
    "label_subset",
    "make_model",
    "mean_absolute_error",
    "pearson_r",
    "preset",
    "root_mean_square_error",
    "synth_video",
    "welch_psd",
]
