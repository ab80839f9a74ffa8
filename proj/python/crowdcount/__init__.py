"""Crowd counting by fusing five per-cell count sources."""

from ._crowdcount import (
    CrowdcountError,
    Model,
    crowd_confidence,
    decode_image,
    default_config_json,
    encode_pgm,
    evaluate,
    evaluate_model,
    fourier_peaks,
    glcm_features,
    gradient_magnitude,
    load_model,
    read_image,
    synth,
    train,
    wavelet_energies,
)

__all__ = [
    "CrowdcountError",
    "Model",
    "crowd_confidence",
    "decode_image",
    "default_config_json",
    "encode_pgm",
    "evaluate",
    "evaluate_model",
    "fourier_peaks",
    "glcm_features",
    "gradient_magnitude",
    "load_model",
    "read_image",
    "synth",
    "train",
    "wavelet_energies",
]
