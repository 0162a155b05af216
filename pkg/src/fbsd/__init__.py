"""Causal full-band speech denoising engine and surrounding pipeline."""

from .config import FFT_SIZE, HOP, SAMPLE_RATE, ModelConfig, tiny_config
from .dsp import (
    AudioBuffer,
    OlaState,
    SpectralFrame,
    StreamingStft,
    WindowSpec,
    analyze_frame,
    apply_mask,
    frame_stream,
    synthesize_frame,
)
from .model import ActivationTrace, StreamingDenoiser, StreamState
from .weights_io import ModelWeights, load, random_init, save

__version__ = "0.1.0"

__all__ = [
    "ActivationTrace",
    "AudioBuffer",
    "FFT_SIZE",
    "HOP",
    "ModelConfig",
    "ModelWeights",
    "OlaState",
    "SAMPLE_RATE",
    "SpectralFrame",
    "StreamState",
    "StreamingDenoiser",
    "StreamingStft",
    "WindowSpec",
    "analyze_frame",
    "apply_mask",
    "frame_stream",
    "load",
    "random_init",
    "save",
    "synthesize_frame",
    "tiny_config",
    "__version__",
]
