"""Differentiable reference model, desk-scale trainer and weight export."""

from .config import ModelSpec, TrainConfig, tiny_spec
from .data import MixturePair, make_dataset
from .export import dump_activations, export_bytes, export_weights
from .model import ReferenceDenoiser
from .train import TrainResult, train_desk_scale

__all__ = [
    "MixturePair",
    "ModelSpec",
    "ReferenceDenoiser",
    "TrainConfig",
    "TrainResult",
    "dump_activations",
    "export_bytes",
    "export_weights",
    "make_dataset",
    "tiny_spec",
    "train_desk_scale",
]
