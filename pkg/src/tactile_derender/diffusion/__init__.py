"""Conditional denoising diffusion over normalized depth images."""

from .checkpoint import load_checkpoint, save_checkpoint
from .model import DepthDenoiser, TorchPredictor, build_model
from .process import (ddpm_sample, ddpm_sample_batch, depth_from_normalized,
                      forward_diffuse, noise_loss, normalize_depth)
from .schedule import VarianceSchedule, cosine_schedule
from .train import TrainConfig, TrainResult, train

__all__ = [
    "DepthDenoiser", "TorchPredictor", "TrainConfig", "TrainResult",
    "VarianceSchedule", "build_model", "cosine_schedule", "ddpm_sample",
    "ddpm_sample_batch", "depth_from_normalized", "forward_diffuse",
    "load_checkpoint", "noise_loss", "normalize_depth", "save_checkpoint",
    "train",
]
