"""Noise-prediction training loop.

Each epoch reseeds its own stream from (seed, epoch), so epoch k draws the
same permutation, step indices, and noise whether the run started cold or
resumed from a checkpoint.
"""

from dataclasses import dataclass, field

import numpy as np
import torch

from ..errors import ToolkitError
from ..seeding import rng_for
from .model import set_deterministic_torch
from .process import forward_diffuse, noise_loss
from .schedule import VarianceSchedule

LOSS_KINDS = ("l1", "l2")


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-4
    epochs: int = 1
    batch_size: int = 32
    loss: str = "l1"
    seed: int = 0

    def __post_init__(self):
        if self.learning_rate <= 0.0:
            raise ToolkitError("bad-config", "learning rate must be positive")
        if self.epochs < 1:
            raise ToolkitError("bad-config", "epochs must be >= 1")
        if self.batch_size < 1:
            raise ToolkitError("bad-config", "batch size must be >= 1")
        object.__setattr__(self, "loss", str(self.loss).lower())
        if self.loss not in LOSS_KINDS:
            raise ToolkitError("bad-config",
                               f"loss must be one of {LOSS_KINDS}, got {self.loss!r}")

    def to_json(self) -> dict:
        return {"learning_rate": self.learning_rate, "epochs": self.epochs,
                "batch_size": self.batch_size, "loss": self.loss,
                "seed": self.seed}

    @classmethod
    def from_json(cls, obj: dict) -> "TrainConfig":
        return cls(**obj)


@dataclass
class TrainResult:
    loss_curve: list = field(default_factory=list)
    epochs_run: int = 0


def make_optimizer(model: torch.nn.Module, config: TrainConfig) -> torch.optim.Adam:
    return torch.optim.Adam(model.parameters(), lr=config.learning_rate,
                            betas=(0.9, 0.999))


def train(model: torch.nn.Module, schedule: VarianceSchedule,
          x0: np.ndarray, cond: np.ndarray, config: TrainConfig,
          optimizer: torch.optim.Adam | None = None, start_epoch: int = 0,
          on_epoch=None) -> TrainResult:
    """Fit the model to predict corruption noise on (x0 | cond) pairs.

    x0 and cond are float32 (N, 1, H, W) in normalized units.  Runs epochs
    start_epoch..config.epochs-1; pass the optimizer back in to resume.
    on_epoch(epoch_index, mean_loss) fires after every epoch.
    """
    x0 = np.ascontiguousarray(x0, dtype=np.float32)
    cond = np.ascontiguousarray(cond, dtype=np.float32)
    if x0.ndim != 4 or cond.shape != x0.shape:
        raise ToolkitError("bad-config",
                           f"need matching (N, 1, H, W) arrays, got "
                           f"{x0.shape} and {cond.shape}")
    n = x0.shape[0]
    if n == 0:
        raise ToolkitError("empty-dataset", "no training samples")
    if start_epoch >= config.epochs:
        raise ToolkitError("bad-config",
                           f"start epoch {start_epoch} is past the "
                           f"configured {config.epochs} epochs")

    set_deterministic_torch()
    if optimizer is None:
        optimizer = make_optimizer(model, config)
    cond_t = torch.from_numpy(cond)
    result = TrainResult()
    model.train()
    for epoch in range(start_epoch, config.epochs):
        rng = rng_for(config.seed, epoch)
        perm = rng.permutation(n)
        t_all = rng.integers(1, schedule.steps + 1, size=n)
        total = 0.0
        for k in range(0, n, config.batch_size):
            idx = perm[k:k + config.batch_size]
            eps = rng.standard_normal((len(idx), 1, x0.shape[2], x0.shape[3]))
            eps = eps.astype(np.float32)
            xt = forward_diffuse(x0[idx], eps, t_all[idx], schedule)
            pred = model(torch.from_numpy(xt), cond_t[idx],
                         torch.from_numpy(t_all[idx]))
            loss = noise_loss(pred, torch.from_numpy(eps), config.loss)
            value = float(loss.item())
            if not np.isfinite(value):
                raise ToolkitError(
                    "training-diverged",
                    f"non-finite loss {value} at epoch {epoch}, batch {k}")
            optimizer.zero_grad(set_to_none=True)
            loss.backward()
            optimizer.step()
            total += value * len(idx)
        mean = total / n
        result.loss_curve.append(mean)
        result.epochs_run += 1
        if on_epoch is not None:
            on_epoch(epoch, mean)
    return result
