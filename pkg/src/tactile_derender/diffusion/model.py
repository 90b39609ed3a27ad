"""Noise prediction network and adapters.

The denoiser is a small conditional UNet: the noisy depth and the imprint
conditioning enter as two channels, the step index enters through a
sinusoidal embedding added inside every residual block.
"""

import math

import numpy as np
import torch
from torch import nn

from ..errors import ToolkitError


def set_deterministic_torch():
    """Single-thread, deterministic-kernels torch. Call before any training
    or inference that must reproduce bit-for-bit."""
    torch.set_num_threads(1)
    torch.use_deterministic_algorithms(True)


def time_embedding(t: torch.Tensor, dim: int) -> torch.Tensor:
    """Sinusoidal features of the step index, shape (B, dim)."""
    half = dim // 2
    freqs = torch.exp(
        torch.arange(half, dtype=torch.float32, device=t.device)
        * (-math.log(10000.0) / max(half - 1, 1)))
    ang = t.float()[:, None] * freqs[None, :]
    return torch.cat([torch.sin(ang), torch.cos(ang)], dim=1)


class ResBlock(nn.Module):
    def __init__(self, c_in: int, c_out: int, emb_dim: int):
        super().__init__()
        self.norm1 = nn.GroupNorm(8, c_in)
        self.conv1 = nn.Conv2d(c_in, c_out, 3, padding=1)
        self.emb = nn.Linear(emb_dim, c_out)
        self.norm2 = nn.GroupNorm(8, c_out)
        self.conv2 = nn.Conv2d(c_out, c_out, 3, padding=1)
        self.skip = (nn.Conv2d(c_in, c_out, 1) if c_in != c_out
                     else nn.Identity())
        self.act = nn.SiLU()

    def forward(self, x, emb):
        h = self.conv1(self.act(self.norm1(x)))
        h = h + self.emb(emb)[:, :, None, None]
        h = self.conv2(self.act(self.norm2(h)))
        return h + self.skip(x)


class DepthDenoiser(nn.Module):
    """Conditional UNet over (noisy depth, imprint) -> noise estimate.

    widths sets the channel count per resolution level; each extra level
    halves the grid with a strided conv and restores it with nearest-neighbor
    upsampling plus a skip concatenation.
    """

    def __init__(self, widths=(32, 32, 64), emb_dim: int = 64,
                 in_channels: int = 2):
        super().__init__()
        if len(widths) < 2:
            raise ToolkitError("bad-config", "need at least two UNet levels")
        self.widths = tuple(int(w) for w in widths)
        self.emb_dim = int(emb_dim)
        self.in_channels = int(in_channels)
        w = self.widths
        self.emb_mlp = nn.Sequential(nn.Linear(emb_dim, emb_dim * 2), nn.SiLU(),
                                     nn.Linear(emb_dim * 2, emb_dim))
        self.stem = nn.Conv2d(in_channels, w[0], 3, padding=1)
        self.down_blocks = nn.ModuleList()
        self.downs = nn.ModuleList()
        for i in range(len(w) - 1):
            self.down_blocks.append(ResBlock(w[i], w[i], emb_dim))
            self.downs.append(nn.Conv2d(w[i], w[i + 1], 3, stride=2, padding=1))
        self.mid1 = ResBlock(w[-1], w[-1], emb_dim)
        self.mid2 = ResBlock(w[-1], w[-1], emb_dim)
        self.up_convs = nn.ModuleList()
        self.up_blocks = nn.ModuleList()
        for i in range(len(w) - 1, 0, -1):
            self.up_convs.append(nn.Conv2d(w[i], w[i - 1], 3, padding=1))
            self.up_blocks.append(ResBlock(2 * w[i - 1], w[i - 1], emb_dim))
        self.out_norm = nn.GroupNorm(8, w[0])
        self.out_conv = nn.Conv2d(w[0], 1, 3, padding=1)
        self.act = nn.SiLU()
        nn.init.zeros_(self.out_conv.weight)
        nn.init.zeros_(self.out_conv.bias)

    def forward(self, x_t: torch.Tensor, condition: torch.Tensor,
                t: torch.Tensor) -> torch.Tensor:
        emb = self.emb_mlp(time_embedding(t, self.emb_dim))
        h = self.stem(torch.cat([x_t, condition], dim=1))
        skips = []
        for block, down in zip(self.down_blocks, self.downs):
            h = block(h, emb)
            skips.append(h)
            h = down(h)
        h = self.mid2(self.mid1(h, emb), emb)
        for conv, block in zip(self.up_convs, self.up_blocks):
            h = conv(nn.functional.interpolate(h, scale_factor=2,
                                               mode="nearest"))
            h = block(torch.cat([h, skips.pop()], dim=1), emb)
        return self.out_conv(self.act(self.out_norm(h)))

    def arch_config(self) -> dict:
        return {"name": "depth-denoiser", "widths": list(self.widths),
                "emb_dim": self.emb_dim, "in_channels": self.in_channels}


def build_model(arch: dict) -> nn.Module:
    """Rebuild a network from its stored architecture description."""
    name = arch.get("name")
    if name != "depth-denoiser":
        raise ToolkitError("bad-checkpoint", f"unknown architecture {name!r}")
    return DepthDenoiser(widths=tuple(arch["widths"]),
                         emb_dim=arch["emb_dim"],
                         in_channels=arch["in_channels"])


class TorchPredictor:
    """numpy predict() facade over a torch module for the samplers."""

    def __init__(self, module: nn.Module):
        self.module = module

    def predict(self, x_t: np.ndarray, condition: np.ndarray,
                t: int) -> np.ndarray:
        self.module.eval()
        with torch.no_grad():
            xt = torch.from_numpy(
                np.ascontiguousarray(x_t, dtype=np.float32))
            cond = torch.from_numpy(
                np.ascontiguousarray(condition, dtype=np.float32))
            tt = torch.full((xt.shape[0],), int(t), dtype=torch.int64)
            out = self.module(xt, cond, tt)
        return out.numpy().astype(np.float64)
