"""Forward corruption, training loss, and ancestral sampling.

Everything here is numpy-facing and framework-agnostic: predictors are
objects with predict(x_t, condition, t) -> noise estimate, arrays are
(B, 1, H, W).  All randomness comes from caller-supplied generators, one per
batch member, so batch composition never changes what any member sees.
"""

import numpy as np

from ..errors import ToolkitError
from .schedule import VarianceSchedule

DIVERGENCE_LIMIT = 1e3
INVALID_LEVEL = -0.98
# Conditioning unit for imprints (meters).  An imprint spans millimeters
# while depth spans the full camera range, so feeding it in depth units
# starves the predictor of signal; dividing by the working indentation
# depth instead puts contact evidence at order one.
IMPRINT_SCALE = 0.005


def normalize_depth(depth, d_max: float):
    """Map metric depth [0, d_max] to [-1, 1]; invalid (0) lands at -1."""
    if d_max <= 0.0:
        raise ToolkitError("bad-config", "d_max must be positive")
    return 2.0 * (depth / d_max) - 1.0


def depth_from_normalized(x, d_max: float, invalid_below: float = INVALID_LEVEL):
    """Invert normalize_depth, snapping near--1 pixels back to invalid 0."""
    if d_max <= 0.0:
        raise ToolkitError("bad-config", "d_max must be positive")
    d = (np.asarray(x, dtype=np.float64) + 1.0) * (0.5 * d_max)
    return np.where(np.asarray(x) < invalid_below, 0.0, np.maximum(d, 0.0))


def _coef(values, like):
    """Broadcastable per-member coefficients matching the array library."""
    arr = np.asarray(values, dtype=np.float64).reshape(-1, 1, 1, 1)
    try:
        import torch
        if torch.is_tensor(like):
            return torch.as_tensor(arr, dtype=like.dtype, device=like.device)
    except ImportError:
        pass
    return arr.astype(like.dtype) if hasattr(like, "dtype") else arr


def forward_diffuse(x0, eps, t, schedule: VarianceSchedule):
    """Corrupt clean images to step t: sqrt(ab) x0 + sqrt(1-ab) eps.

    t is a 1-based int or per-member int array; x0/eps may be numpy arrays
    or torch tensors of shape (B, 1, H, W) (a bare (1, H, W) or (H, W)
    works for scalar t since the coefficients are scalars then).
    """
    ab = schedule.alpha_bar_at(t)
    if np.ndim(ab) == 0:
        return float(np.sqrt(ab)) * x0 + float(np.sqrt(1.0 - ab)) * eps
    return _coef(np.sqrt(ab), x0) * x0 + _coef(np.sqrt(1.0 - ab), eps) * eps


def noise_loss(predicted, actual, kind: str = "l1"):
    """Mean element-wise noise prediction error, L1 or squared L2."""
    diff = predicted - actual
    k = kind.lower()
    if k == "l1":
        return abs(diff).mean()
    if k == "l2":
        return (diff * diff).mean()
    raise ToolkitError("bad-config", f"unknown loss kind {kind!r}")


def _check_finite(x, t):
    m = float(np.max(np.abs(x)))
    if not np.isfinite(m) or m > DIVERGENCE_LIMIT:
        raise ToolkitError("sampling-diverged",
                           f"|x| reached {m:.3g} at step {t}")


def ddpm_sample_batch(predictor, conditions: np.ndarray,
                      schedule: VarianceSchedule, rngs) -> np.ndarray:
    """Ancestral sampling for a batch of conditions.

    conditions is (B, 1, H, W); rngs supplies one numpy Generator per
    member.  Member i consumes exactly one (1, H, W) standard-normal draw
    from rngs[i] for its start and one per step t = T..2, so results are
    identical however members are grouped into batches.  Each step clamps
    the implied clean image to [-1, 1] (the data range), which keeps the
    chain bounded under an imperfect predictor; the output is clipped the
    same way.
    """
    cond = np.asarray(conditions, dtype=np.float64)
    if cond.ndim != 4:
        raise ToolkitError("bad-config",
                           f"conditions must be (B, 1, H, W), got {cond.shape}")
    n = cond.shape[0]
    if len(rngs) != n:
        raise ToolkitError("bad-config",
                           f"need {n} generators, got {len(rngs)}")
    shape = cond.shape[1:]
    x = np.stack([rng.standard_normal(shape) for rng in rngs])
    for t in range(schedule.steps, 0, -1):
        beta, alpha, abar = schedule.at(t)
        eps_hat = np.asarray(predictor.predict(x, cond, t), dtype=np.float64)
        if eps_hat.shape != x.shape:
            raise ToolkitError("bad-predictor",
                               f"predictor returned {eps_hat.shape}, "
                               f"expected {x.shape}")
        # Clamp the implied clean image to the data range before stepping.
        # Near t = T the clipped betas divide by sqrt(alpha) ~ 0.03, so an
        # unclamped prediction error compounds into overflow within a few
        # steps; in-range predictions pass through (up to rounding).
        x0_hat = (x - np.sqrt(1.0 - abar) * eps_hat) / np.sqrt(abar)
        np.clip(x0_hat, -1.0, 1.0, out=x0_hat)
        eps_eff = (x - np.sqrt(abar) * x0_hat) / np.sqrt(1.0 - abar)
        x = (x - (beta / np.sqrt(1.0 - abar)) * eps_eff) / np.sqrt(alpha)
        if t > 1:
            z = np.stack([rng.standard_normal(shape) for rng in rngs])
            x = x + np.sqrt(beta) * z
        _check_finite(x, t)
    return np.clip(x, -1.0, 1.0)


def ddpm_sample(predictor, condition: np.ndarray, schedule: VarianceSchedule,
                rng: np.random.Generator) -> np.ndarray:
    """Single-condition ancestral sampling; returns (1, H, W) in [-1, 1]."""
    cond = np.asarray(condition, dtype=np.float64)
    if cond.ndim == 2:
        cond = cond[None]
    if cond.ndim != 3:
        raise ToolkitError("bad-config",
                           f"condition must be (H, W) or (1, H, W), got {cond.shape}")
    return ddpm_sample_batch(predictor, cond[None], schedule, [rng])[0]
