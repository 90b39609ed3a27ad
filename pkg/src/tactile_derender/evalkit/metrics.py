"""Image-space reconstruction metrics."""

from dataclasses import dataclass

import numpy as np
from scipy.signal import convolve2d

from ..errors import ToolkitError
from ..geometry.depth import DepthImage

PSNR_CAP_DB = 100.0
SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03


@dataclass(frozen=True)
class ImageMetrics:
    l1_mm: float
    psnr_db: float
    ssim: float


def _as_image(x) -> np.ndarray:
    if isinstance(x, DepthImage):
        return x.data
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 2:
        raise ToolkitError("dimension-mismatch",
                           f"metrics need 2D images, got shape {arr.shape}")
    return arr


def _gaussian_window(size: int, sigma: float) -> np.ndarray:
    r = np.arange(size, dtype=np.float64) - (size - 1) / 2.0
    g = np.exp(-(r * r) / (2.0 * sigma * sigma))
    w = np.outer(g, g)
    return w / w.sum()


def ssim_map(a: np.ndarray, b: np.ndarray, range_max: float) -> np.ndarray:
    """Structural similarity over all fully-valid windows (no padding)."""
    w = _gaussian_window(SSIM_WINDOW, SSIM_SIGMA)
    mu_a = convolve2d(a, w, mode="valid")
    mu_b = convolve2d(b, w, mode="valid")
    s_aa = convolve2d(a * a, w, mode="valid") - mu_a * mu_a
    s_bb = convolve2d(b * b, w, mode="valid") - mu_b * mu_b
    s_ab = convolve2d(a * b, w, mode="valid") - mu_a * mu_b
    c1 = (SSIM_K1 * range_max) ** 2
    c2 = (SSIM_K2 * range_max) ** 2
    num = (2.0 * mu_a * mu_b + c1) * (2.0 * s_ab + c2)
    den = (mu_a * mu_a + mu_b * mu_b + c1) * (s_aa + s_bb + c2)
    return num / den


def image_metrics(generated, target, range_max: float) -> ImageMetrics:
    """L1 (reported in mm), PSNR, and mean SSIM between depth images.

    All pixels count, valid or not; range_max sets the dynamic range for
    PSNR and SSIM.  PSNR saturates at 100 dB for (near-)exact matches.
    """
    g = _as_image(generated)
    t = _as_image(target)
    if g.shape != t.shape:
        raise ToolkitError("dimension-mismatch",
                           f"image shapes differ: {g.shape} vs {t.shape}")
    if not (np.isfinite(range_max) and range_max > 0.0):
        raise ToolkitError("bad-config", "range_max must be positive")
    if min(g.shape) < SSIM_WINDOW:
        raise ToolkitError("dimension-mismatch",
                           f"images must be at least {SSIM_WINDOW} px per side")
    l1_mm = float(np.mean(np.abs(g - t))) * 1000.0
    mse = float(np.mean((g - t) ** 2))
    if mse < range_max * range_max * 1e-10:
        psnr = PSNR_CAP_DB
    else:
        psnr = min(float(10.0 * np.log10(range_max * range_max / mse)),
                   PSNR_CAP_DB)
    ssim = float(np.mean(ssim_map(g, t, range_max)))
    return ImageMetrics(l1_mm=l1_mm, psnr_db=psnr, ssim=ssim)
