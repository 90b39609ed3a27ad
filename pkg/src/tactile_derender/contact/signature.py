"""Synthesis of tactile signatures from in-contact depth.

A signature is what the sensor camera reports: the unloaded membrane depth
everywhere except where an object indents it.  There the membrane wraps the
object, so contact pixels take the object's depth and a ring around the
contact set blends smoothly back into the membrane ("cloaking" the sharp
silhouette edge a rigid render would leave).
"""

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from ..errors import ToolkitError
from ..geometry.depth import DepthImage


@dataclass(frozen=True)
class SimNoiseConfig:
    """Additive Gaussian pixel noise for simulated captures."""

    mean: float = 0.0
    std: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if not (np.isfinite(self.mean) and np.isfinite(self.std)):
            raise ToolkitError("bad-noise", "noise parameters must be finite")
        if self.std < 0.0:
            raise ToolkitError("bad-noise", f"noise std must be >= 0, got {self.std}")


def synth_tactile_signature(object_depth: DepthImage, elastomer_depth: DepthImage,
                            cloak_px: int = 21,
                            noise: SimNoiseConfig | None = None) -> DepthImage:
    """Compose a simulated signature from membrane and in-contact depth.

    object_depth holds depth only at contact pixels (invalid elsewhere).
    Pixels within cloak_px of the contact set interpolate between the depth
    of the nearest contact pixel and the membrane, weighted by normalized
    distance, so the indentation shoulder falls off linearly.  Noise, when
    given, is Gaussian per pixel from the seeded generator, applied after
    composition; depths are floored at zero.
    """
    if (object_depth.height, object_depth.width) != (elastomer_depth.height,
                                                     elastomer_depth.width):
        raise ToolkitError(
            "dimension-mismatch",
            f"object depth is {object_depth.height}x{object_depth.width}, "
            f"membrane depth is {elastomer_depth.height}x{elastomer_depth.width}",
        )
    if cloak_px < 0:
        raise ToolkitError("bad-cloak", f"cloak_px must be >= 0, got {cloak_px}")

    out = elastomer_depth.data.copy()
    contact = object_depth.data > 0.0
    if contact.any():
        if cloak_px > 0:
            dist, (iy, ix) = ndimage.distance_transform_edt(
                ~contact, return_indices=True)
            ring = (~contact) & (dist <= cloak_px)
            w = dist[ring] / float(cloak_px)
            shoulder = object_depth.data[iy[ring], ix[ring]]
            out[ring] = (1.0 - w) * shoulder + w * out[ring]
        out[contact] = object_depth.data[contact]

    if noise is not None:
        rng = np.random.default_rng(noise.seed)
        out = out + rng.normal(noise.mean, noise.std, out.shape)
        out = np.maximum(out, 0.0)
    return DepthImage(out)
