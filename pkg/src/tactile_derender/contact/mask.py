"""Contact masks: which pixels of a depth image lie inside the membrane."""

import numpy as np

from ..errors import ToolkitError
from ..geometry.cloud import PixelIndexMap, PointCloud
from ..geometry.depth import DepthImage
from ..geometry.mesh import TriMesh
from ..geometry.sdf import signed_distance


class ContactMask:
    """Boolean per-pixel contact grid."""

    __slots__ = ("bits",)

    def __init__(self, bits):
        arr = np.asarray(bits)
        if arr.ndim != 2:
            raise ToolkitError("bad-mask", f"mask must be 2D, got shape {arr.shape}")
        arr = arr.astype(bool)
        arr.setflags(write=False)
        self.bits = arr

    @property
    def height(self) -> int:
        return self.bits.shape[0]

    @property
    def width(self) -> int:
        return self.bits.shape[1]

    def count(self) -> int:
        return int(self.bits.sum())

    def any(self) -> bool:
        return bool(self.bits.any())

    @classmethod
    def zeros(cls, height: int, width: int) -> "ContactMask":
        return cls(np.zeros((height, width), dtype=bool))


def compute_contact_mask(points: PointCloud, elastomer: TriMesh,
                         pixel_map: PixelIndexMap) -> ContactMask:
    """Mark pixels whose surface point lies inside the elastomer body.

    points and pixel_map must come from the same depth image (project_depth
    and pixel_index_map on it), so entry i of the map is the pixel of point i.
    """
    if len(pixel_map) != points.points.shape[0]:
        raise ToolkitError(
            "missing-correspondence",
            f"pixel map covers {len(pixel_map)} pixels but the cloud has "
            f"{points.points.shape[0]} points",
        )
    bits = np.zeros(pixel_map.height * pixel_map.width, dtype=bool)
    if len(pixel_map):
        d = signed_distance(elastomer, points.points)
        bits[pixel_map.indices] = d < 0.0
    return ContactMask(bits.reshape(pixel_map.height, pixel_map.width))


def in_contact_depth(depth: DepthImage, mask: ContactMask) -> DepthImage:
    """Depth restricted to contact pixels; everything else becomes invalid."""
    if (depth.height, depth.width) != (mask.height, mask.width):
        raise ToolkitError(
            "dimension-mismatch",
            f"depth is {depth.height}x{depth.width}, mask is "
            f"{mask.height}x{mask.width}",
        )
    return DepthImage(np.where(mask.bits, depth.data, 0.0))
