"""Point clouds, depth back-projection, and ASCII XYZ input/output."""

from __future__ import annotations

import numpy as np

from ..errors import ToolkitError
from .camera import PinholeCamera
from .depth import DepthImage
from .pose import RigidPose


class PointCloud:

    __slots__ = ("points", "frame")

    def __init__(self, points, frame: str = "world"):
        p = np.array(points, dtype=np.float64).reshape(-1, 3)
        if not np.isfinite(p).all():
            raise ValueError("point coordinates must be finite")
        if frame not in ("world", "camera"):
            raise ValueError("frame must be 'world' or 'camera'")
        p.setflags(write=False)
        self.points = p
        self.frame = frame

    def __len__(self):
        return self.points.shape[0]

    def save_xyz(self, path) -> None:
        lines = [f"{x!r} {y!r} {z!r}" for x, y, z in map(tuple, self.points)]
        with open(path, "w", encoding="utf-8") as f:
            f.write("\n".join(lines) + ("\n" if lines else ""))

    @classmethod
    def load_xyz(cls, path, frame: str = "world") -> "PointCloud":
        pts = []
        with open(path, "r", encoding="utf-8") as f:
            for ln, raw in enumerate(f, start=1):
                parts = raw.split()
                if not parts:
                    continue
                if len(parts) < 3:
                    raise ToolkitError("bad-xyz", f"line {ln}: expected 3 coordinates")
                pts.append([float(parts[0]), float(parts[1]), float(parts[2])])
        return cls(np.array(pts, dtype=np.float64).reshape(-1, 3), frame)

    def __repr__(self):
        return f"PointCloud({len(self)} points, {self.frame})"


class PixelIndexMap:
    """Pixel <-> point correspondence for a back-projected depth image.

    indices holds the flat row-major pixel index of each point, in the scan
    order project_depth emits them.
    """

    __slots__ = ("indices", "height", "width")

    def __init__(self, indices, height: int, width: int):
        self.indices = np.asarray(indices, dtype=np.intp)
        self.height = int(height)
        self.width = int(width)

    def __len__(self):
        return self.indices.shape[0]


def pixel_index_map(depth: DepthImage) -> PixelIndexMap:
    """Correspondence map matching project_depth of the same image."""
    return PixelIndexMap(np.flatnonzero(depth.data.ravel() > 0.0),
                         depth.height, depth.width)


def project_depth(depth: DepthImage, camera: PinholeCamera,
                  camera_pose: RigidPose = None) -> PointCloud:
    """Back-project valid pixels to world-frame 3D points.

    Pixel (u, v) with z-depth d maps to ((u-cx)/fx, (v-cy)/fy, 1)*d in the
    camera frame, then through camera_pose. Invalid pixels are skipped;
    points come out in row-major pixel scan order.
    """
    if depth.width != camera.width or depth.height != camera.height:
        raise ToolkitError(
            "dimension-mismatch",
            f"depth is {depth.width}x{depth.height} but camera expects "
            f"{camera.width}x{camera.height}")
    if camera_pose is None:
        camera_pose = RigidPose.identity()
    flat = depth.data.ravel()
    idx = np.flatnonzero(flat > 0.0)
    if idx.size == 0:
        return PointCloud(np.empty((0, 3)), "world")
    p_cam = camera.ray_dirs()[idx] * flat[idx, None]
    return PointCloud(camera_pose.apply(p_cam), "world")
