"""Pinhole camera model.

Depth values are z-depth along the optical axis, not Euclidean ray length.
Pixel (u, v) looks along the camera-frame direction ((u-cx)/fx, (v-cy)/fy, 1),
so the ray parameter of an unnormalized ray equals z-depth directly.
"""

from __future__ import annotations

import numpy as np

from .pose import RigidPose


class PinholeCamera:

    __slots__ = ("fx", "fy", "cx", "cy", "width", "height", "near", "far", "_dirs")

    def __init__(self, fx, fy, cx, cy, width, height, near, far):
        if fx <= 0 or fy <= 0:
            raise ValueError("focal lengths must be positive")
        if not (0 < near < far):
            raise ValueError("clip range must satisfy 0 < near < far")
        if width < 1 or height < 1:
            raise ValueError("resolution must be at least 1x1")
        self.fx = float(fx)
        self.fy = float(fy)
        self.cx = float(cx)
        self.cy = float(cy)
        self.width = int(width)
        self.height = int(height)
        self.near = float(near)
        self.far = float(far)
        self._dirs = None

    def ray_dirs(self) -> np.ndarray:
        """Camera-frame ray directions per pixel, z = 1, shape (H*W, 3), row-major."""
        if self._dirs is None:
            u = (np.arange(self.width) - self.cx) / self.fx
            v = (np.arange(self.height) - self.cy) / self.fy
            xs, ys = np.meshgrid(u, v)
            d = np.stack([xs.ravel(), ys.ravel(), np.ones(xs.size)], axis=1)
            d.setflags(write=False)
            self._dirs = d
        return self._dirs

    def project_point(self, p_cam) -> tuple:
        """Camera-frame point -> (u, v, z). The point must be in front of the camera."""
        x, y, z = np.asarray(p_cam, dtype=np.float64)
        if z <= 0:
            raise ValueError("point is behind the camera")
        return (self.fx * x / z + self.cx, self.fy * y / z + self.cy, z)

    def back_project(self, u, v, depth) -> np.ndarray:
        """Pixel coordinates + z-depth -> camera-frame point."""
        return np.array([(u - self.cx) / self.fx * depth,
                         (v - self.cy) / self.fy * depth,
                         depth])

    def __repr__(self):
        return (f"PinholeCamera({self.width}x{self.height}, fx={self.fx:g}, fy={self.fy:g}, "
                f"near={self.near:g}, far={self.far:g})")


def unproject_project_roundtrip(camera: PinholeCamera, point) -> np.ndarray:
    """Project a camera-frame point to a pixel and back; the algebraic inverse.

    Errors if the point is behind the camera or projects outside the image.
    """
    u, v, z = camera.project_point(point)
    if not (-0.5 <= u <= camera.width - 0.5 and -0.5 <= v <= camera.height - 0.5):
        raise ValueError(f"point projects outside the image at ({u:.2f}, {v:.2f})")
    return camera.back_project(u, v, z)
