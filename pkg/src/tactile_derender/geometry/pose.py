"""Rigid SE(3) transforms."""

from __future__ import annotations

import math

import numpy as np


def rot_x(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def rot_y(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def rot_z(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


class RigidPose:
    """Proper rigid transform: maps local points p to rotation @ p + translation."""

    __slots__ = ("rotation", "translation")

    def __init__(self, rotation=None, translation=None):
        R = np.eye(3) if rotation is None else np.array(rotation, dtype=np.float64)
        t = np.zeros(3) if translation is None else np.array(translation, dtype=np.float64)
        if R.shape != (3, 3):
            raise ValueError("rotation must be a 3x3 matrix")
        if t.shape != (3,):
            raise ValueError("translation must be a 3-vector")
        if not (np.isfinite(R).all() and np.isfinite(t).all()):
            raise ValueError("pose entries must be finite")
        ortho = np.abs(R.T @ R - np.eye(3)).max()
        if ortho > 1e-9:
            raise ValueError(f"rotation not orthonormal, |R^T R - I| = {ortho:.3e}")
        if abs(np.linalg.det(R) - 1.0) > 1e-9:
            raise ValueError("rotation must have determinant +1")
        R.setflags(write=False)
        t.setflags(write=False)
        self.rotation = R
        self.translation = t

    @classmethod
    def identity(cls) -> "RigidPose":
        return cls()

    @classmethod
    def from_matrix(cls, H) -> "RigidPose":
        H = np.asarray(H, dtype=np.float64)
        if H.shape != (4, 4):
            raise ValueError("expected a 4x4 homogeneous matrix")
        if np.abs(H[3] - np.array([0.0, 0.0, 0.0, 1.0])).max() > 1e-12:
            raise ValueError("last row must be [0, 0, 0, 1]")
        return cls(H[:3, :3], H[:3, 3])

    @classmethod
    def from_planar(cls, x: float, y: float, theta: float, z: float = 0.0) -> "RigidPose":
        """Lift a planar (x, y, theta) pose to SE(3) at height z."""
        return cls(rot_z(theta), [x, y, z])

    def matrix(self) -> np.ndarray:
        H = np.eye(4)
        H[:3, :3] = self.rotation
        H[:3, 3] = self.translation
        return H

    def apply(self, points):
        """Transform a single 3-vector or an (N, 3) array."""
        p = np.asarray(points, dtype=np.float64)
        if p.shape == (3,):
            return self.rotation @ p + self.translation
        if p.ndim == 2 and p.shape[1] == 3:
            return p @ self.rotation.T + self.translation
        raise ValueError("points must be shaped (3,) or (N, 3)")

    def compose(self, other: "RigidPose") -> "RigidPose":
        """self after other: (self.compose(other)).apply(p) == self.apply(other.apply(p))."""
        return RigidPose(self.rotation @ other.rotation,
                         self.rotation @ other.translation + self.translation)

    def inverse(self) -> "RigidPose":
        Rt = self.rotation.T.copy()
        return RigidPose(Rt, -(Rt @ self.translation))

    def __repr__(self):
        t = self.translation
        return f"RigidPose(t=[{t[0]:.6g}, {t[1]:.6g}, {t[2]:.6g}])"
