"""Tabletop object poses: translation in the plane plus heading."""

from dataclasses import dataclass

import numpy as np

from ..errors import ToolkitError
from ..geometry.pose import RigidPose, rot_z


def wrap_angle(theta: float) -> float:
    """Fold an angle into (-pi, pi]."""
    t = float((theta + np.pi) % (2.0 * np.pi) - np.pi)
    return np.pi if t == -np.pi else t


@dataclass(frozen=True)
class PlanarPose:
    x: float = 0.0
    y: float = 0.0
    theta: float = 0.0

    def __post_init__(self):
        if not all(np.isfinite(v) for v in (self.x, self.y, self.theta)):
            raise ToolkitError("bad-pose", "planar pose must be finite")
        object.__setattr__(self, "theta", wrap_angle(self.theta))

    def lift(self, z: float) -> RigidPose:
        """Full rigid pose at the given support height."""
        return RigidPose(rot_z(self.theta), (self.x, self.y, z))

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.theta])


def planar_from_world(pose: RigidPose, mount: RigidPose):
    """Recover (PlanarPose, support z) from a world pose built over a mount.

    Inverts world = translate(x, y, z) * rot_z(theta) * mount; rejects poses
    whose rotation is not actually a heading over that mount.
    """
    residual = pose.rotation @ mount.rotation.T
    theta = float(np.arctan2(residual[1, 0], residual[0, 0]))
    if not np.allclose(residual, rot_z(theta), atol=1e-6):
        raise ToolkitError("nonplanar-pose",
                           "pose rotation is not a heading over the mount")
    x, y, z = (float(v) for v in pose.translation)
    return PlanarPose(x, y, theta), z
