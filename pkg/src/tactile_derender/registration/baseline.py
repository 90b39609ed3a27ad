"""Threshold baseline: contact points straight from the raw imprint."""

from dataclasses import dataclass

import numpy as np

from ..errors import ToolkitError
from ..geometry.camera import PinholeCamera
from ..geometry.cloud import PointCloud, project_depth
from ..geometry.depth import DepthImage
from ..geometry.pose import RigidPose


@dataclass(frozen=True)
class BaselineConfig:
    threshold: float = 0.003

    def __post_init__(self):
        if not (np.isfinite(self.threshold) and self.threshold > 0.0):
            raise ToolkitError("bad-config", "threshold must be positive")


def baseline_extract(signature: DepthImage, reference: DepthImage,
                     config: BaselineConfig, camera: PinholeCamera,
                     camera_pose: RigidPose | None = None) -> PointCloud:
    """Back-project pixels whose imprint exceeds the threshold.

    Flagged pixels keep their measured (signature) depth; pixels without a
    valid measurement are dropped.
    """
    if (signature.height, signature.width) != (reference.height,
                                               reference.width):
        raise ToolkitError("dimension-mismatch",
                           "signature and reference sizes differ")
    flagged = (reference.data - signature.data) > config.threshold
    depth = DepthImage(np.where(flagged, signature.data, 0.0))
    return project_depth(depth, camera, camera_pose)
