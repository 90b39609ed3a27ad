"""Alignment costs between point clouds and object models."""

import numpy as np
from scipy.spatial import cKDTree

from .. import _kernels
from ..errors import ToolkitError
from ..geometry.cloud import PointCloud
from ..geometry.mesh import TriMesh
from ..geometry.pose import rot_z
from .planar import PlanarPose


def _as_points(cloud) -> np.ndarray:
    pts = cloud.points if isinstance(cloud, PointCloud) else np.asarray(
        cloud, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 3:
        raise ToolkitError("bad-cloud", f"expected (N, 3) points, got {pts.shape}")
    if pts.shape[0] == 0:
        raise ToolkitError("empty-cloud", "no points to register")
    return pts


def registration_cost(cloud, pose: PlanarPose, mesh: TriMesh,
                      support_z: float) -> float:
    """Mean squared distance from the cloud to the posed model surface.

    The model lives at translate(x, y, support_z) * rot_z(theta); points are
    pulled into its frame so the mesh acceleration structure is built once.
    """
    pts = _as_points(cloud)
    shifted = pts - np.array([pose.x, pose.y, support_z])
    local = shifted @ rot_z(pose.theta)  # R^T applied from the right
    d = _kernels.closest_distance(mesh.vertices, mesh.triangles,
                                  np.ascontiguousarray(local), mesh.bvh)
    return float(np.mean(d * d))


def chamfer_sq(source, target) -> float:
    """Mean squared nearest-neighbor distance from source into target."""
    a = _as_points(source)
    b = _as_points(target)
    idx = cKDTree(b).query(a)[1]
    diff = a - b[idx]
    return float(np.mean(np.einsum("ij,ij->i", diff, diff)))
