"""Depth rendering by ray casting."""

from __future__ import annotations

import numpy as np

from ..errors import ToolkitError
from .. import _kernels
from .camera import PinholeCamera
from .depth import DepthImage
from .mesh import TriMesh
from .pose import RigidPose


def render_depth(mesh: TriMesh, camera: PinholeCamera,
                 camera_pose: RigidPose = None, use_bvh: bool = True) -> DepthImage:
    """Render the mesh into a z-depth image.

    Each pixel takes the smallest z-depth hit within [near, far] along its
    pinhole ray, 0.0 where nothing is hit. Because rays use unnormalized
    directions with camera-frame z = 1, the ray parameter is the z-depth for
    any rigid camera pose. The BVH path is bit-identical to the exhaustive
    per-triangle path (use_bvh=False).
    """
    if mesh.n_triangles == 0:
        raise ToolkitError("empty-mesh", "cannot render a mesh with no triangles")
    if camera_pose is None:
        camera_pose = RigidPose.identity()
    dirs_cam = camera.ray_dirs()
    dirs = dirs_cam @ camera_pose.rotation.T
    origins = np.broadcast_to(camera_pose.translation, dirs.shape)
    origins = np.ascontiguousarray(origins)
    if use_bvh:
        t, _ = _kernels.raycast(mesh.vertices, mesh.triangles, origins, dirs,
                                camera.near, camera.far, mesh.bvh)
    else:
        t, _ = _kernels.raycast_brute(mesh.vertices, mesh.triangles, origins, dirs,
                                      camera.near, camera.far)
    img = np.where(np.isfinite(t), t, 0.0).reshape(camera.height, camera.width)
    return DepthImage(img)
