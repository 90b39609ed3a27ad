from .pose import RigidPose, rot_x, rot_y, rot_z
from .camera import PinholeCamera, unproject_project_roundtrip
from .depth import DepthImage
from .mesh import TriMesh
from .cloud import PixelIndexMap, PointCloud, project_depth, pixel_index_map
from .render import render_depth
from .sdf import signed_distance
from .primitives import make_primitive, KINDS

__all__ = [
    "RigidPose", "rot_x", "rot_y", "rot_z",
    "PinholeCamera", "unproject_project_roundtrip",
    "DepthImage", "TriMesh", "PointCloud", "PixelIndexMap",
    "project_depth", "pixel_index_map",
    "render_depth", "signed_distance",
    "make_primitive", "KINDS",
]
