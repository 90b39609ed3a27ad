"""Planar pose estimation from contact point clouds."""

from .baseline import BaselineConfig, baseline_extract
from .cost import chamfer_sq, registration_cost
from .error import PoseError, pose_error
from .planar import PlanarPose, planar_from_world, wrap_angle
from .solve import RegistrationConfig, RegistrationResult, register

__all__ = [
    "BaselineConfig", "PlanarPose", "PoseError", "RegistrationConfig",
    "RegistrationResult", "baseline_extract", "chamfer_sq", "planar_from_world",
    "pose_error", "register", "registration_cost", "wrap_angle",
]
