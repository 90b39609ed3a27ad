"""Pose error under per-object observability flags."""

from dataclasses import dataclass

import numpy as np

from ..contact.dataset import AmbiguityFlags
from .planar import PlanarPose, wrap_angle


@dataclass(frozen=True)
class PoseError:
    """position is meters; theta is radians or None when heading is
    unobservable for the object."""

    position: float
    theta: float | None


def pose_error(estimate: PlanarPose, truth: PlanarPose,
               flags: AmbiguityFlags = AmbiguityFlags()) -> PoseError:
    """Error between estimate and truth with unobservable parts removed.

    Ambiguous translation axes are object-frame directions at heading zero;
    they rotate with the true heading before being projected out.  Heading
    error folds into the object's symmetry sector, or is excluded entirely
    for heading-free objects.
    """
    e = np.array([estimate.x - truth.x, estimate.y - truth.y])
    for axis in flags.trans_axes:
        base = np.array([1.0, 0.0]) if axis == "x" else np.array([0.0, 1.0])
        c, s = np.cos(truth.theta), np.sin(truth.theta)
        direction = np.array([c * base[0] - s * base[1],
                              s * base[0] + c * base[1]])
        e = e - (e @ direction) * direction
    position = float(np.linalg.norm(e))

    if flags.rot:
        return PoseError(position, None)
    delta = wrap_angle(estimate.theta - truth.theta)
    sector = 2.0 * np.pi / flags.rot_symmetry_order
    folded = (delta + sector / 2.0) % sector - sector / 2.0
    return PoseError(position, float(abs(folded)))
