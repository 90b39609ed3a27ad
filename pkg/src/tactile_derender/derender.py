"""Reconstruction of in-contact object depth from tactile signatures.

The imprint (reference minus measurement) conditions a trained noise
predictor; ancestral sampling then proposes a normalized depth image, which
maps back to metric depth and a camera/world point cloud.
"""

from dataclasses import dataclass

import numpy as np

from .diffusion.process import (IMPRINT_SCALE, ddpm_sample_batch,
                                depth_from_normalized)
from .diffusion.schedule import VarianceSchedule
from .errors import ToolkitError
from .geometry.camera import PinholeCamera
from .geometry.cloud import PointCloud, project_depth
from .geometry.depth import DepthImage
from .geometry.pose import RigidPose
from .seeding import derive_seed


@dataclass(frozen=True)
class Imprint:
    """Membrane deflection field: reference depth minus measured depth.

    Positive where an object pushes the membrane toward the camera... the
    touchable surface sits farther than the measured object surface, so
    contact regions are strictly positive up to noise.
    """

    data: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=np.float64)
        if arr.ndim != 2:
            raise ToolkitError("bad-imprint", f"imprint must be 2D, got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ToolkitError("bad-imprint", "imprint must be finite")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    def conditioning(self) -> np.ndarray:
        """(1, H, W) float64 conditioning channel in working-indentation units."""
        return (self.data / IMPRINT_SCALE)[None]


@dataclass(frozen=True)
class DerenderResult:
    depth: DepthImage
    cloud: PointCloud
    seed: int


def compute_imprint(reference: DepthImage, measurement: DepthImage) -> Imprint:
    if (reference.height, reference.width) != (measurement.height,
                                               measurement.width):
        raise ToolkitError(
            "dimension-mismatch",
            f"reference is {reference.height}x{reference.width}, measurement "
            f"is {measurement.height}x{measurement.width}")
    return Imprint(reference.data - measurement.data)


def derender(signature: DepthImage, reference: DepthImage, predictor,
             schedule: VarianceSchedule, seed: int, camera: PinholeCamera,
             camera_pose: RigidPose | None = None,
             d_max: float | None = None) -> DerenderResult:
    """One reconstruction of the in-contact depth behind a signature."""
    return derender_batch([signature], [reference], predictor, schedule,
                          [seed], camera, camera_pose, d_max)[0]


def derender_batch(signatures, references, predictor,
                   schedule: VarianceSchedule, seeds, camera: PinholeCamera,
                   camera_pose: RigidPose | None = None,
                   d_max: float | None = None) -> list:
    """Batched reconstructions, one seed per signature.

    Each member's noise comes from its own seeded stream, so a member's
    result depends only on its inputs and seed, never on its batch mates
    (up to the predictor's own batch handling).
    """
    if not (len(signatures) == len(references) == len(seeds)):
        raise ToolkitError("bad-config", "signatures, references, seeds "
                                         "must have equal lengths")
    if not signatures:
        return []
    if d_max is None:
        d_max = camera.far
    conds = []
    for sig, ref in zip(signatures, references):
        conds.append(compute_imprint(ref, sig).conditioning())
    rngs = [np.random.default_rng(int(s)) for s in seeds]
    x = ddpm_sample_batch(predictor, np.stack(conds), schedule, rngs)
    out = []
    for i, seed in enumerate(seeds):
        depth = DepthImage(depth_from_normalized(x[i, 0], d_max))
        cloud = project_depth(depth, camera, camera_pose)
        out.append(DerenderResult(depth=depth, cloud=cloud, seed=int(seed)))
    return out


def derender_ensemble(signature: DepthImage, reference: DepthImage, predictor,
                      schedule: VarianceSchedule, n: int = 50, seed: int = 0,
                      camera: PinholeCamera | None = None,
                      camera_pose: RigidPose | None = None,
                      d_max: float | None = None, batch: int = 10) -> list:
    """n independent reconstructions of one signature.

    Member i draws from the stream derived from (seed, i); results are
    independent of the batch size used to compute them only insofar as the
    predictor is batch-invariant, so rerun with the same batch to reproduce
    bytes.
    """
    if n < 1:
        raise ToolkitError("bad-config", "ensemble size must be >= 1")
    if camera is None:
        raise ToolkitError("bad-config", "ensemble needs the sensor camera")
    member_seeds = [derive_seed(seed, i) for i in range(n)]
    out = []
    for k in range(0, n, batch):
        chunk = member_seeds[k:k + batch]
        out.extend(derender_batch([signature] * len(chunk),
                                  [reference] * len(chunk), predictor,
                                  schedule, chunk, camera, camera_pose, d_max))
    return out
