"""Stock tabletop scene: sensor rig and object catalog defaults.

One membrane, one camera looking straight up its axis, six primitive objects
pressed in from above.  Everything here is plain construction; the numbers
are the defaults the command line uses and can be overridden per field.
"""

import numpy as np

from .contact.dataset import AmbiguityFlags, DatasetConfig, ObjectSpec, \
    PoseSampler, SensorConfig
from .contact.membrane import MembraneParams
from .geometry.camera import PinholeCamera
from .geometry.pose import RigidPose, rot_x, rot_y

MEMBRANE = dict(radius=0.045, thickness=0.012, dome_height=0.015,
                tessellation=48)
CAMERA = dict(fx=105.0, fy=105.0, cx=31.5, cy=31.5, width=64, height=64,
              near=0.01, far=0.2)
BASE_Z = 0.10  # membrane mounting plane along the optical axis


def stock_camera(**overrides) -> PinholeCamera:
    cfg = {**CAMERA, **overrides}
    return PinholeCamera(**cfg)


def stock_sensor(camera: PinholeCamera | None = None, base_z: float = BASE_Z,
                 **membrane_overrides) -> SensorConfig:
    params = MembraneParams(**{**MEMBRANE, **membrane_overrides})
    cam = camera if camera is not None else stock_camera()
    base = RigidPose(np.eye(3), (0.0, 0.0, base_z))
    return SensorConfig.from_membrane(params, cam, base)


def stock_objects() -> list:
    """Six-object catalog with per-object pose observability flags.

    The sphere and the tip-down bullet leave heading unobservable; the
    side-lying cylinder slides freely along its axis (x at heading zero) and
    looks the same after a half turn.  Prism and cross have 3- and 4-fold
    heading symmetry.
    """
    lay_side = RigidPose(rot_y(np.pi / 2.0))   # cylinder axis into the plane
    tip_down = RigidPose(rot_x(np.pi))         # bullet nose toward the membrane
    return [
        ObjectSpec("sphere", "sphere", {"radius": 0.015, "level": 3},
                   flags=AmbiguityFlags(rot=True)),
        ObjectSpec("cylinder-side", "cylinder",
                   {"radius": 0.010, "height": 0.036, "segments": 24},
                   mount=lay_side,
                   flags=AmbiguityFlags(trans_axes=("x",),
                                        rot_symmetry_order=2)),
        ObjectSpec("prism3", "prism3", {"side": 0.024, "height": 0.020},
                   flags=AmbiguityFlags(rot_symmetry_order=3)),
        ObjectSpec("trapezoid", "trapezoid",
                   {"bottom": 0.024, "top": 0.012, "depth": 0.016,
                    "height": 0.020}),
        ObjectSpec("cross", "cross",
                   {"span": 0.028, "arm": 0.009, "height": 0.020},
                   flags=AmbiguityFlags(rot_symmetry_order=4)),
        ObjectSpec("bullet", "bullet",
                   {"radius": 0.010, "length": 0.020, "segments": 24},
                   mount=tip_down, flags=AmbiguityFlags(rot=True)),
    ]


def stock_pose_sampler(**overrides) -> PoseSampler:
    return PoseSampler(**overrides)


def stock_dataset_config(sensor: SensorConfig | None = None,
                         **overrides) -> DatasetConfig:
    cfg = dict(noise_mean=0.0, noise_std=0.00138, master_seed=0,
               train_ratio=0.9, cloak_px=21, jobs=1)
    cfg.update(overrides)
    return DatasetConfig(sensor=sensor if sensor is not None else stock_sensor(),
                         **cfg)
