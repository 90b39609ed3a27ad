"""Simulated capture records and dataset generation.

A sample couples a tactile signature (noisy membrane depth with an object
pressed in), a reference capture of the unloaded membrane, and the ground
truth in-contact object depth the de-renderer is trained to recover.
"""

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from ..diffusion.process import IMPRINT_SCALE, normalize_depth
from ..errors import ToolkitError
from ..geometry.camera import PinholeCamera
from ..geometry.cloud import pixel_index_map, project_depth
from ..geometry.depth import DepthImage
from ..geometry.mesh import TriMesh
from ..geometry.pose import RigidPose, rot_z
from ..geometry.primitives import make_primitive
from ..geometry.render import render_depth
from ..seeding import derive_seed, rng_for
from .mask import ContactMask, compute_contact_mask, in_contact_depth
from .membrane import MembraneParams
from .signature import SimNoiseConfig, synth_tactile_signature

MANIFEST_NAME = "manifest.json"
SCHEMA_VERSION = 1


class SensorConfig:
    """A mounted visio-tactile sensor: membrane body, camera, mounting pose.

    elastomer_pose_in_camera places the membrane's canonical frame (base
    plane z=0, dome toward +z) in the camera frame.  visible_mesh is the
    touchable outer surface in the same canonical frame; it is what the
    camera depth-images when the membrane is unloaded.
    """

    def __init__(self, elastomer_mesh: TriMesh, camera: PinholeCamera,
                 elastomer_pose_in_camera: RigidPose, membrane_thickness: float,
                 visible_mesh: TriMesh, params: MembraneParams | None = None):
        if not elastomer_mesh.is_watertight:
            raise ToolkitError("open-mesh", "the membrane body must be watertight")
        if not membrane_thickness > 0.0:
            raise ToolkitError("bad-membrane", "membrane thickness must be positive")
        self.elastomer_mesh = elastomer_mesh
        self.camera = camera
        self.elastomer_pose_in_camera = elastomer_pose_in_camera
        self.membrane_thickness = float(membrane_thickness)
        self.visible_mesh = visible_mesh
        self.params = params
        self._ref_cache: dict[bytes, DepthImage] = {}
        self._shell_cache: dict[bytes, TriMesh] = {}

    @classmethod
    def from_membrane(cls, params: MembraneParams, camera: PinholeCamera,
                      elastomer_pose_in_camera: RigidPose) -> "SensorConfig":
        return cls(params.body(), camera, elastomer_pose_in_camera,
                   params.thickness, params.surface(), params)

    def base_pose_world(self, camera_pose: RigidPose) -> RigidPose:
        return camera_pose.compose(self.elastomer_pose_in_camera)

    def shell_world(self, camera_pose: RigidPose) -> TriMesh:
        """Membrane body in world coordinates, cached per camera pose."""
        key = camera_pose.matrix().tobytes()
        mesh = self._shell_cache.get(key)
        if mesh is None:
            mesh = self.elastomer_mesh.transform(self.base_pose_world(camera_pose))
            self._shell_cache[key] = mesh
        return mesh

    def reference_depth(self, camera_pose: RigidPose) -> DepthImage:
        """Noise-free capture of the unloaded membrane, cached per pose."""
        key = camera_pose.matrix().tobytes()
        img = self._ref_cache.get(key)
        if img is None:
            surf = self.visible_mesh.transform(self.base_pose_world(camera_pose))
            img = render_depth(surf, self.camera, camera_pose)
            self._ref_cache[key] = img
        return img

    def surface_height_world(self, x: float, y: float,
                             camera_pose: RigidPose) -> float:
        """World z of the touchable surface above world-frame (x, y).

        Only supported while the membrane axis is world-z aligned; placement
        logic relies on "down" meaning the same thing in both frames.
        """
        if self.params is None:
            raise ToolkitError("bad-membrane",
                               "sensor carries no membrane parameters")
        base = self.base_pose_world(camera_pose)
        if not np.allclose(base.rotation, np.eye(3), atol=1e-9):
            raise ToolkitError("unsupported-sensor-orientation",
                               "surface height needs a world-z aligned membrane")
        bx, by, bz = base.translation
        return float(bz + self.params.surface_height(x - bx, y - by))


@dataclass(frozen=True)
class AmbiguityFlags:
    """Which pose coordinates a signature cannot pin down for an object.

    trans_axes lists world axes ("x", "y") along which translation slides
    freely at the canonical orientation; rot means heading is entirely
    unobservable.  rot_symmetry_order n > 1 marks an n-fold heading symmetry:
    headings differing by 2*pi/n are indistinguishable.
    """

    trans_axes: tuple = ()
    rot: bool = False
    rot_symmetry_order: int = 1

    def __post_init__(self):
        if not set(self.trans_axes) <= {"x", "y"}:
            raise ToolkitError("bad-flags",
                               f"unknown translation axes {self.trans_axes}")
        if self.rot_symmetry_order < 1:
            raise ToolkitError("bad-flags", "symmetry order must be >= 1")

    def to_json(self) -> dict:
        return {"trans_ambiguous": list(self.trans_axes),
                "rot_ambiguous": self.rot,
                "rot_symmetry_order": self.rot_symmetry_order}

    @classmethod
    def from_json(cls, obj: dict) -> "AmbiguityFlags":
        return cls(tuple(obj.get("trans_ambiguous", ())),
                   bool(obj.get("rot_ambiguous", False)),
                   int(obj.get("rot_symmetry_order", 1)))


@dataclass
class ObjectSpec:
    """A rigid object of the catalog: shape recipe plus mounting attitude.

    mount rotates the canonical primitive into its pressing attitude (e.g. a
    cylinder onto its side); heading and placement are applied on top of it.
    """

    object_id: str
    kind: str
    params: dict
    mount: RigidPose = field(default_factory=RigidPose.identity)
    flags: AmbiguityFlags = field(default_factory=AmbiguityFlags)
    _mesh: TriMesh | None = field(default=None, repr=False, compare=False)

    @property
    def mesh(self) -> TriMesh:
        if self._mesh is None:
            self._mesh = make_primitive(self.kind, **self.params)
        return self._mesh

    def to_json(self) -> dict:
        entry = {"id": self.object_id, "kind": self.kind, "params": self.params,
                 "mount": self.mount.matrix().tolist()}
        entry.update(self.flags.to_json())
        return entry

    @classmethod
    def from_json(cls, obj: dict) -> "ObjectSpec":
        return cls(obj["id"], obj["kind"], dict(obj["params"]),
                   RigidPose.from_matrix(np.asarray(obj["mount"])),
                   AmbiguityFlags.from_json(obj))


@dataclass(frozen=True)
class SampleRecord:
    """One simulated capture with its ground truth."""

    signature: DepthImage
    reference: DepthImage
    gt_contact_depth: DepthImage
    object_id: str
    object_pose: RigidPose
    camera_pose: RigidPose
    ambiguity_flags: AmbiguityFlags
    contact: bool


@dataclass(frozen=True)
class PoseDraw:
    x: float
    y: float
    theta: float
    penetration: float
    negative: bool


@dataclass(frozen=True)
class PoseSampler:
    """Uniform pose distribution over the membrane's working area.

    Draw order per sample is fixed (x, y, theta, penetration, negative) so a
    seed identifies a pose regardless of which fields a consumer uses.
    Negative draws lift the object lift_clearance above the surface instead
    of pressing it in, yielding contact-free captures.
    """

    x_range: tuple = (-0.008, 0.008)
    y_range: tuple = (-0.008, 0.008)
    theta_range: tuple = (-np.pi, np.pi)
    penetration_range: tuple = (0.0015, 0.005)
    negative_fraction: float = 0.05
    lift_clearance: float = 0.005

    def __post_init__(self):
        for name in ("x_range", "y_range", "theta_range", "penetration_range"):
            lo, hi = getattr(self, name)
            if not (np.isfinite(lo) and np.isfinite(hi) and lo <= hi):
                raise ToolkitError("bad-sampler", f"invalid {name} ({lo}, {hi})")
        if not 0.0 <= self.negative_fraction <= 1.0:
            raise ToolkitError("bad-sampler", "negative_fraction must be in [0, 1]")
        if self.penetration_range[0] <= 0.0:
            raise ToolkitError("bad-sampler", "penetration must be positive")
        if self.lift_clearance <= 0.0:
            raise ToolkitError("bad-sampler", "lift clearance must be positive")

    def sample(self, rng: np.random.Generator) -> PoseDraw:
        x = rng.uniform(*self.x_range)
        y = rng.uniform(*self.y_range)
        theta = rng.uniform(*self.theta_range)
        pen = rng.uniform(*self.penetration_range)
        neg = bool(rng.uniform() < self.negative_fraction)
        return PoseDraw(x, y, theta, pen, neg)

    def to_json(self) -> dict:
        return {"x_range": list(self.x_range), "y_range": list(self.y_range),
                "theta_range": list(self.theta_range),
                "penetration_range": list(self.penetration_range),
                "negative_fraction": self.negative_fraction,
                "lift_clearance": self.lift_clearance}

    @classmethod
    def from_json(cls, obj: dict) -> "PoseSampler":
        return cls(tuple(obj["x_range"]), tuple(obj["y_range"]),
                   tuple(obj["theta_range"]), tuple(obj["penetration_range"]),
                   obj["negative_fraction"], obj["lift_clearance"])


def place_object(spec: ObjectSpec, draw: PoseDraw, sensor: SensorConfig,
                 camera_pose: RigidPose, lift_clearance: float = 0.005) -> RigidPose:
    """World pose pressing (or hovering) the object at the drawn planar pose.

    The object is rotated to heading theta on top of its mount, then dropped
    so its lowest point sits penetration below the membrane surface at
    (x, y); negative draws instead hover it lift_clearance above.
    """
    z_surf = sensor.surface_height_world(draw.x, draw.y, camera_pose)
    rotation = rot_z(draw.theta) @ spec.mount.rotation
    low = float((spec.mesh.vertices @ rotation.T)[:, 2].min())
    if draw.negative:
        target = z_surf + lift_clearance
    else:
        target = z_surf - draw.penetration
    return RigidPose(rotation, (draw.x, draw.y, target - low))


def simulate_sample(object_mesh: TriMesh, object_pose: RigidPose,
                    sensor: SensorConfig, camera_pose: RigidPose,
                    noise: SimNoiseConfig, cloak_px: int = 21,
                    object_id: str = "",
                    flags: AmbiguityFlags | None = None) -> SampleRecord:
    """Simulate one capture of object_mesh pressed against the sensor.

    The contact set is exact: the camera-visible object surface is tested
    point-by-point against the membrane body.  A pose that touches nothing
    produces a valid record flagged contact=False, not an error.  Signature
    and reference noise use seeds derived from noise.seed, so the two
    captures are independent but jointly reproducible.
    """
    cam = sensor.camera
    depth = render_depth(object_mesh.transform(object_pose), cam, camera_pose)
    if depth.valid_count():
        cloud = project_depth(depth, cam, camera_pose)
        pmap = pixel_index_map(depth)
        mask = compute_contact_mask(cloud, sensor.shell_world(camera_pose), pmap)
    else:
        mask = ContactMask.zeros(cam.height, cam.width)
    gt = in_contact_depth(depth, mask)
    ref_clean = sensor.reference_depth(camera_pose)
    empty = DepthImage.zeros(cam.height, cam.width)
    sig = synth_tactile_signature(
        gt, ref_clean, cloak_px, replace(noise, seed=derive_seed(noise.seed, 0)))
    ref = synth_tactile_signature(
        empty, ref_clean, cloak_px, replace(noise, seed=derive_seed(noise.seed, 1)))
    return SampleRecord(
        signature=sig, reference=ref, gt_contact_depth=gt, object_id=object_id,
        object_pose=object_pose, camera_pose=camera_pose,
        ambiguity_flags=flags if flags is not None else AmbiguityFlags(),
        contact=gt.valid_count() > 0)


@dataclass(frozen=True)
class DatasetConfig:
    """Everything generate_dataset needs besides the object catalog."""

    sensor: SensorConfig
    camera_pose: RigidPose = field(default_factory=RigidPose.identity)
    noise_mean: float = 0.0
    noise_std: float = 0.0
    master_seed: int = 0
    train_ratio: float = 0.9
    test_objects: tuple = ()
    cloak_px: int = 21
    jobs: int = 1

    def __post_init__(self):
        if not 0.0 < self.train_ratio < 1.0:
            raise ToolkitError("bad-config", "train_ratio must be in (0, 1)")
        if self.jobs < 1:
            raise ToolkitError("bad-config", "jobs must be >= 1")


def assign_splits(objects, n_samples: int, train_ratio: float,
                  test_objects=()) -> list:
    """Split label per sample index.

    Samples cycle through the catalog (sample i uses object i mod len).
    Objects named in test_objects are held out entirely ("test_object").
    For the rest, the last ~(1 - train_ratio) of each object's samples are
    "test_pose" (at least one, and at least one stays "train" when the
    object has more than one sample).
    """
    held = set(test_objects)
    unknown = held - {o.object_id for o in objects}
    if unknown:
        raise ToolkitError("bad-config", f"unknown test objects {sorted(unknown)}")
    labels = [""] * n_samples
    for k, spec in positions(objects, n_samples):
        if spec.object_id in held:
            for i in k:
                labels[i] = "test_object"
            continue
        n_test = max(1, int(round(len(k) * (1.0 - train_ratio))))
        if len(k) > 1:
            n_test = min(n_test, len(k) - 1)
        for i in k[:len(k) - n_test]:
            labels[i] = "train"
        for i in k[len(k) - n_test:]:
            labels[i] = "test_pose"
    return labels


def positions(objects, n_samples: int):
    """(sample indices, spec) per catalog object under round-robin order."""
    out = []
    for j, spec in enumerate(objects):
        idx = list(range(j, n_samples, len(objects)))
        if idx:
            out.append((idx, spec))
    return out


def _sample_path(out_dir: Path, i: int, suffix: str) -> Path:
    return out_dir / f"{i:06d}.{suffix}"


def generate_dataset(objects, n_samples: int, pose_sampler: PoseSampler,
                     config: DatasetConfig, out_dir) -> dict:
    """Simulate n_samples captures and write them plus a manifest.

    Sample i uses object i mod len(objects); its pose comes from the stream
    (master_seed, 0, i) and its capture noise from (master_seed, 1, i), so
    any sample can be regenerated alone and the output is independent of
    job count.  Files: NNNNNN.sig.tdrd / .ref.tdrd / .gt.tdrd / .pose.json
    and manifest.json.  Returns the manifest.
    """
    if not objects:
        raise ToolkitError("bad-config", "object catalog is empty")
    if n_samples < 1:
        raise ToolkitError("bad-config", "n_samples must be >= 1")
    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        probe = out_dir / ".write-probe"
        probe.write_bytes(b"")
        probe.unlink()
    except OSError as e:
        raise ToolkitError("io-error", f"cannot write to {out_dir}: {e}")

    sensor, camera_pose = config.sensor, config.camera_pose
    labels = assign_splits(objects, n_samples, config.train_ratio,
                           config.test_objects)

    def build(i: int):
        spec = objects[i % len(objects)]
        draw = pose_sampler.sample(rng_for(config.master_seed, 0, i))
        pose = place_object(spec, draw, sensor, camera_pose,
                            pose_sampler.lift_clearance)
        noise = SimNoiseConfig(config.noise_mean, config.noise_std,
                               derive_seed(config.master_seed, 1, i))
        rec = simulate_sample(spec.mesh, pose, sensor, camera_pose, noise,
                              config.cloak_px, spec.object_id, spec.flags)
        return rec

    samples_meta = []
    try:
        if config.jobs > 1:
            with ThreadPoolExecutor(max_workers=config.jobs) as pool:
                records = pool.map(build, range(n_samples))
                for i, rec in enumerate(records):
                    _write_record(out_dir, i, rec)
                    samples_meta.append(_meta_entry(i, rec, labels[i]))
        else:
            for i in range(n_samples):
                rec = build(i)
                _write_record(out_dir, i, rec)
                samples_meta.append(_meta_entry(i, rec, labels[i]))
    except OSError as e:
        raise ToolkitError("io-error", f"failed writing sample files: {e}")

    cam = sensor.camera
    manifest = {
        "schema_version": SCHEMA_VERSION,
        "image": {"height": cam.height, "width": cam.width},
        "camera": {"fx": cam.fx, "fy": cam.fy, "cx": cam.cx, "cy": cam.cy,
                   "width": cam.width, "height": cam.height,
                   "near": cam.near, "far": cam.far},
        "camera_pose": camera_pose.matrix().tolist(),
        "sensor": _sensor_meta(sensor),
        "noise": {"mean": config.noise_mean, "std": config.noise_std},
        "master_seed": config.master_seed,
        "train_ratio": config.train_ratio,
        "test_objects": sorted(config.test_objects),
        "cloak_px": config.cloak_px,
        "sampler": pose_sampler.to_json(),
        "n_samples": n_samples,
        "objects": [o.to_json() for o in objects],
        "samples": samples_meta,
    }
    try:
        with open(out_dir / MANIFEST_NAME, "w") as f:
            json.dump(manifest, f, sort_keys=True, indent=1)
            f.write("\n")
    except OSError as e:
        raise ToolkitError("io-error", f"failed writing manifest: {e}")
    return manifest


def _sensor_meta(sensor: SensorConfig) -> dict:
    meta = {
        "base_pose_in_camera": sensor.elastomer_pose_in_camera.matrix().tolist(),
        "thickness": sensor.membrane_thickness,
    }
    if sensor.params is not None:
        meta.update({"radius": sensor.params.radius,
                     "dome_height": sensor.params.dome_height,
                     "tessellation": sensor.params.tessellation})
    return meta


def _meta_entry(i: int, rec: SampleRecord, split: str) -> dict:
    return {"id": f"{i:06d}", "object_id": rec.object_id, "split": split,
            "contact": rec.contact}


def _write_record(out_dir: Path, i: int, rec: SampleRecord) -> None:
    rec.signature.save(_sample_path(out_dir, i, "sig.tdrd"))
    rec.reference.save(_sample_path(out_dir, i, "ref.tdrd"))
    rec.gt_contact_depth.save(_sample_path(out_dir, i, "gt.tdrd"))
    pose = {"object_id": rec.object_id,
            "H_wo": rec.object_pose.matrix().tolist(),
            "H_wc": rec.camera_pose.matrix().tolist()}
    with open(_sample_path(out_dir, i, "pose.json"), "w") as f:
        json.dump(pose, f, sort_keys=True, indent=1)
        f.write("\n")


def load_manifest(out_dir) -> dict:
    path = Path(out_dir) / MANIFEST_NAME
    try:
        with open(path) as f:
            manifest = json.load(f)
    except OSError as e:
        raise ToolkitError("io-error", f"cannot read {path}: {e}")
    except json.JSONDecodeError as e:
        raise ToolkitError("bad-manifest", f"{path} is not valid JSON: {e}")
    if manifest.get("schema_version") != SCHEMA_VERSION:
        raise ToolkitError("bad-manifest",
                           f"unsupported schema {manifest.get('schema_version')}")
    return manifest


def rebuild_camera(manifest: dict) -> PinholeCamera:
    c = manifest["camera"]
    return PinholeCamera(fx=c["fx"], fy=c["fy"], cx=c["cx"], cy=c["cy"],
                         width=c["width"], height=c["height"],
                         near=c["near"], far=c["far"])


def rebuild_sensor(manifest: dict) -> SensorConfig:
    s = manifest["sensor"]
    params = MembraneParams(s["radius"], s["thickness"], s["dome_height"],
                            s["tessellation"])
    return SensorConfig.from_membrane(
        params, rebuild_camera(manifest),
        RigidPose.from_matrix(np.asarray(s["base_pose_in_camera"])))


def rebuild_objects(manifest: dict) -> dict:
    return {o["id"]: ObjectSpec.from_json(o) for o in manifest["objects"]}


def sample_ids(manifest: dict, split=None) -> list:
    """Sample ids, optionally restricted to one split or a set of splits."""
    if split is None:
        return [s["id"] for s in manifest["samples"]]
    wanted = {split} if isinstance(split, str) else set(split)
    return [s["id"] for s in manifest["samples"] if s["split"] in wanted]


def load_record(out_dir, sample_id: str, manifest: dict) -> SampleRecord:
    out_dir = Path(out_dir)
    objects = rebuild_objects(manifest)
    try:
        sig = DepthImage.load(out_dir / f"{sample_id}.sig.tdrd")
        ref = DepthImage.load(out_dir / f"{sample_id}.ref.tdrd")
        gt = DepthImage.load(out_dir / f"{sample_id}.gt.tdrd")
        with open(out_dir / f"{sample_id}.pose.json") as f:
            pose = json.load(f)
    except OSError as e:
        raise ToolkitError("io-error", f"cannot read sample {sample_id}: {e}")
    except json.JSONDecodeError as e:
        raise ToolkitError("bad-manifest",
                           f"pose file of sample {sample_id} is invalid: {e}")
    oid = pose["object_id"]
    if oid not in objects:
        raise ToolkitError("bad-manifest",
                           f"sample {sample_id} names unknown object {oid}")
    return SampleRecord(
        signature=sig, reference=ref, gt_contact_depth=gt, object_id=oid,
        object_pose=RigidPose.from_matrix(np.asarray(pose["H_wo"])),
        camera_pose=RigidPose.from_matrix(np.asarray(pose["H_wc"])),
        ambiguity_flags=objects[oid].flags,
        contact=gt.valid_count() > 0)


def load_split_arrays(out_dir, manifest: dict, split, d_max: float):
    """Stacked training tensors for a split.

    Returns (x0, cond, ids): x0 is ground-truth depth mapped to [-1, 1]
    (invalid pixels at -1), cond the imprint (reference - signature) in
    working-indentation units, both float32 of shape (N, 1, H, W).
    """
    ids = sample_ids(manifest, split)
    h = manifest["image"]["height"]
    w = manifest["image"]["width"]
    x0 = np.empty((len(ids), 1, h, w), dtype=np.float32)
    cond = np.empty((len(ids), 1, h, w), dtype=np.float32)
    out_dir = Path(out_dir)
    for n, sid in enumerate(ids):
        gt = DepthImage.load(out_dir / f"{sid}.gt.tdrd").data
        sig = DepthImage.load(out_dir / f"{sid}.sig.tdrd").data
        ref = DepthImage.load(out_dir / f"{sid}.ref.tdrd").data
        x0[n, 0] = normalize_depth(gt, d_max)
        cond[n, 0] = (ref - sig) / IMPRINT_SCALE
    return x0, cond, ids
