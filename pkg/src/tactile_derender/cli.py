"""Command line front end for the full pipeline.

Six subcommands: simulate a contact dataset, train the depth denoiser,
derender held-out signatures, estimate planar poses, score reconstruction
metrics, and profile single-sample pose uncertainty.  Logging goes to
stderr only; stdout carries nothing but the --dry-run plan.  Failures exit
with a category-coded status and print one machine-readable
"error-category: <name>" line on stderr.
"""

import argparse
import json
import logging
import os
import sys
import time
from pathlib import Path

import numpy as np

from .config import load_config, write_resolved
from .contact.dataset import (DatasetConfig, generate_dataset, load_manifest,
                              load_record, load_split_arrays, rebuild_camera,
                              rebuild_objects, sample_ids)
from .contact.membrane import MembraneParams
from .contact.dataset import PoseSampler, SensorConfig
from .derender import derender_batch, derender_ensemble
from .diffusion.checkpoint import load_checkpoint, save_checkpoint
from .diffusion.model import DepthDenoiser, TorchPredictor, \
    set_deterministic_torch
from .diffusion.schedule import cosine_schedule
from .diffusion.train import TrainConfig, make_optimizer, train
from .errors import ToolkitError
from .evalkit.kde import kde
from .evalkit.png import save_curve_png, save_panel_png
from .evalkit.report import write_csv
from .geometry.cloud import project_depth
from .geometry.depth import DepthImage
from .geometry.mesh import TriMesh
from .geometry.pose import RigidPose
from .registration.baseline import BaselineConfig, baseline_extract
from .registration.cost import chamfer_sq
from .registration.error import pose_error
from .registration.planar import planar_from_world, wrap_angle
from .registration.solve import RegistrationConfig, register
from .seeding import derive_seed

LOG = logging.getLogger("tdr")

# stable exit codes per error family; anything unrecognized exits 1
EXIT_CODES = {
    "bad-config": 2, "bad-manifest": 2, "bad-checkpoint": 2, "bad-csv": 2,
    "bad-schedule": 2, "bad-sampler": 2, "bad-flags": 2, "bad-noise": 2,
    "bad-cloak": 2, "bad-mask": 2, "bad-imprint": 2, "bad-image": 2,
    "bad-kde": 2, "bad-pose": 2, "bad-cloud": 2, "bad-predictor": 2,
    "io-error": 3, "bad-depth-file": 3, "bad-obj": 3, "bad-xyz": 3,
    "empty-dataset": 4, "empty-cloud": 4, "missing-correspondence": 4,
    "dimension-mismatch": 4,
    "training-diverged": 5, "sampling-diverged": 5,
    "open-mesh": 6, "empty-mesh": 6, "bad-membrane": 6, "sdf-degenerate": 6,
    "nonplanar-pose": 6, "unsupported-sensor-orientation": 6,
}

DERENDER_MANIFEST = "derender.json"


def _load_depth(path) -> DepthImage:
    try:
        return DepthImage.load(path)
    except OSError as e:
        raise ToolkitError("io-error", f"cannot read {path}: {e}")


def _resolve_jobs(ns) -> int:
    if ns.jobs is not None:
        value = ns.jobs
    else:
        raw = os.environ.get("TDR_JOBS", "")
        try:
            value = int(raw) if raw else 1
        except ValueError:
            raise ToolkitError("bad-config",
                               f"TDR_JOBS must be an integer, got {raw!r}")
    if value < 1:
        raise ToolkitError("bad-config", "jobs must be >= 1")
    return value


def _guard_dir(out, marker: str, force: bool) -> Path:
    """Create the output directory, refusing to clobber a previous run."""
    path = Path(out)
    if (path / marker).exists() and not force:
        raise ToolkitError(
            "io-error", f"{path / marker} exists; pass --force to overwrite")
    try:
        path.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise ToolkitError("io-error", f"cannot create {path}: {e}")
    return path


def _guard_file(out, force: bool) -> Path:
    path = Path(out)
    if path.exists() and not force:
        raise ToolkitError("io-error",
                           f"{path} exists; pass --force to overwrite")
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise ToolkitError("io-error", f"cannot create {path.parent}: {e}")
    return path


def _emit_plan(plan: dict) -> int:
    json.dump(plan, sys.stdout, sort_keys=True, indent=1)
    sys.stdout.write("\n")
    return 0


def _need(ns, attr: str, flag: str):
    value = getattr(ns, attr, None)
    if value is None:
        raise ToolkitError("bad-config", f"{flag} is required")
    return value


def _seed_of(ns, config: dict) -> int:
    return config["seed"] if ns.seed is None else ns.seed


# ---------------------------------------------------------------- simulate

def _build_scene(config: dict):
    from .geometry.camera import PinholeCamera

    d = config["dataset"]
    camera = PinholeCamera(**d["camera"])
    membrane = MembraneParams(**d["membrane"])
    base = RigidPose(np.eye(3), (0.0, 0.0, d["base_z"]))
    sensor = SensorConfig.from_membrane(membrane, camera, base)
    s = d["sampler"]
    sampler = PoseSampler(tuple(s["x_range"]), tuple(s["y_range"]),
                          tuple(s["theta_range"]),
                          tuple(s["penetration_range"]),
                          s["negative_fraction"], s["lift_clearance"])
    return sensor, sampler


def cmd_simulate(ns) -> int:
    from .scene import stock_objects

    config = load_config(ns.config)
    seed = _seed_of(ns, config)
    out = _need(ns, "out", "--out")
    d = config["dataset"]
    jobs = _resolve_jobs(ns)
    sensor, sampler = _build_scene(config)
    objects = stock_objects()
    ds = DatasetConfig(sensor=sensor, noise_mean=d["noise_mean"],
                       noise_std=d["noise_std"], master_seed=seed,
                       train_ratio=d["train_ratio"],
                       test_objects=tuple(d["test_objects"]),
                       cloak_px=d["cloak_px"], jobs=jobs)
    if ns.dry_run:
        return _emit_plan({
            "command": "simulate", "out": str(out), "seed": seed,
            "n_samples": d["n_samples"], "jobs": jobs,
            "objects": [o.object_id for o in objects],
            "would_write": ["manifest.json", "<id>.{sig,ref,gt}.tdrd",
                            "<id>.pose.json", "resolved_simulate.json"]})
    out_dir = _guard_dir(out, "manifest.json", ns.force)
    t0 = time.monotonic()
    generate_dataset(objects, d["n_samples"], sampler, ds, out_dir)
    LOG.info("simulated %d samples into %s in %.1fs", d["n_samples"],
             out_dir, time.monotonic() - t0)
    write_resolved(config, out_dir, "simulate")
    return 0


# ------------------------------------------------------------------- train

def cmd_train(ns) -> int:
    config = load_config(ns.config)
    seed = _seed_of(ns, config)
    data = Path(_need(ns, "data", "--data"))
    out = _need(ns, "out", "--out")
    t = config["train"]
    if ns.resume and ns.finetune:
        raise ToolkitError("bad-config",
                           "--resume and --finetune are mutually exclusive")

    manifest = load_manifest(data)
    camera = rebuild_camera(manifest)
    d_max = camera.far
    image = (manifest["image"]["height"], manifest["image"]["width"])

    if ns.resume:
        ck = load_checkpoint(ns.resume)
        if ck.epoch >= t["epochs"]:
            raise ToolkitError(
                "bad-config", f"checkpoint already at epoch {ck.epoch}; "
                f"raise train.epochs past it to resume")
        model, schedule = ck.model, ck.schedule
        tcfg = TrainConfig(learning_rate=ck.train_config.learning_rate,
                           epochs=t["epochs"],
                           batch_size=ck.train_config.batch_size,
                           loss=ck.train_config.loss,
                           seed=ck.train_config.seed)
        optimizer = ck.make_optimizer()
        start_epoch, prior_curve = ck.epoch, list(ck.loss_curve)
        mode = "resume"
    else:
        schedule = cosine_schedule(t["steps"], t["offset"])
        tcfg = TrainConfig(learning_rate=t["learning_rate"],
                           epochs=t["epochs"], batch_size=t["batch_size"],
                           loss=t["loss"], seed=seed)
        if ns.finetune:
            ck = load_checkpoint(ns.finetune)
            model, schedule = ck.model, ck.schedule
            mode = "finetune"
        else:
            set_deterministic_torch()
            import torch
            torch.manual_seed(derive_seed(seed, 777))
            model = DepthDenoiser(widths=tuple(t["widths"]),
                                  emb_dim=t["emb_dim"])
            mode = "pretrain"
        optimizer = make_optimizer(model, tcfg)
        start_epoch, prior_curve = 0, []

    if ns.dry_run:
        n_params = sum(p.numel() for p in model.parameters())
        return _emit_plan({
            "command": "train", "mode": mode, "out": str(out), "seed": seed,
            "epochs": t["epochs"], "start_epoch": start_epoch,
            "steps": schedule.steps, "parameters": n_params,
            "would_write": [Path(out).name, "resolved_train.json"]})

    out_path = _guard_file(out, ns.force)
    x0, cond, ids = load_split_arrays(data, manifest, "train", d_max)
    LOG.info("training on %d samples (%s, epochs %d..%d)", len(ids), mode,
             start_epoch, t["epochs"])
    t0 = time.monotonic()

    def progress(epoch, loss):
        LOG.info("epoch %d: loss %.5f (%.1fs elapsed)", epoch, loss,
                 time.monotonic() - t0)

    result = train(model, schedule, x0, cond, tcfg, optimizer=optimizer,
                   start_epoch=start_epoch, on_epoch=progress)
    curve = prior_curve + result.loss_curve
    save_checkpoint(out_path, model, schedule, d_max=d_max, image=image,
                    epoch=t["epochs"], loss_curve=curve, train_config=tcfg,
                    optimizer=optimizer)
    LOG.info("saved %s after %d epochs (final loss %.5f)", out_path,
             t["epochs"], curve[-1])
    write_resolved(config, out_path.parent, "train")
    return 0


# ---------------------------------------------------------------- derender

def _load_model(path, manifest):
    ck = load_checkpoint(path)
    image = (manifest["image"]["height"], manifest["image"]["width"])
    if tuple(ck.image) != image:
        raise ToolkitError(
            "dimension-mismatch",
            f"checkpoint expects {tuple(ck.image)} images, dataset has {image}")
    return ck


def cmd_derender(ns) -> int:
    config = load_config(ns.config)
    seed = _seed_of(ns, config)
    data = Path(_need(ns, "data", "--data"))
    out = _need(ns, "out", "--out")
    dr = config["derender"]

    manifest = load_manifest(data)
    ids = sample_ids(manifest, dr["split"])
    if dr["limit"] is not None:
        ids = ids[:dr["limit"]]
    if not ids:
        raise ToolkitError("empty-dataset",
                           f"no samples in split {dr['split']!r}")
    if ns.dry_run:
        return _emit_plan({
            "command": "derender", "out": str(out), "seed": seed,
            "split": dr["split"], "n_samples": len(ids), "batch": dr["batch"],
            "would_write": ["<id>.dr.tdrd", DERENDER_MANIFEST,
                            "resolved_derender.json"]})

    ck = _load_model(_need(ns, "model", "--model"), manifest)
    out_dir = _guard_dir(out, DERENDER_MANIFEST, ns.force)
    camera = rebuild_camera(manifest)
    camera_pose = RigidPose.from_matrix(np.asarray(manifest["camera_pose"]))
    predictor = TorchPredictor(ck.model)
    t0 = time.monotonic()
    png_left = dr["png"]
    for k in range(0, len(ids), dr["batch"]):
        chunk = ids[k:k + dr["batch"]]
        records = [load_record(data, sid, manifest) for sid in chunk]
        seeds = [derive_seed(seed, 500, int(sid)) for sid in chunk]
        results = derender_batch([r.signature for r in records],
                                 [r.reference for r in records], predictor,
                                 ck.schedule, seeds, camera, camera_pose,
                                 ck.d_max)
        for sid, rec, res in zip(chunk, records, results):
            res.depth.save(out_dir / f"{sid}.dr.tdrd")
            if png_left > 0:
                save_panel_png(out_dir / f"{sid}.panel.png",
                               [rec.signature, rec.gt_contact_depth,
                                res.depth])
                png_left -= 1
        LOG.info("derendered %d/%d (%.1fs elapsed)", min(k + dr["batch"],
                 len(ids)), len(ids), time.monotonic() - t0)
    payload = {"schema_version": 1, "split": dr["split"], "seed": seed,
               "batch": dr["batch"], "limit": dr["limit"],
               "model_epoch": ck.epoch, "d_max": ck.d_max, "samples": ids}
    with open(out_dir / DERENDER_MANIFEST, "w") as f:
        json.dump(payload, f, sort_keys=True, indent=1)
        f.write("\n")
    write_resolved(config, out_dir, "derender")
    return 0


def _load_derender(path) -> dict:
    p = Path(path) / DERENDER_MANIFEST
    try:
        with open(p) as f:
            payload = json.load(f)
    except OSError as e:
        raise ToolkitError("io-error", f"cannot read {p}: {e}")
    except json.JSONDecodeError as e:
        raise ToolkitError("bad-manifest", f"{p} is not valid JSON: {e}")
    if payload.get("schema_version") != 1:
        raise ToolkitError("bad-manifest",
                           f"unsupported derender schema in {p}")
    return payload


# -------------------------------------------------------------------- pose

POSE_COLUMNS = ["sample_id", "method", "x_mm", "y_mm", "theta_rad", "cost",
                "position_err_mm", "theta_err_rad", "chamfer_m2"]


def _thin(points: np.ndarray, cap: int) -> np.ndarray:
    if len(points) <= cap:
        return points
    stride = -(-len(points) // cap)
    return points[::stride]


def _mounted_mesh(spec) -> TriMesh:
    verts = spec.mount.apply(spec.mesh.vertices)
    return TriMesh(verts, spec.mesh.triangles, name=spec.object_id)


def _na_row(sid: str, method: str) -> list:
    return [sid, method] + ["n/a"] * (len(POSE_COLUMNS) - 2)


def cmd_pose(ns) -> int:
    config = load_config(ns.config)
    seed = _seed_of(ns, config)
    data = Path(_need(ns, "data", "--data"))
    dr_dir = Path(_need(ns, "derender", "--derender"))
    out = _need(ns, "out", "--out")
    p = config["pose"]

    manifest = load_manifest(data)
    payload = _load_derender(dr_dir)
    ids = payload["samples"]
    if p["limit"] is not None:
        ids = ids[:p["limit"]]
    contact_of = {s["id"]: s["contact"] for s in manifest["samples"]}
    ids = [sid for sid in ids if contact_of.get(sid)]
    if not ids:
        raise ToolkitError("empty-dataset", "no contact samples to register")
    if ns.dry_run:
        return _emit_plan({
            "command": "pose", "out": str(out), "seed": seed,
            "n_samples": len(ids), "methods": ["ours", "baseline"],
            "would_write": [Path(out).name, "resolved_pose.json"]})

    out_path = _guard_file(out, ns.force)
    camera = rebuild_camera(manifest)
    camera_pose = RigidPose.from_matrix(np.asarray(manifest["camera_pose"]))
    objects = rebuild_objects(manifest)
    b = p["bound_xy"]
    bounds = ((-b, b), (-b, b), (-np.pi, np.pi))
    base_cfg = BaselineConfig(threshold=p["baseline_threshold"])
    rows = []
    t0 = time.monotonic()
    for sid in ids:
        rec = load_record(data, sid, manifest)
        spec = objects[rec.object_id]
        truth, support_z = planar_from_world(rec.object_pose, spec.mount)
        mesh = _mounted_mesh(spec)
        gt_pts = project_depth(rec.gt_contact_depth, camera,
                               camera_pose).points
        pred = _load_depth(dr_dir / f"{sid}.dr.tdrd")
        clouds = {
            "ours": project_depth(pred, camera, camera_pose).points,
            "baseline": baseline_extract(rec.signature, rec.reference,
                                         base_cfg, camera,
                                         camera_pose).points,
        }
        for m, (method, pts) in enumerate(clouds.items()):
            if len(pts) == 0 or len(gt_pts) == 0:
                rows.append(_na_row(sid, method))
                continue
            pts = _thin(pts, p["subsample"])
            rcfg = RegistrationConfig(
                n_inits=p["n_inits"], n_iters=p["n_iters"], bounds=bounds,
                tol=p["tol"], seed=derive_seed(seed, 700, int(sid), m))
            res = register(pts, mesh, support_z, rcfg)
            err = pose_error(res.pose, truth, rec.ambiguity_flags)
            rows.append([
                sid, method, f"{res.pose.x * 1e3:.6f}",
                f"{res.pose.y * 1e3:.6f}", f"{res.pose.theta:.8f}",
                f"{res.cost:.6e}", f"{err.position * 1e3:.6f}",
                "n/a" if err.theta is None else f"{err.theta:.8f}",
                f"{chamfer_sq(pts, gt_pts):.6e}"])
        LOG.info("registered %s (%d/%d, %.1fs elapsed)", sid,
                 len(rows) // 2, len(ids), time.monotonic() - t0)
    write_csv(out_path, POSE_COLUMNS, rows)
    write_resolved(config, out_path.parent, "pose")
    return 0


# -------------------------------------------------------------------- eval

EVAL_COLUMNS = ["sample_id", "split", "object_id", "contact", "l1_mm",
                "psnr_db", "ssim", "empty_l1_mm"]


def cmd_eval(ns) -> int:
    from .evalkit.metrics import image_metrics
    from .evalkit.report import aggregate_report

    config = load_config(ns.config)
    data = Path(_need(ns, "data", "--data"))
    dr_dir = Path(_need(ns, "derender", "--derender"))
    out = _need(ns, "out", "--out")

    manifest = load_manifest(data)
    payload = _load_derender(dr_dir)
    ids = payload["samples"]
    if ns.dry_run:
        return _emit_plan({
            "command": "eval", "out": str(out), "n_samples": len(ids),
            "would_write": ["metrics.csv", "report.json", "<id>.panel.png",
                            "resolved_eval.json"]})

    out_dir = _guard_dir(out, "metrics.csv", ns.force)
    d_max = payload["d_max"]
    split_of = {s["id"]: s["split"] for s in manifest["samples"]}
    object_of = {s["id"]: s["object_id"] for s in manifest["samples"]}
    rows = []
    panels_left = config["eval"]["panels"]
    for sid in ids:
        rec = load_record(data, sid, manifest)
        pred = _load_depth(dr_dir / f"{sid}.dr.tdrd")
        m = image_metrics(pred, rec.gt_contact_depth, d_max)
        empty = image_metrics(DepthImage.zeros(rec.gt_contact_depth.height,
                                               rec.gt_contact_depth.width),
                              rec.gt_contact_depth, d_max)
        rows.append([sid, split_of[sid], object_of[sid],
                     str(int(rec.contact)), f"{m.l1_mm:.6f}",
                     f"{m.psnr_db:.4f}", f"{m.ssim:.6f}",
                     f"{empty.l1_mm:.6f}"])
        if panels_left > 0 and rec.contact:
            save_panel_png(out_dir / f"{sid}.panel.png",
                           [rec.signature, rec.gt_contact_depth, pred])
            panels_left -= 1
    write_csv(out_dir / "metrics.csv", EVAL_COLUMNS, rows)

    metric_cols = ["l1_mm", "psnr_db", "ssim", "empty_l1_mm"]
    by_object = aggregate_report(EVAL_COLUMNS, rows, "object_id", metric_cols)
    overall = {}
    for col in metric_cols:
        j = EVAL_COLUMNS.index(col)
        vals = np.array([float(r[j]) for r in rows], dtype=np.float64)
        overall[col] = {"mean": float(vals.mean()), "std": float(vals.std()),
                        "n": int(len(vals)), "excluded": 0}
    report = {"n_samples": len(rows), "overall": overall,
              "by_object": by_object}
    with open(out_dir / "report.json", "w") as f:
        json.dump(report, f, sort_keys=True, indent=1)
        f.write("\n")
    LOG.info("eval: mean L1 %.3f mm over %d samples (all-empty %.3f mm)",
             overall["l1_mm"]["mean"], len(rows),
             overall["empty_l1_mm"]["mean"])
    write_resolved(config, out_dir, "eval")
    return 0


# ------------------------------------------------------------- uncertainty

def _pick_uncertainty_sample(manifest, cfg) -> str:
    if cfg["sample"] is not None:
        known = {s["id"] for s in manifest["samples"]}
        if cfg["sample"] not in known:
            raise ToolkitError("bad-config",
                               f"unknown sample {cfg['sample']!r}")
        return cfg["sample"]
    for s in manifest["samples"]:
        if (s["split"] in ("test_pose", "test_object")
                and s["object_id"] == cfg["object"] and s["contact"]):
            return s["id"]
    raise ToolkitError("bad-config",
                       f"no held-out contact sample of {cfg['object']!r}")


def _signed_theta_err(est: float, truth: float, flags):
    if flags.rot:
        return None
    sector = 2.0 * np.pi / max(1, flags.rot_symmetry_order)
    delta = wrap_angle(est - truth)
    return float((delta + sector / 2.0) % sector - sector / 2.0)


def _kde_json(curve) -> dict:
    return {"grid": curve.grid.tolist(), "density": curve.density.tolist(),
            "bandwidth": curve.bandwidth}


def cmd_uncertainty(ns) -> int:
    config = load_config(ns.config)
    seed = _seed_of(ns, config)
    data = Path(_need(ns, "data", "--data"))
    out = _need(ns, "out", "--out")
    u = config["uncertainty"]
    p = config["pose"]

    manifest = load_manifest(data)
    sid = _pick_uncertainty_sample(manifest, u)
    if ns.dry_run:
        return _emit_plan({
            "command": "uncertainty", "out": str(out), "seed": seed,
            "sample": sid, "n": u["n"], "batch": u["batch"],
            "would_write": ["uncertainty.json", "kde_*.png",
                            "resolved_uncertainty.json"]})

    ck = _load_model(_need(ns, "model", "--model"), manifest)
    out_dir = _guard_dir(out, "uncertainty.json", ns.force)
    camera = rebuild_camera(manifest)
    camera_pose = RigidPose.from_matrix(np.asarray(manifest["camera_pose"]))
    rec = load_record(data, sid, manifest)
    spec = rebuild_objects(manifest)[rec.object_id]
    truth, support_z = planar_from_world(rec.object_pose, spec.mount)
    mesh = _mounted_mesh(spec)
    flags = rec.ambiguity_flags
    b = p["bound_xy"]
    bounds = ((-b, b), (-b, b), (-np.pi, np.pi))
    # single fixed start keeps members comparable to each other
    member_cfg = RegistrationConfig(n_inits=1, n_iters=p["n_iters"],
                                    bounds=bounds, tol=p["tol"])

    t0 = time.monotonic()
    members = derender_ensemble(rec.signature, rec.reference,
                                TorchPredictor(ck.model), ck.schedule,
                                n=u["n"], seed=derive_seed(seed, 600,
                                                           int(sid)),
                                camera=camera, camera_pose=camera_pose,
                                d_max=ck.d_max, batch=u["batch"])
    LOG.info("sampled %d ensemble members in %.1fs", u["n"],
             time.monotonic() - t0)
    entries = []
    for res in members:
        pts = _thin(res.cloud.points, p["subsample"])
        if len(pts) == 0:
            entries.append(None)
            continue
        fit = register(pts, mesh, support_z, member_cfg)
        err = pose_error(fit.pose, truth, flags)
        entries.append({
            "x": fit.pose.x, "y": fit.pose.y, "theta": fit.pose.theta,
            "cost": fit.cost, "position_err_m": err.position,
            "theta_err_rad": _signed_theta_err(fit.pose.theta, truth.theta,
                                               flags)})
    LOG.info("registered %d members in %.1fs", u["n"],
             time.monotonic() - t0)
    usable = [e for e in entries if e is not None]
    if not usable:
        raise ToolkitError("empty-cloud", "every ensemble member came back "
                                          "with an empty reconstruction")

    base_pts = baseline_extract(rec.signature, rec.reference,
                                BaselineConfig(p["baseline_threshold"]),
                                camera, camera_pose).points
    baseline = None
    if len(base_pts) > 0:
        fit = register(_thin(base_pts, p["subsample"]), mesh, support_z,
                       member_cfg)
        err = pose_error(fit.pose, truth, flags)
        baseline = {"x": fit.pose.x, "y": fit.pose.y,
                    "theta": fit.pose.theta, "cost": fit.cost,
                    "position_err_m": err.position,
                    "theta_err_rad": _signed_theta_err(
                        fit.pose.theta, truth.theta, flags)}

    xs = np.array([e["x"] for e in usable]) * 1e3
    ys = np.array([e["y"] for e in usable]) * 1e3
    pos_err = np.array([e["position_err_m"] for e in usable]) * 1e3
    curves = {"x_mm": kde(xs), "y_mm": kde(ys),
              "position_err_mm": kde(pos_err)}
    theta_errs = [e["theta_err_rad"] for e in usable]
    if all(v is not None for v in theta_errs):
        curves["theta_err_rad"] = kde(np.array(theta_errs))
    for name, curve in curves.items():
        save_curve_png(out_dir / f"kde_{name}.png", curve.grid,
                       curve.density)
    spread = {"x_mm_std": float(xs.std()), "y_mm_std": float(ys.std()),
              "position_err_mm_mean": float(pos_err.mean()),
              "position_err_mm_std": float(pos_err.std())}
    payload = {
        "sample": sid, "object_id": rec.object_id, "n": u["n"],
        "seed": seed, "batch": u["batch"],
        "truth": {"x": truth.x, "y": truth.y, "theta": truth.theta},
        "members": entries, "baseline": baseline, "spread": spread,
        "kde": {k: _kde_json(v) for k, v in curves.items()},
    }
    with open(out_dir / "uncertainty.json", "w") as f:
        json.dump(payload, f, sort_keys=True, indent=1)
        f.write("\n")
    LOG.info("uncertainty on %s: position err %.3f +/- %.3f mm", sid,
             spread["position_err_mm_mean"], spread["position_err_mm_std"])
    write_resolved(config, out_dir, "uncertainty")
    return 0


# ----------------------------------------------------------------- wiring

def _add_common(sp):
    sp.add_argument("--config", help="JSON config overriding the defaults")
    sp.add_argument("--seed", type=int, default=None,
                    help="override the config seed")
    sp.add_argument("--out", help="output directory or file")
    sp.add_argument("--force", action="store_true",
                    help="overwrite existing outputs")
    sp.add_argument("--dry-run", action="store_true",
                    help="print the plan as JSON and write nothing")
    sp.add_argument("--jobs", type=int, default=None,
                    help="worker threads (default: TDR_JOBS or 1)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tdr", description="tactile de-rendering pipeline")
    sub = parser.add_subparsers(dest="command")

    sp = sub.add_parser("simulate", help="generate a contact dataset")
    _add_common(sp)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("train", help="train the depth denoiser")
    _add_common(sp)
    sp.add_argument("--data", help="dataset directory")
    sp.add_argument("--resume", help="continue training this checkpoint")
    sp.add_argument("--finetune",
                    help="start from this checkpoint's weights only")
    sp.set_defaults(func=cmd_train)

    sp = sub.add_parser("derender", help="reconstruct held-out samples")
    _add_common(sp)
    sp.add_argument("--data", help="dataset directory")
    sp.add_argument("--model", help="trained checkpoint")
    sp.set_defaults(func=cmd_derender)

    sp = sub.add_parser("pose", help="register poses on derendered samples")
    _add_common(sp)
    sp.add_argument("--data", help="dataset directory")
    sp.add_argument("--derender", help="derender output directory")
    sp.set_defaults(func=cmd_pose)

    sp = sub.add_parser("eval", help="score reconstruction quality")
    _add_common(sp)
    sp.add_argument("--data", help="dataset directory")
    sp.add_argument("--derender", help="derender output directory")
    sp.set_defaults(func=cmd_eval)

    sp = sub.add_parser("uncertainty",
                        help="pose spread of one sample via an ensemble")
    _add_common(sp)
    sp.add_argument("--data", help="dataset directory")
    sp.add_argument("--model", help="trained checkpoint")
    sp.set_defaults(func=cmd_uncertainty)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.INFO,
                        format="%(levelname)s %(message)s")
    parser = build_parser()
    ns = parser.parse_args(argv)
    if ns.command is None:
        parser.print_usage(sys.stderr)
        return 2
    try:
        return ns.func(ns)
    except ToolkitError as e:
        LOG.error("%s", e)
        print(f"error-category: {e.category}", file=sys.stderr)
        return EXIT_CODES.get(e.category, 1)
    except Exception:  # pragma: no cover - last-resort guard
        LOG.exception("unexpected failure")
        print("error-category: internal", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
