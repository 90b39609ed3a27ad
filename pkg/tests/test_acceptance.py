"""Acceptance gate: six criteria, one verdict line each.

Criteria 1-2 are fast oracle suites over the geometry and diffusion math.
Criteria 3-6 drive the installed CLI end to end on a 2000-sample synthetic
dataset (simulate, train, derender, pose, eval, uncertainty) and take hours;
criterion 6 repeats the whole pipeline to prove byte-level reproducibility.
Each test prints "[ACCEPTANCE] criterion N <label>: PASS|FAIL" before its
assertions so the verdict survives in any log.
"""

import hashlib
import json
import math
import time
from pathlib import Path

import numpy as np
import pytest
import torch

from tactile_derender.contact import (PoseDraw, SimNoiseConfig, load_manifest,
                                      load_record, rebuild_camera,
                                      rebuild_objects, place_object,
                                      simulate_sample)
from tactile_derender.diffusion.process import (ddpm_sample, forward_diffuse,
                                                noise_loss)
from tactile_derender.diffusion.schedule import BETA_MAX, cosine_schedule
from tactile_derender.evalkit.report import read_csv
from tactile_derender.geometry import render_depth, signed_distance
from tactile_derender.geometry.cloud import project_depth
from tactile_derender.geometry.mesh import TriMesh
from tactile_derender.geometry.pose import RigidPose
from tactile_derender.registration import (BaselineConfig, RegistrationConfig,
                                           baseline_extract, chamfer_sq,
                                           planar_from_world, pose_error,
                                           register)
from tactile_derender.scene import (stock_camera, stock_objects, stock_sensor)
from tactile_derender.seeding import derive_seed

from conftest import DeltaOracle, random_soup, run_cli

ACCEPT_SEED = 0
EPOCHS = 160
POSITION_TOL = 1e-3      # registration recovery: 1 mm
THETA_TOL = 0.02         # and 0.02 rad
L1_LIMIT_MM = 5.0


def verdict(n: int, label: str, ok: bool, detail: str = "") -> bool:
    word = "PASS" if ok else "FAIL"
    print(f"[ACCEPTANCE] criterion {n} {label}: {word}", flush=True)
    if detail:
        print(f"    {detail}", flush=True)
    return ok


def tree_digest(root: Path) -> dict:
    out = {}
    for p in sorted(root.rglob("*")):
        if p.is_file():
            out[str(p.relative_to(root))] = hashlib.sha256(
                p.read_bytes()).hexdigest()
    return out


def mounted_mesh(spec) -> TriMesh:
    verts = spec.mount.apply(spec.mesh.vertices)
    return TriMesh(verts, spec.mesh.triangles, name=spec.object_id)


def thin(points: np.ndarray, cap: int = 256) -> np.ndarray:
    if len(points) <= cap:
        return points
    return points[::-(-len(points) // cap)]


# ------------------------------------------------------------ criterion 1

def test_criterion_1_geometry_oracles():
    t0 = time.monotonic()
    rng = np.random.default_rng(derive_seed(ACCEPT_SEED, 1001))
    cam = stock_camera()

    renders_equal = True
    for k in range(20):
        soup = random_soup(rng, 40 + 23 * k, scale=0.03)
        mesh = TriMesh(soup.vertices + np.array([0.0, 0.0, 0.1]),
                       soup.triangles)
        fast = render_depth(mesh, cam, use_bvh=True)
        slow = render_depth(mesh, cam, use_bvh=False)
        renders_equal &= bool(np.array_equal(fast.data, slow.data))

    sdf_gap = 0.0
    for spec in stock_objects():
        mesh = spec.mesh
        lo, hi = mesh.bounds()
        pts = rng.uniform(np.asarray(lo) - 0.01, np.asarray(hi) + 0.01,
                          (500, 3))
        a = signed_distance(mesh, pts, use_bvh=True)
        b = signed_distance(mesh, pts, use_bvh=False)
        sdf_gap = max(sdf_gap, float(np.abs(a - b).max()))

    src = rng.normal(scale=0.02, size=(1500, 3))
    dst = rng.normal(scale=0.02, size=(1700, 3))
    brute = float(((src[:, None, :] - dst[None, :, :]) ** 2)
                  .sum(-1).min(1).mean())
    chamfer_gap = abs(chamfer_sq(src, dst) - brute)

    elapsed = time.monotonic() - t0
    ok = (renders_equal and sdf_gap <= 1e-9 and chamfer_gap <= 1e-12
          and elapsed < 60.0)
    verdict(1, "geometry oracle suite", ok,
            f"renders_equal={renders_equal} sdf_gap={sdf_gap:.3e} "
            f"chamfer_gap={chamfer_gap:.3e} elapsed={elapsed:.1f}s")
    assert renders_equal
    assert sdf_gap <= 1e-9
    assert chamfer_gap <= 1e-12
    assert elapsed < 60.0


# ------------------------------------------------------------ criterion 2

class _Float64Net(torch.nn.Module):
    """Tiny smooth predictor for finite-difference gradient checks."""

    def __init__(self):
        super().__init__()
        self.conv = torch.nn.Conv2d(2, 1, 3, padding=1).double()
        with torch.no_grad():
            self.conv.bias.fill_(4.0)  # keep |pred - eps| off the l1 kink

    def forward(self, x, cond, t):
        scale = 1.0 + 0.01 * t.double().view(-1, 1, 1, 1)
        return self.conv(torch.cat([x, cond], dim=1)) * scale


def test_criterion_2_diffusion_math():
    sch = cosine_schedule(250)

    alpha_gap = float(np.abs(sch.alpha - (1.0 - sch.beta)).max())
    abar_gap = float(np.abs(sch.alpha_bar - np.cumprod(sch.alpha)).max())
    sched_ok = (alpha_gap <= 1e-12 and abar_gap <= 1e-12
                and bool(np.all(np.diff(sch.alpha_bar) < 0))
                and bool(np.all((sch.beta > 0) & (sch.beta <= BETA_MAX))))

    rng = np.random.default_rng(derive_seed(ACCEPT_SEED, 2001))
    n = 20000
    x0 = np.full(n, 0.7)
    mc_ok = True
    for t in (1, 125, 250):
        eps = rng.standard_normal(n)
        xt = forward_diffuse(x0, eps, t, sch)
        abar = float(sch.alpha_bar_at(np.array([t]))[0])
        mean_se = math.sqrt((1.0 - abar) / n)
        var_se = (1.0 - abar) * math.sqrt(2.0 / (n - 1))
        mc_ok &= abs(float(xt.mean()) - math.sqrt(abar) * 0.7) <= 5 * mean_se
        mc_ok &= abs(float(xt.var(ddof=1)) - (1.0 - abar)) <= 5 * var_se

    torch.manual_seed(derive_seed(ACCEPT_SEED, 2002))
    net = _Float64Net()
    x = torch.randn(3, 1, 6, 6, dtype=torch.float64)
    cond = torch.randn(3, 1, 6, 6, dtype=torch.float64)
    eps = torch.randn(3, 1, 6, 6, dtype=torch.float64)
    t = torch.tensor([5, 100, 250])
    grad_ok = True
    for kind in ("l1", "l2"):
        net.zero_grad()
        noise_loss(net(x, cond, t), eps, kind).backward()
        for p, g in [(net.conv.weight, net.conv.weight.grad),
                     (net.conv.bias, net.conv.bias.grad)]:
            flat = p.detach().view(-1)
            for idx in (0, flat.numel() // 2, flat.numel() - 1):
                h = 1e-6
                with torch.no_grad():
                    flat[idx] += h
                    hi = float(noise_loss(net(x, cond, t), eps, kind))
                    flat[idx] -= 2 * h
                    lo = float(noise_loss(net(x, cond, t), eps, kind))
                    flat[idx] += h
                fd = (hi - lo) / (2 * h)
                grad_ok &= abs(float(g.view(-1)[idx]) - fd) <= 1e-4 * abs(fd)

    yy, xx = np.mgrid[0:16, 0:16]
    target = 0.8 * np.cos(yy / 3.0) * np.sin(xx / 2.5)
    sample = ddpm_sample(DeltaOracle(target[None], sch), np.zeros((16, 16)),
                         sch, np.random.default_rng(derive_seed(0, 2003)))
    rms = float(np.sqrt(np.mean((sample - target[None]) ** 2)))
    delta_ok = rms <= 0.05

    ok = sched_ok and mc_ok and grad_ok and delta_ok
    verdict(2, "diffusion math suite", ok,
            f"sched_ok={sched_ok} mc_ok={mc_ok} grad_ok={grad_ok} "
            f"delta_rms={rms:.2e}")
    assert sched_ok
    assert mc_ok
    assert grad_ok
    assert delta_ok


# --------------------------------------------------- shared pipeline runs

def _run_pipeline(root: Path, cfg: Path) -> None:
    data, model, dr = root / "data", root / "model.tdck", root / "dr"
    steps = [
        ["simulate", "--config", cfg, "--seed", ACCEPT_SEED, "--out", data],
        ["train", "--config", cfg, "--seed", ACCEPT_SEED, "--data", data,
         "--out", model],
        ["derender", "--config", cfg, "--seed", ACCEPT_SEED, "--data", data,
         "--model", model, "--out", dr],
        ["pose", "--config", cfg, "--seed", ACCEPT_SEED, "--data", data,
         "--derender", dr, "--out", root / "pose.csv"],
        ["eval", "--config", cfg, "--seed", ACCEPT_SEED, "--data", data,
         "--derender", dr, "--out", root / "eval"],
        ["uncertainty", "--config", cfg, "--seed", ACCEPT_SEED,
         "--data", data, "--model", model, "--out", root / "unc"],
    ]
    for argv in steps:
        t0 = time.monotonic()
        rc = run_cli(argv)
        assert rc == 0, f"{argv[0]} exited {rc}"
        print(f"[acceptance] {root.name}/{argv[0]}: "
              f"{time.monotonic() - t0:.0f}s", flush=True)


@pytest.fixture(scope="module")
def accept_base(tmp_path_factory):
    base = tmp_path_factory.mktemp("accept")
    cfg = base / "config.json"
    cfg.write_text(json.dumps({"train": {"epochs": EPOCHS}}))
    return base, cfg


@pytest.fixture(scope="module")
def run_a(accept_base):
    base, cfg = accept_base
    root = base / "a"
    root.mkdir()
    _run_pipeline(root, cfg)
    return root


@pytest.fixture(scope="module")
def run_b(accept_base):
    base, cfg = accept_base
    root = base / "b"
    root.mkdir()
    _run_pipeline(root, cfg)
    return root


# ------------------------------------------------------------ criterion 3

def test_criterion_3_end_to_end_reconstruction(run_a):
    report = json.loads((run_a / "eval" / "report.json").read_text())
    l1 = report["overall"]["l1_mm"]["mean"]
    empty = report["overall"]["empty_l1_mm"]["mean"]
    ok = l1 <= L1_LIMIT_MM and l1 < empty
    verdict(3, "held-out reconstruction", ok,
            f"mean_l1={l1:.3f}mm (limit {L1_LIMIT_MM}) "
            f"all_empty_baseline={empty:.3f}mm n={report['n_samples']}")
    assert l1 <= L1_LIMIT_MM
    assert l1 < empty


# ------------------------------------------------------------ criterion 4

def _method_means(rows):
    pos, theta = {}, {}
    for r in rows:
        method = r[1]
        if r[6] not in ("", "n/a"):
            pos.setdefault(method, []).append(float(r[6]))
        if r[7] not in ("", "n/a"):
            theta.setdefault(method, []).append(float(r[7]))
    return ({m: float(np.mean(v)) for m, v in pos.items()},
            {m: float(np.mean(v)) for m, v in theta.items()})


def test_criterion_4_pose_ordering_and_recovery(run_a):
    header, rows = read_csv(run_a / "pose.csv")
    pos, theta = _method_means(rows)
    ordering_ok = (pos["ours"] < pos["baseline"]
                   and theta["ours"] < theta["baseline"])

    sensor = stock_sensor()
    camera_pose = RigidPose.identity()
    objects = stock_objects()
    quiet = SimNoiseConfig(0.0, 0.0, seed=0)
    rng = np.random.default_rng(derive_seed(ACCEPT_SEED, 4001))
    hits = 0
    for k in range(50):
        spec = objects[k % len(objects)]
        draw = PoseDraw(x=float(rng.uniform(-0.008, 0.008)),
                        y=float(rng.uniform(-0.008, 0.008)),
                        theta=float(rng.uniform(-np.pi, np.pi)),
                        penetration=float(rng.uniform(0.0015, 0.005)),
                        negative=False)
        pose = place_object(spec, draw, sensor, camera_pose)
        rec = simulate_sample(spec.mesh, pose, sensor, camera_pose, quiet,
                              object_id=spec.object_id, flags=spec.flags)
        truth, support_z = planar_from_world(rec.object_pose, spec.mount)
        pts = thin(project_depth(rec.gt_contact_depth, sensor.camera,
                                 camera_pose).points)
        rcfg = RegistrationConfig(seed=derive_seed(ACCEPT_SEED, 4002, k))
        res = register(pts, mounted_mesh(spec), support_z, rcfg)
        err = pose_error(res.pose, truth, spec.flags)
        if err.position <= POSITION_TOL and (err.theta is None
                                             or err.theta <= THETA_TOL):
            hits += 1
    recovery_ok = hits >= 45

    ok = ordering_ok and recovery_ok
    verdict(4, "pose ordering and recovery", ok,
            f"pos ours={pos['ours']:.3f}mm baseline={pos['baseline']:.3f}mm "
            f"theta ours={theta['ours']:.4f}rad "
            f"baseline={theta['baseline']:.4f}rad recovery={hits}/50")
    assert ordering_ok
    assert recovery_ok


# ------------------------------------------------------------ criterion 5

def test_criterion_5_uncertainty(run_a):
    payload = json.loads((run_a / "unc" / "uncertainty.json").read_text())
    n_ok = payload["n"] == 50 and len(payload["members"]) == 50
    kde_ok = True
    for key in ("x_mm", "y_mm", "position_err_mm"):
        curve = payload["kde"][key]
        mass = float(np.trapezoid(np.asarray(curve["density"]),
                                  np.asarray(curve["grid"])))
        kde_ok &= 0.98 <= mass <= 1.02
    spread_ok = bool(np.isfinite(payload["spread"]["position_err_mm_std"]))

    manifest = load_manifest(run_a / "data")
    rec = load_record(run_a / "data", payload["sample"], manifest)
    camera = rebuild_camera(manifest)
    camera_pose = RigidPose.from_matrix(np.asarray(manifest["camera_pose"]))
    spec = rebuild_objects(manifest)[rec.object_id]
    truth, support_z = planar_from_world(rec.object_pose, spec.mount)
    reruns = set()
    for _ in range(5):
        pts = thin(baseline_extract(rec.signature, rec.reference,
                                    BaselineConfig(), camera,
                                    camera_pose).points)
        rcfg = RegistrationConfig(seed=derive_seed(ACCEPT_SEED, 5001))
        res = register(pts, mounted_mesh(spec), support_z, rcfg)
        reruns.add((res.pose.x, res.pose.y, res.pose.theta, res.cost))
    baseline_ok = len(reruns) == 1

    ok = n_ok and kde_ok and spread_ok and baseline_ok
    verdict(5, "ensemble uncertainty", ok,
            f"n_ok={n_ok} kde_ok={kde_ok} spread_ok={spread_ok} "
            f"baseline_single_point={baseline_ok}")
    assert n_ok
    assert kde_ok
    assert spread_ok
    assert baseline_ok


# ------------------------------------------------------------ criterion 6

def test_criterion_6_determinism(run_a, run_b):
    a = tree_digest(run_a)
    b = tree_digest(run_b)
    same_names = set(a) == set(b)
    diffs = [k for k in a if same_names and a[k] != b[k]]
    ok = same_names and not diffs and len(a) > 4 * 2000
    verdict(6, "byte-level reproducibility", ok,
            f"files={len(a)} mismatched={len(diffs) if same_names else 'n/a'}")
    assert same_names
    assert diffs == []
    assert len(a) > 4 * 2000
