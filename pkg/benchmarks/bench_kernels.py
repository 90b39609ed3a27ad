"""Timing comparison of the compiled and pure-python geometry kernels.

Runs the two hot kernels (BVH raycast, BVH closest-point distance) under
each importable backend on a stock-sized workload and prints a table with
the speedup.  Results are checked to agree bitwise across backends before
any timing is reported.

Usage: python benchmarks/bench_kernels.py [--rays N] [--queries N]
"""

import argparse
import time

import numpy as np

from tactile_derender import _kernels
from tactile_derender.contact.membrane import make_bubble_membrane
from tactile_derender.geometry.camera import PinholeCamera
from tactile_derender.scene import CAMERA, MEMBRANE


def _workload(n_rays: int, n_queries: int):
    mesh = make_bubble_membrane(MEMBRANE["radius"], MEMBRANE["thickness"],
                                MEMBRANE["dome_height"],
                                MEMBRANE["tessellation"])
    verts = mesh.vertices + np.array([0.0, 0.0, 0.10])
    camera = PinholeCamera(**CAMERA)
    dirs = camera.ray_dirs().reshape(-1, 3)
    reps = -(-n_rays // len(dirs))
    dirs = np.tile(dirs, (reps, 1))[:n_rays]
    origins = np.zeros_like(dirs)
    rng = np.random.default_rng(7)
    queries = rng.uniform([-0.05, -0.05, 0.08], [0.05, 0.05, 0.13],
                          (n_queries, 3))
    return verts, np.ascontiguousarray(mesh.triangles), origins, dirs, queries


def _time(fn, repeats: int = 5) -> float:
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main() -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("--rays", type=int, default=4096)
    ap.add_argument("--queries", type=int, default=4096)
    ap.add_argument("--repeats", type=int, default=5)
    ns = ap.parse_args()

    verts, tris, origins, dirs, queries = _workload(ns.rays, ns.queries)
    bvh = _kernels.build_bvh(verts, tris)
    backends = _kernels.backends()
    print(f"backends: {sorted(backends)} (active: {_kernels.get_backend()})")
    print(f"workload: {len(dirs)} rays, {len(queries)} queries, "
          f"{len(tris)} triangles")

    outputs = {}
    for name, mod in sorted(backends.items()):
        hits = mod.raycast(verts, tris, origins, dirs, 1e-6, 1.0, bvh)
        dists = mod.closest_distance(verts, tris, queries, bvh)
        outputs[name] = (np.asarray(hits), np.asarray(dists))
    names = sorted(outputs)
    for other in names[1:]:
        for a, b in zip(outputs[names[0]], outputs[other]):
            if not np.array_equal(a, b):
                raise SystemExit(f"backend outputs differ: {names[0]} vs "
                                 f"{other}")
    print("cross-backend agreement: bitwise OK")

    rows = []
    for name, mod in sorted(backends.items()):
        t_ray = _time(lambda: mod.raycast(verts, tris, origins, dirs, 1e-6,
                                          1.0, bvh), ns.repeats)
        t_cd = _time(lambda: mod.closest_distance(verts, tris, queries, bvh),
                     ns.repeats)
        rows.append((name, t_ray, t_cd))
    base = {n: (tr, tc) for n, tr, tc in rows}
    ref_ray, ref_cd = base.get("python", rows[0][1:])
    print(f"{'backend':<10} {'raycast':>12} {'closest':>12} "
          f"{'speedup(ray)':>13} {'speedup(cd)':>12}")
    for name, t_ray, t_cd in rows:
        print(f"{name:<10} {t_ray * 1e3:>10.2f}ms {t_cd * 1e3:>10.2f}ms "
              f"{ref_ray / t_ray:>12.1f}x {ref_cd / t_cd:>11.1f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
