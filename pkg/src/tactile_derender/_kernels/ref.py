"""Pure-numpy kernel backend.

Reference semantics for ray casting, closest-point queries and ray-crossing
parity. The compiled backend in ``_core.pyx`` mirrors these formulas
operation for operation (same expressions, same association order, no FMA),
so both backends produce bit-identical results.
"""

from __future__ import annotations

import numpy as np

NAME = "python"

# degeneracy thresholds for parity rays, shared with the compiled backend
DET_EPS = 1e-12
BARY_EPS = 1e-10
T_EPS = 1e-12

_RAY_CHUNK = 512


def _tri_hit(ox, oy, oz, dx, dy, dz, a, b, c, t_min, t_max):
    """Moller-Trumbore on broadcastable components.

    Returns (t, hit) with t = +inf where there is no hit. Inclusive
    barycentric bounds so rays through shared edges hit both triangles;
    the caller's lowest-index tie-break keeps the result deterministic.
    """
    e1x = b[..., 0] - a[..., 0]
    e1y = b[..., 1] - a[..., 1]
    e1z = b[..., 2] - a[..., 2]
    e2x = c[..., 0] - a[..., 0]
    e2y = c[..., 1] - a[..., 1]
    e2z = c[..., 2] - a[..., 2]
    px = dy * e2z - dz * e2y
    py = dz * e2x - dx * e2z
    pz = dx * e2y - dy * e2x
    det = e1x * px + e1y * py + e1z * pz
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = 1.0 / det
        tvx = ox - a[..., 0]
        tvy = oy - a[..., 1]
        tvz = oz - a[..., 2]
        u = (tvx * px + tvy * py + tvz * pz) * inv
        qx = tvy * e1z - tvz * e1y
        qy = tvz * e1x - tvx * e1z
        qz = tvx * e1y - tvy * e1x
        v = (dx * qx + dy * qy + dz * qz) * inv
        t = (e2x * qx + e2y * qy + e2z * qz) * inv
    hit = (
        (det != 0.0)
        & (u >= 0.0)
        & (u <= 1.0)
        & (v >= 0.0)
        & (u + v <= 1.0)
        & (t >= t_min)
        & (t <= t_max)
    )
    return np.where(hit, t, np.inf), hit


def _lex_update(t_best, i_best, t_new, i_new):
    # lexicographic (t, triangle index) minimum; +inf rows never update
    upd = (t_new < t_best) | ((t_new == t_best) & (i_new < i_best) & np.isfinite(t_new))
    t_best[upd] = t_new[upd]
    i_best[upd] = i_new[upd]


def raycast_brute(vertices, triangles, origins, dirs, t_min, t_max):
    """Exhaustive per-ray per-triangle intersection.

    Returns (t, tri): t in ray parameter units (+inf = miss), tri = -1 on miss.
    """
    n = origins.shape[0]
    a = vertices[triangles[:, 0]]
    b = vertices[triangles[:, 1]]
    c = vertices[triangles[:, 2]]
    t_out = np.full(n, np.inf)
    i_out = np.full(n, -1, dtype=np.int32)
    for s in range(0, n, _RAY_CHUNK):
        e = min(s + _RAY_CHUNK, n)
        o = origins[s:e]
        d = dirs[s:e]
        t, hit = _tri_hit(
            o[:, None, 0], o[:, None, 1], o[:, None, 2],
            d[:, None, 0], d[:, None, 1], d[:, None, 2],
            a[None], b[None], c[None], t_min, t_max,
        )
        best = np.argmin(t, axis=1)           # first min = lowest triangle index
        rows = np.arange(e - s)
        tb = t[rows, best]
        t_out[s:e] = tb
        i_out[s:e] = np.where(np.isfinite(tb), best.astype(np.int32), -1)
    return t_out, i_out


def _slab_interval(o, d, bmin, bmax):
    """Ray/AABB overlap interval per ray; parallel axes handled explicitly."""
    tn = np.full(o.shape[0], -np.inf)
    tf = np.full(o.shape[0], np.inf)
    for k in range(3):
        ok, dk = o[:, k], d[:, k]
        par = dk == 0.0
        with np.errstate(divide="ignore", invalid="ignore"):
            inv = 1.0 / dk
            t1 = (bmin[k] - ok) * inv
            t2 = (bmax[k] - ok) * inv
        lo = np.minimum(t1, t2)
        hi = np.maximum(t1, t2)
        inside = (ok >= bmin[k]) & (ok <= bmax[k])
        tn = np.where(par, np.where(inside, tn, np.inf), np.maximum(tn, lo))
        tf = np.where(par, np.where(inside, tf, -np.inf), np.minimum(tf, hi))
    return tn, tf


def raycast(vertices, triangles, origins, dirs, t_min, t_max, bvh):
    """BVH-accelerated ray cast; same (t, tri) contract as raycast_brute.

    Streams all rays through the tree together, pruning each ray against
    its own current best hit. Selection is the lexicographic (t, index)
    minimum, so the result matches the brute force bit for bit.
    """
    n = origins.shape[0]
    t_best = np.full(n, np.inf)
    i_best = np.full(n, -1, dtype=np.int32)
    a = vertices[triangles[:, 0]]
    b = vertices[triangles[:, 1]]
    c = vertices[triangles[:, 2]]
    stack = [(0, np.arange(n, dtype=np.intp))]
    while stack:
        node, rays = stack.pop()
        if rays.shape[0] == 0:
            continue
        o = origins[rays]
        d = dirs[rays]
        tn, tf = _slab_interval(o, d, bvh.node_min[node], bvh.node_max[node])
        limit = np.minimum(t_max, t_best[rays])
        keep = (tn <= limit) & (tf >= t_min) & (tn <= tf)
        rays = rays[keep]
        if rays.shape[0] == 0:
            continue
        if bvh.is_leaf[node]:
            start = bvh.child_a[node]
            count = bvh.child_b[node]
            prim = bvh.prim[start:start + count]     # ascending
            o = origins[rays]
            d = dirs[rays]
            t, _ = _tri_hit(
                o[:, None, 0], o[:, None, 1], o[:, None, 2],
                d[:, None, 0], d[:, None, 1], d[:, None, 2],
                a[None, prim], b[None, prim], c[None, prim], t_min, t_max,
            )
            loc = np.argmin(t, axis=1)
            rows = np.arange(rays.shape[0])
            t_new = t[rows, loc]
            i_new = prim[loc].astype(np.int32)
            tb = t_best[rays]
            ib = i_best[rays]
            _lex_update(tb, ib, t_new, i_new)
            t_best[rays] = tb
            i_best[rays] = ib
        else:
            stack.append((int(bvh.child_b[node]), rays))
            stack.append((int(bvh.child_a[node]), rays))
    return t_best, i_best


def _point_tri_sqdist(px, py, pz, a, b, c):
    """Squared distance point/triangle (Ericson's closest-point ladder).

    Branches become a priority np.select, so each lane takes exactly the
    arithmetic of its first matching region, as the scalar code does.
    """
    abx = b[..., 0] - a[..., 0]
    aby = b[..., 1] - a[..., 1]
    abz = b[..., 2] - a[..., 2]
    acx = c[..., 0] - a[..., 0]
    acy = c[..., 1] - a[..., 1]
    acz = c[..., 2] - a[..., 2]
    apx = px - a[..., 0]
    apy = py - a[..., 1]
    apz = pz - a[..., 2]
    d1 = abx * apx + aby * apy + abz * apz
    d2 = acx * apx + acy * apy + acz * apz
    bpx = px - b[..., 0]
    bpy = py - b[..., 1]
    bpz = pz - b[..., 2]
    d3 = abx * bpx + aby * bpy + abz * bpz
    d4 = acx * bpx + acy * bpy + acz * bpz
    cpx = px - c[..., 0]
    cpy = py - c[..., 1]
    cpz = pz - c[..., 2]
    d5 = abx * cpx + aby * cpy + abz * cpz
    d6 = acx * cpx + acy * cpy + acz * cpz
    vc = d1 * d4 - d3 * d2
    vb = d5 * d2 - d1 * d6
    va = d3 * d6 - d5 * d4

    with np.errstate(divide="ignore", invalid="ignore"):
        w_ab = d1 / (d1 - d3)
        w_ac = d2 / (d2 - d6)
        w_bc = (d4 - d3) / ((d4 - d3) + (d5 - d6))
        denom = 1.0 / (va + vb + vc)
        v_f = vb * denom
        w_f = vc * denom

        conds = [
            (d1 <= 0.0) & (d2 <= 0.0),
            (d3 >= 0.0) & (d4 <= d3),
            (vc <= 0.0) & (d1 >= 0.0) & (d3 <= 0.0),
            (d6 >= 0.0) & (d5 <= d6),
            (vb <= 0.0) & (d2 >= 0.0) & (d6 <= 0.0),
            (va <= 0.0) & (d4 - d3 >= 0.0) & (d5 - d6 >= 0.0),
        ]

        def pick(vals):
            return np.select(conds, vals[:-1], default=vals[-1])

        cx_ = pick([
            a[..., 0], b[..., 0], a[..., 0] + w_ab * abx, c[..., 0],
            a[..., 0] + w_ac * acx,
            b[..., 0] + w_bc * (c[..., 0] - b[..., 0]),
            a[..., 0] + abx * v_f + acx * w_f,
        ])
        cy_ = pick([
            a[..., 1], b[..., 1], a[..., 1] + w_ab * aby, c[..., 1],
            a[..., 1] + w_ac * acy,
            b[..., 1] + w_bc * (c[..., 1] - b[..., 1]),
            a[..., 1] + aby * v_f + acy * w_f,
        ])
        cz_ = pick([
            a[..., 2], b[..., 2], a[..., 2] + w_ab * abz, c[..., 2],
            a[..., 2] + w_ac * acz,
            b[..., 2] + w_bc * (c[..., 2] - b[..., 2]),
            a[..., 2] + abz * v_f + acz * w_f,
        ])
    gx = px - cx_
    gy = py - cy_
    gz = pz - cz_
    return gx * gx + gy * gy + gz * gz


def closest_distance_brute(vertices, triangles, queries):
    """Exact min distance to the surface, exhaustive over triangles."""
    a = vertices[triangles[:, 0]]
    b = vertices[triangles[:, 1]]
    c = vertices[triangles[:, 2]]
    n = queries.shape[0]
    out = np.empty(n)
    for s in range(0, n, _RAY_CHUNK):
        e = min(s + _RAY_CHUNK, n)
        q = queries[s:e]
        d2 = _point_tri_sqdist(
            q[:, None, 0], q[:, None, 1], q[:, None, 2], a[None], b[None], c[None]
        )
        out[s:e] = np.sqrt(d2.min(axis=1))
    return out


def closest_distance(vertices, triangles, queries, bvh):
    """BVH-accelerated exact min distance to the surface."""
    n = queries.shape[0]
    best2 = np.full(n, np.inf)
    a = vertices[triangles[:, 0]]
    b = vertices[triangles[:, 1]]
    c = vertices[triangles[:, 2]]
    stack = [(0, np.arange(n, dtype=np.intp))]
    while stack:
        node, qs = stack.pop()
        if qs.shape[0] == 0:
            continue
        q = queries[qs]
        d2n = np.zeros(qs.shape[0])
        for k in range(3):
            lo = bvh.node_min[node, k] - q[:, k]
            hi = q[:, k] - bvh.node_max[node, k]
            dk = np.where(lo > 0.0, lo, np.where(hi > 0.0, hi, 0.0))
            d2n = d2n + dk * dk
        keep = d2n <= best2[qs]
        qs = qs[keep]
        if qs.shape[0] == 0:
            continue
        if bvh.is_leaf[node]:
            start = bvh.child_a[node]
            count = bvh.child_b[node]
            prim = bvh.prim[start:start + count]
            q = queries[qs]
            d2 = _point_tri_sqdist(
                q[:, None, 0], q[:, None, 1], q[:, None, 2],
                a[None, prim], b[None, prim], c[None, prim],
            )
            best2[qs] = np.minimum(best2[qs], d2.min(axis=1))
        else:
            stack.append((int(bvh.child_b[node]), qs))
            stack.append((int(bvh.child_a[node]), qs))
    return np.sqrt(best2)


def crossing_counts(vertices, triangles, origins, direction):
    """Count ray crossings (t > 0) per origin along one shared direction.

    Returns (count, degenerate); a set degenerate flag means the parity is
    untrustworthy (grazing edge, parallel plane, origin on surface) and the
    caller should retry with the next jitter direction.
    """
    a = vertices[triangles[:, 0]]
    b = vertices[triangles[:, 1]]
    c = vertices[triangles[:, 2]]
    dx, dy, dz = direction
    n = origins.shape[0]
    count = np.zeros(n, dtype=np.int64)
    degen = np.zeros(n, dtype=bool)
    for s in range(0, n, _RAY_CHUNK):
        e = min(s + _RAY_CHUNK, n)
        o = origins[s:e]
        ox, oy, oz = o[:, None, 0], o[:, None, 1], o[:, None, 2]
        e1x = b[None, :, 0] - a[None, :, 0]
        e1y = b[None, :, 1] - a[None, :, 1]
        e1z = b[None, :, 2] - a[None, :, 2]
        e2x = c[None, :, 0] - a[None, :, 0]
        e2y = c[None, :, 1] - a[None, :, 1]
        e2z = c[None, :, 2] - a[None, :, 2]
        px = dy * e2z - dz * e2y
        py = dz * e2x - dx * e2z
        pz = dx * e2y - dy * e2x
        det = e1x * px + e1y * py + e1z * pz
        with np.errstate(divide="ignore", invalid="ignore"):
            inv = 1.0 / det
            tvx = ox - a[None, :, 0]
            tvy = oy - a[None, :, 1]
            tvz = oz - a[None, :, 2]
            u = (tvx * px + tvy * py + tvz * pz) * inv
            qx = tvy * e1z - tvz * e1y
            qy = tvz * e1x - tvx * e1z
            qz = tvx * e1y - tvy * e1x
            v = (dx * qx + dy * qy + dz * qz) * inv
            t = (e2x * qx + e2y * qy + e2z * qz) * inv
        nonpar = det != 0.0
        cross = nonpar & (u >= 0.0) & (u <= 1.0) & (v >= 0.0) & (u + v <= 1.0) & (t > 0.0)
        count[s:e] = cross.sum(axis=1)
        near_par = np.abs(det) < DET_EPS
        loose = (
            nonpar
            & (u > -BARY_EPS) & (u < 1.0 + BARY_EPS)
            & (v > -BARY_EPS) & (u + v < 1.0 + BARY_EPS)
            & (t > -T_EPS)
        )
        marginal = loose & (
            (u < BARY_EPS) | (u > 1.0 - BARY_EPS)
            | (v < BARY_EPS) | (u + v > 1.0 - BARY_EPS)
            | (np.abs(t) < T_EPS)
        )
        degen[s:e] = (near_par | marginal).any(axis=1)
    return count, degen
