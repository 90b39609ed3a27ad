# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled kernel backend.

Mirror of ``ref.py``: every floating point expression is written with the
same operand order and association as the numpy reference, and the extension
is compiled with -ffp-contract=off, so results are bit-identical across the
two backends.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport INFINITY, fabs, sqrt

cnp.import_array()

NAME = "compiled"

cdef enum:
    STACK_CAP = 128

cdef double DET_EPS = 1e-12
cdef double BARY_EPS = 1e-10
cdef double T_EPS = 1e-12


cdef inline double _hit_t(double ox, double oy, double oz,
                          double dx, double dy, double dz,
                          double ax, double ay, double az,
                          double bx, double by, double bz,
                          double cx, double cy, double cz,
                          double t_min, double t_max) noexcept nogil:
    # Moller-Trumbore; returns hit parameter or +inf. Inclusive barycentric
    # bounds, det == 0 is a miss (matches the reference masks).
    cdef double e1x = bx - ax
    cdef double e1y = by - ay
    cdef double e1z = bz - az
    cdef double e2x = cx - ax
    cdef double e2y = cy - ay
    cdef double e2z = cz - az
    cdef double px = dy * e2z - dz * e2y
    cdef double py = dz * e2x - dx * e2z
    cdef double pz = dx * e2y - dy * e2x
    cdef double det = e1x * px + e1y * py + e1z * pz
    cdef double inv, tvx, tvy, tvz, u, qx, qy, qz, v, t
    if det == 0.0:
        return INFINITY
    inv = 1.0 / det
    tvx = ox - ax
    tvy = oy - ay
    tvz = oz - az
    u = (tvx * px + tvy * py + tvz * pz) * inv
    if u < 0.0 or u > 1.0:
        return INFINITY
    qx = tvy * e1z - tvz * e1y
    qy = tvz * e1x - tvx * e1z
    qz = tvx * e1y - tvy * e1x
    v = (dx * qx + dy * qy + dz * qz) * inv
    if v < 0.0 or u + v > 1.0:
        return INFINITY
    t = (e2x * qx + e2y * qy + e2z * qz) * inv
    if t < t_min or t > t_max:
        return INFINITY
    return t


cdef inline bint _slab(double ox, double oy, double oz,
                       double dx, double dy, double dz,
                       double bminx, double bminy, double bminz,
                       double bmaxx, double bmaxy, double bmaxz,
                       double t_min, double limit) noexcept nogil:
    cdef double tn = -INFINITY
    cdef double tf = INFINITY
    cdef double inv, t1, t2, lo, hi
    if dx == 0.0:
        if ox < bminx or ox > bmaxx:
            return False
    else:
        inv = 1.0 / dx
        t1 = (bminx - ox) * inv
        t2 = (bmaxx - ox) * inv
        if t1 < t2:
            lo = t1; hi = t2
        else:
            lo = t2; hi = t1
        if lo > tn:
            tn = lo
        if hi < tf:
            tf = hi
    if dy == 0.0:
        if oy < bminy or oy > bmaxy:
            return False
    else:
        inv = 1.0 / dy
        t1 = (bminy - oy) * inv
        t2 = (bmaxy - oy) * inv
        if t1 < t2:
            lo = t1; hi = t2
        else:
            lo = t2; hi = t1
        if lo > tn:
            tn = lo
        if hi < tf:
            tf = hi
    if dz == 0.0:
        if oz < bminz or oz > bmaxz:
            return False
    else:
        inv = 1.0 / dz
        t1 = (bminz - oz) * inv
        t2 = (bmaxz - oz) * inv
        if t1 < t2:
            lo = t1; hi = t2
        else:
            lo = t2; hi = t1
        if lo > tn:
            tn = lo
        if hi < tf:
            tf = hi
    return tn <= limit and tf >= t_min and tn <= tf


cdef inline double _pt_tri_d2(double px, double py, double pz,
                              double ax, double ay, double az,
                              double bx, double by, double bz,
                              double cx, double cy, double cz) noexcept nogil:
    # squared point/triangle distance, closest-point region ladder
    cdef double abx = bx - ax
    cdef double aby = by - ay
    cdef double abz = bz - az
    cdef double acx = cx - ax
    cdef double acy = cy - ay
    cdef double acz = cz - az
    cdef double apx = px - ax
    cdef double apy = py - ay
    cdef double apz = pz - az
    cdef double d1 = abx * apx + aby * apy + abz * apz
    cdef double d2 = acx * apx + acy * apy + acz * apz
    cdef double bpx = px - bx
    cdef double bpy = py - by
    cdef double bpz = pz - bz
    cdef double d3 = abx * bpx + aby * bpy + abz * bpz
    cdef double d4 = acx * bpx + acy * bpy + acz * bpz
    cdef double cpx = px - cx
    cdef double cpy = py - cy
    cdef double cpz = pz - cz
    cdef double d5 = abx * cpx + aby * cpy + abz * cpz
    cdef double d6 = acx * cpx + acy * cpy + acz * cpz
    cdef double vc = d1 * d4 - d3 * d2
    cdef double vb = d5 * d2 - d1 * d6
    cdef double va = d3 * d6 - d5 * d4
    cdef double w, denom, v, gx, gy, gz, qx, qy, qz
    if d1 <= 0.0 and d2 <= 0.0:
        qx = ax; qy = ay; qz = az
    elif d3 >= 0.0 and d4 <= d3:
        qx = bx; qy = by; qz = bz
    elif vc <= 0.0 and d1 >= 0.0 and d3 <= 0.0:
        w = d1 / (d1 - d3)
        qx = ax + w * abx
        qy = ay + w * aby
        qz = az + w * abz
    elif d6 >= 0.0 and d5 <= d6:
        qx = cx; qy = cy; qz = cz
    elif vb <= 0.0 and d2 >= 0.0 and d6 <= 0.0:
        w = d2 / (d2 - d6)
        qx = ax + w * acx
        qy = ay + w * acy
        qz = az + w * acz
    elif va <= 0.0 and d4 - d3 >= 0.0 and d5 - d6 >= 0.0:
        w = (d4 - d3) / ((d4 - d3) + (d5 - d6))
        qx = bx + w * (cx - bx)
        qy = by + w * (cy - by)
        qz = bz + w * (cz - bz)
    else:
        denom = 1.0 / (va + vb + vc)
        v = vb * denom
        w = vc * denom
        qx = ax + abx * v + acx * w
        qy = ay + aby * v + acy * w
        qz = az + abz * v + acz * w
    gx = px - qx
    gy = py - qy
    gz = pz - qz
    return gx * gx + gy * gy + gz * gz


cdef void _raycast_one(const double[:, ::1] V, const cnp.int32_t[:, ::1] F,
                       double ox, double oy, double oz,
                       double dx, double dy, double dz,
                       double t_min, double t_max,
                       const double[:, ::1] nmin, const double[:, ::1] nmax,
                       const cnp.int32_t[:] ca, const cnp.int32_t[:] cb,
                       const cnp.uint8_t[:] leaf, const cnp.int32_t[:] prim,
                       double* t_best, cnp.int32_t* i_best) noexcept nogil:
    cdef int stack[STACK_CAP]
    cdef int sp = 1
    cdef int node, j, tri, start, count
    cdef double limit, t
    stack[0] = 0
    while sp > 0:
        sp -= 1
        node = stack[sp]
        limit = t_max if t_max < t_best[0] else t_best[0]
        if not _slab(ox, oy, oz, dx, dy, dz,
                     nmin[node, 0], nmin[node, 1], nmin[node, 2],
                     nmax[node, 0], nmax[node, 1], nmax[node, 2],
                     t_min, limit):
            continue
        if leaf[node]:
            start = ca[node]
            count = cb[node]
            for j in range(count):
                tri = prim[start + j]
                t = _hit_t(ox, oy, oz, dx, dy, dz,
                           V[F[tri, 0], 0], V[F[tri, 0], 1], V[F[tri, 0], 2],
                           V[F[tri, 1], 0], V[F[tri, 1], 1], V[F[tri, 1], 2],
                           V[F[tri, 2], 0], V[F[tri, 2], 1], V[F[tri, 2], 2],
                           t_min, t_max)
                if t < t_best[0] or (t == t_best[0] and tri < i_best[0]):
                    t_best[0] = t
                    i_best[0] = tri
        else:
            stack[sp] = cb[node]
            sp += 1
            stack[sp] = ca[node]
            sp += 1


cdef void _closest_one(const double[:, ::1] V, const cnp.int32_t[:, ::1] F,
                       double px, double py, double pz,
                       const double[:, ::1] nmin, const double[:, ::1] nmax,
                       const cnp.int32_t[:] ca, const cnp.int32_t[:] cb,
                       const cnp.uint8_t[:] leaf, const cnp.int32_t[:] prim,
                       double* best2) noexcept nogil:
    cdef int stack[STACK_CAP]
    cdef int sp = 1
    cdef int node, j, tri, start, count, k
    cdef double d2n, lo, hi, dk, d2
    stack[0] = 0
    while sp > 0:
        sp -= 1
        node = stack[sp]
        d2n = 0.0
        for k in range(3):
            lo = nmin[node, k] - (px if k == 0 else (py if k == 1 else pz))
            hi = (px if k == 0 else (py if k == 1 else pz)) - nmax[node, k]
            if lo > 0.0:
                dk = lo
            elif hi > 0.0:
                dk = hi
            else:
                dk = 0.0
            d2n = d2n + dk * dk
        if d2n > best2[0]:
            continue
        if leaf[node]:
            start = ca[node]
            count = cb[node]
            for j in range(count):
                tri = prim[start + j]
                d2 = _pt_tri_d2(px, py, pz,
                                V[F[tri, 0], 0], V[F[tri, 0], 1], V[F[tri, 0], 2],
                                V[F[tri, 1], 0], V[F[tri, 1], 1], V[F[tri, 1], 2],
                                V[F[tri, 2], 0], V[F[tri, 2], 1], V[F[tri, 2], 2])
                if d2 < best2[0]:
                    best2[0] = d2
        else:
            stack[sp] = cb[node]
            sp += 1
            stack[sp] = ca[node]
            sp += 1


def raycast(vertices, triangles, origins, dirs, double t_min, double t_max, bvh):
    V = np.ascontiguousarray(vertices, dtype=np.float64)
    F = np.ascontiguousarray(triangles, dtype=np.int32)
    O = np.ascontiguousarray(origins, dtype=np.float64)
    D = np.ascontiguousarray(dirs, dtype=np.float64)
    cdef const double[:, ::1] Vm = V
    cdef const cnp.int32_t[:, ::1] Fm = F
    cdef const double[:, ::1] Om = O
    cdef const double[:, ::1] Dm = D
    cdef const double[:, ::1] nmin = bvh.node_min
    cdef const double[:, ::1] nmax = bvh.node_max
    cdef const cnp.int32_t[:] ca = bvh.child_a
    cdef const cnp.int32_t[:] cb = bvh.child_b
    cdef const cnp.uint8_t[:] leaf = bvh.is_leaf
    cdef const cnp.int32_t[:] prim = bvh.prim
    cdef Py_ssize_t n = O.shape[0]
    t_out = np.full(n, np.inf)
    i_out = np.full(n, -1, dtype=np.int32)
    cdef double[:] tm = t_out
    cdef cnp.int32_t[:] im = i_out
    cdef Py_ssize_t i
    with nogil:
        for i in range(n):
            _raycast_one(Vm, Fm, Om[i, 0], Om[i, 1], Om[i, 2],
                         Dm[i, 0], Dm[i, 1], Dm[i, 2], t_min, t_max,
                         nmin, nmax, ca, cb, leaf, prim, &tm[i], &im[i])
    return t_out, i_out


def raycast_brute(vertices, triangles, origins, dirs, double t_min, double t_max):
    V = np.ascontiguousarray(vertices, dtype=np.float64)
    F = np.ascontiguousarray(triangles, dtype=np.int32)
    O = np.ascontiguousarray(origins, dtype=np.float64)
    D = np.ascontiguousarray(dirs, dtype=np.float64)
    cdef const double[:, ::1] Vm = V
    cdef const cnp.int32_t[:, ::1] Fm = F
    cdef const double[:, ::1] Om = O
    cdef const double[:, ::1] Dm = D
    cdef Py_ssize_t n = O.shape[0]
    cdef Py_ssize_t m = F.shape[0]
    t_out = np.full(n, np.inf)
    i_out = np.full(n, -1, dtype=np.int32)
    cdef double[:] tm = t_out
    cdef cnp.int32_t[:] im = i_out
    cdef Py_ssize_t i, j
    cdef double t
    with nogil:
        for i in range(n):
            for j in range(m):
                t = _hit_t(Om[i, 0], Om[i, 1], Om[i, 2],
                           Dm[i, 0], Dm[i, 1], Dm[i, 2],
                           Vm[Fm[j, 0], 0], Vm[Fm[j, 0], 1], Vm[Fm[j, 0], 2],
                           Vm[Fm[j, 1], 0], Vm[Fm[j, 1], 1], Vm[Fm[j, 1], 2],
                           Vm[Fm[j, 2], 0], Vm[Fm[j, 2], 1], Vm[Fm[j, 2], 2],
                           t_min, t_max)
                if t < tm[i]:
                    tm[i] = t
                    im[i] = <cnp.int32_t> j
    return t_out, i_out


def closest_distance(vertices, triangles, queries, bvh):
    V = np.ascontiguousarray(vertices, dtype=np.float64)
    F = np.ascontiguousarray(triangles, dtype=np.int32)
    Q = np.ascontiguousarray(queries, dtype=np.float64)
    cdef const double[:, ::1] Vm = V
    cdef const cnp.int32_t[:, ::1] Fm = F
    cdef const double[:, ::1] Qm = Q
    cdef const double[:, ::1] nmin = bvh.node_min
    cdef const double[:, ::1] nmax = bvh.node_max
    cdef const cnp.int32_t[:] ca = bvh.child_a
    cdef const cnp.int32_t[:] cb = bvh.child_b
    cdef const cnp.uint8_t[:] leaf = bvh.is_leaf
    cdef const cnp.int32_t[:] prim = bvh.prim
    cdef Py_ssize_t n = Q.shape[0]
    out = np.empty(n)
    cdef double[:] om = out
    cdef Py_ssize_t i
    cdef double best2
    with nogil:
        for i in range(n):
            best2 = INFINITY
            _closest_one(Vm, Fm, Qm[i, 0], Qm[i, 1], Qm[i, 2],
                         nmin, nmax, ca, cb, leaf, prim, &best2)
            om[i] = sqrt(best2)
    return out


def closest_distance_brute(vertices, triangles, queries):
    V = np.ascontiguousarray(vertices, dtype=np.float64)
    F = np.ascontiguousarray(triangles, dtype=np.int32)
    Q = np.ascontiguousarray(queries, dtype=np.float64)
    cdef const double[:, ::1] Vm = V
    cdef const cnp.int32_t[:, ::1] Fm = F
    cdef const double[:, ::1] Qm = Q
    cdef Py_ssize_t n = Q.shape[0]
    cdef Py_ssize_t m = F.shape[0]
    out = np.empty(n)
    cdef double[:] om = out
    cdef Py_ssize_t i, j
    cdef double best2, d2
    with nogil:
        for i in range(n):
            best2 = INFINITY
            for j in range(m):
                d2 = _pt_tri_d2(Qm[i, 0], Qm[i, 1], Qm[i, 2],
                                Vm[Fm[j, 0], 0], Vm[Fm[j, 0], 1], Vm[Fm[j, 0], 2],
                                Vm[Fm[j, 1], 0], Vm[Fm[j, 1], 1], Vm[Fm[j, 1], 2],
                                Vm[Fm[j, 2], 0], Vm[Fm[j, 2], 1], Vm[Fm[j, 2], 2])
                if d2 < best2:
                    best2 = d2
            om[i] = sqrt(best2)
    return out


def crossing_counts(vertices, triangles, origins, direction):
    V = np.ascontiguousarray(vertices, dtype=np.float64)
    F = np.ascontiguousarray(triangles, dtype=np.int32)
    O = np.ascontiguousarray(origins, dtype=np.float64)
    cdef const double[:, ::1] Vm = V
    cdef const cnp.int32_t[:, ::1] Fm = F
    cdef const double[:, ::1] Om = O
    cdef double dx = direction[0]
    cdef double dy = direction[1]
    cdef double dz = direction[2]
    cdef Py_ssize_t n = O.shape[0]
    cdef Py_ssize_t m = F.shape[0]
    count = np.zeros(n, dtype=np.int64)
    degen = np.zeros(n, dtype=np.uint8)
    cdef cnp.int64_t[:] cm = count
    cdef cnp.uint8_t[:] gm = degen
    cdef Py_ssize_t i, j
    cdef double ox, oy, oz
    cdef double ax, ay, az, bx, by, bz, cx, cy, cz
    cdef double e1x, e1y, e1z, e2x, e2y, e2z
    cdef double px, py, pz, det, inv, tvx, tvy, tvz, u, qx, qy, qz, v, t
    cdef bint loose, marginal
    with nogil:
        for i in range(n):
            ox = Om[i, 0]; oy = Om[i, 1]; oz = Om[i, 2]
            for j in range(m):
                ax = Vm[Fm[j, 0], 0]; ay = Vm[Fm[j, 0], 1]; az = Vm[Fm[j, 0], 2]
                bx = Vm[Fm[j, 1], 0]; by = Vm[Fm[j, 1], 1]; bz = Vm[Fm[j, 1], 2]
                cx = Vm[Fm[j, 2], 0]; cy = Vm[Fm[j, 2], 1]; cz = Vm[Fm[j, 2], 2]
                e1x = bx - ax; e1y = by - ay; e1z = bz - az
                e2x = cx - ax; e2y = cy - ay; e2z = cz - az
                px = dy * e2z - dz * e2y
                py = dz * e2x - dx * e2z
                pz = dx * e2y - dy * e2x
                det = e1x * px + e1y * py + e1z * pz
                if fabs(det) < DET_EPS:
                    gm[i] = 1
                if det == 0.0:
                    continue
                inv = 1.0 / det
                tvx = ox - ax; tvy = oy - ay; tvz = oz - az
                u = (tvx * px + tvy * py + tvz * pz) * inv
                qx = tvy * e1z - tvz * e1y
                qy = tvz * e1x - tvx * e1z
                qz = tvx * e1y - tvy * e1x
                v = (dx * qx + dy * qy + dz * qz) * inv
                t = (e2x * qx + e2y * qy + e2z * qz) * inv
                if u >= 0.0 and u <= 1.0 and v >= 0.0 and u + v <= 1.0 and t > 0.0:
                    cm[i] = cm[i] + 1
                loose = (u > -BARY_EPS and u < 1.0 + BARY_EPS
                         and v > -BARY_EPS and u + v < 1.0 + BARY_EPS
                         and t > -T_EPS)
                marginal = loose and (u < BARY_EPS or u > 1.0 - BARY_EPS
                                      or v < BARY_EPS or u + v > 1.0 - BARY_EPS
                                      or fabs(t) < T_EPS)
                if marginal:
                    gm[i] = 1
    return count, degen.astype(bool)
