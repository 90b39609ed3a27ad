"""Procedural watertight primitives.

Each constructor produces a watertight mesh with its volume centroid at the
origin and its principal axis along +z, with outward triangle winding.
"""

from __future__ import annotations

import math

import numpy as np

from .mesh import TriMesh

KINDS = ("cylinder", "prism3", "trapezoid", "bullet", "sphere", "cross")


def _check_positive(**dims):
    for name, value in dims.items():
        if not (value > 0):
            raise ValueError(f"{name} must be positive, got {value}")


def _extrude(poly, height, name):
    """Prism over a simple CCW polygon whose area centroid is the origin.

    Caps are fans from a center vertex, so the polygon must be star-shaped
    with respect to the origin (true for every cross-section used here).
    """
    poly = np.asarray(poly, dtype=np.float64)
    n = poly.shape[0]
    hz = height / 2.0
    bottom = np.column_stack([poly, np.full(n, -hz)])
    top = np.column_stack([poly, np.full(n, hz)])
    c_bot = np.array([[0.0, 0.0, -hz]])
    c_top = np.array([[0.0, 0.0, hz]])
    verts = np.vstack([bottom, top, c_bot, c_top])
    ib, it = n + n, n + n + 1
    tris = []
    for i in range(n):
        j = (i + 1) % n
        tris.append([i, j, n + j])          # side wall, outward for CCW outline
        tris.append([i, n + j, n + i])
        tris.append([ib, j, i])             # bottom cap faces -z
        tris.append([it, n + i, n + j])     # top cap faces +z
    return TriMesh(verts, np.array(tris, dtype=np.int32), name)


def _ngon(radius, segments):
    ang = 2.0 * math.pi * np.arange(segments) / segments
    return np.column_stack([radius * np.cos(ang), radius * np.sin(ang)])


def make_cylinder(radius=0.010, height=0.030, segments=24) -> TriMesh:
    _check_positive(radius=radius, height=height)
    if segments < 3:
        raise ValueError("segments must be at least 3")
    return _extrude(_ngon(radius, segments), height, "cylinder")


def make_prism3(side=0.024, height=0.020) -> TriMesh:
    _check_positive(side=side, height=height)
    rc = side / math.sqrt(3.0)              # circumradius; vertex mean = origin
    ang = np.deg2rad([90.0, 210.0, 330.0])
    poly = np.column_stack([rc * np.cos(ang), rc * np.sin(ang)])
    return _extrude(poly, height, "prism3")


def make_trapezoid(bottom=0.024, top=0.012, depth=0.016, height=0.020) -> TriMesh:
    _check_positive(bottom=bottom, top=top, depth=depth, height=height)
    # area centroid of the trapezoid sits depth*(2*top+bottom)/(3*(top+bottom))
    # above the bottom edge; shift so it lands on the origin
    y0 = -depth * (2.0 * top + bottom) / (3.0 * (top + bottom))
    poly = np.array([
        [-bottom / 2.0, y0],
        [bottom / 2.0, y0],
        [top / 2.0, y0 + depth],
        [-top / 2.0, y0 + depth],
    ])
    return _extrude(poly, height, "trapezoid")


def make_cross(span=0.028, arm=0.009, height=0.020) -> TriMesh:
    _check_positive(span=span, arm=arm, height=height)
    if arm >= span:
        raise ValueError("arm width must be smaller than the span")
    h, g = span / 2.0, arm / 2.0
    poly = np.array([
        [h, -g], [h, g], [g, g], [g, h], [-g, h], [-g, g],
        [-h, g], [-h, -g], [-g, -g], [-g, -h], [g, -h], [g, -g],
    ])
    return _extrude(poly, height, "cross")


def _icosahedron():
    p = (1.0 + math.sqrt(5.0)) / 2.0
    verts = np.array([
        [-1, p, 0], [1, p, 0], [-1, -p, 0], [1, -p, 0],
        [0, -1, p], [0, 1, p], [0, -1, -p], [0, 1, -p],
        [p, 0, -1], [p, 0, 1], [-p, 0, -1], [-p, 0, 1],
    ], dtype=np.float64)
    tris = np.array([
        [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
        [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
        [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
        [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
    ], dtype=np.int32)
    return verts, tris


def make_sphere(radius=0.015, level=3) -> TriMesh:
    _check_positive(radius=radius)
    if level < 3:
        raise ValueError("level must be at least 3")
    verts, tris = _icosahedron()
    verts = list(verts / np.linalg.norm(verts[0]))
    for _ in range(level):
        cache = {}
        new_tris = []

        def midpoint(i, j):
            key = (min(i, j), max(i, j))
            if key not in cache:
                m = verts[i] + verts[j]
                verts.append(m / np.linalg.norm(m))
                cache[key] = len(verts) - 1
            return cache[key]

        for a, b, c in tris:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            new_tris += [[a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]]
        tris = np.array(new_tris, dtype=np.int32)
    return TriMesh(np.array(verts) * radius, tris, "sphere")


def _volume_centroid(mesh: TriMesh):
    a = mesh.vertices[mesh.triangles[:, 0]]
    b = mesh.vertices[mesh.triangles[:, 1]]
    c = mesh.vertices[mesh.triangles[:, 2]]
    vols = np.einsum("ij,ij->i", a, np.cross(b, c)) / 6.0
    cents = (a + b + c) / 4.0
    total = vols.sum()
    return (vols[:, None] * cents).sum(axis=0) / total


def make_bullet(radius=0.010, length=0.020, segments=24) -> TriMesh:
    """Cylinder body capped with a hemisphere on the +z end, flat on the other."""
    _check_positive(radius=radius, length=length)
    if segments < 3:
        raise ValueError("segments must be at least 3")
    n_arc = max(2, segments // 4)
    ang = 2.0 * math.pi * np.arange(segments) / segments
    cs, sn = np.cos(ang), np.sin(ang)

    rings = [(radius, 0.0), (radius, length)]
    for k in range(1, n_arc):
        phi = (math.pi / 2.0) * k / n_arc
        rings.append((radius * math.cos(phi), length + radius * math.sin(phi)))
    verts = []
    for r, z in rings:
        verts.append(np.column_stack([r * cs, r * sn, np.full(segments, z)]))
    verts = np.vstack(verts)
    apex = len(verts)
    base_center = apex + 1
    verts = np.vstack([verts, [[0.0, 0.0, length + radius]], [[0.0, 0.0, 0.0]]])

    tris = []
    for ring in range(len(rings) - 1):
        o0, o1 = ring * segments, (ring + 1) * segments
        for i in range(segments):
            j = (i + 1) % segments
            tris.append([o0 + i, o0 + j, o1 + j])
            tris.append([o0 + i, o1 + j, o1 + i])
    o = (len(rings) - 1) * segments
    for i in range(segments):
        j = (i + 1) % segments
        tris.append([o + i, o + j, apex])
        tris.append([base_center, j, i])
    mesh = TriMesh(verts, np.array(tris, dtype=np.int32), "bullet")
    # the hemisphere makes the solid top-heavy; recenter on the exact volume
    # centroid of the tessellated shape
    from .pose import RigidPose
    return mesh.transform(RigidPose(translation=-_volume_centroid(mesh)))


_FACTORY = {
    "cylinder": make_cylinder,
    "prism3": make_prism3,
    "trapezoid": make_trapezoid,
    "bullet": make_bullet,
    "sphere": make_sphere,
    "cross": make_cross,
}


def make_primitive(kind: str, **params) -> TriMesh:
    if kind not in _FACTORY:
        raise ValueError(f"unknown primitive kind {kind!r}, expected one of {KINDS}")
    return _FACTORY[kind](**params)
