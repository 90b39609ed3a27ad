"""Indexed triangle meshes, watertightness audit, and ASCII OBJ input/output."""

from __future__ import annotations

from collections import Counter

import numpy as np

from ..errors import ToolkitError
from .._kernels import build_bvh
from .pose import RigidPose


class TriMesh:

    __slots__ = ("vertices", "triangles", "name", "_bvh", "_watertight")

    def __init__(self, vertices, triangles, name: str = ""):
        V = np.array(vertices, dtype=np.float64)
        F = np.array(triangles, dtype=np.int32)
        if V.ndim != 2 or V.shape[1] != 3:
            raise ValueError("vertices must be shaped (N, 3)")
        if F.ndim != 2 or F.shape[1] != 3:
            raise ValueError("triangles must be shaped (M, 3)")
        if not np.isfinite(V).all():
            raise ValueError("vertex coordinates must be finite")
        if F.size and (F.min() < 0 or F.max() >= V.shape[0]):
            raise ValueError("triangle index out of range")
        if F.size and ((F[:, 0] == F[:, 1]) | (F[:, 1] == F[:, 2]) | (F[:, 0] == F[:, 2])).any():
            raise ValueError("triangle with repeated vertex index")
        V.setflags(write=False)
        F.setflags(write=False)
        self.vertices = V
        self.triangles = F
        self.name = name
        self._bvh = None
        self._watertight = None

    @property
    def n_vertices(self) -> int:
        return self.vertices.shape[0]

    @property
    def n_triangles(self) -> int:
        return self.triangles.shape[0]

    @property
    def bvh(self):
        if self._bvh is None:
            if self.n_triangles == 0:
                raise ToolkitError("empty-mesh", "cannot build a BVH over zero triangles")
            self._bvh = build_bvh(self.vertices, self.triangles)
        return self._bvh

    @property
    def is_watertight(self) -> bool:
        """Every undirected edge is shared by exactly two triangles."""
        if self._watertight is None:
            if self.n_triangles == 0:
                self._watertight = False
            else:
                edges = Counter()
                for a, b, c in self.triangles:
                    for i, j in ((a, b), (b, c), (c, a)):
                        edges[(min(i, j), max(i, j))] += 1
                self._watertight = all(n == 2 for n in edges.values())
        return self._watertight

    def bounds(self) -> tuple:
        if self.n_vertices == 0:
            raise ToolkitError("empty-mesh", "mesh has no vertices")
        return self.vertices.min(axis=0), self.vertices.max(axis=0)

    def transform(self, pose: RigidPose) -> "TriMesh":
        return TriMesh(pose.apply(self.vertices), self.triangles, self.name)

    def save_obj(self, path) -> None:
        lines = []
        for x, y, z in self.vertices:
            lines.append(f"v {float(x)!r} {float(y)!r} {float(z)!r}")
        for a, b, c in self.triangles:
            lines.append(f"f {a + 1} {b + 1} {c + 1}")
        with open(path, "w", encoding="utf-8") as f:
            f.write("\n".join(lines) + "\n")

    @classmethod
    def load_obj(cls, path, name: str = "") -> "TriMesh":
        verts = []
        tris = []
        with open(path, "r", encoding="utf-8") as f:
            for ln, raw in enumerate(f, start=1):
                parts = raw.split()
                if not parts or parts[0].startswith("#"):
                    continue
                if parts[0] == "v":
                    if len(parts) < 4:
                        raise ToolkitError("bad-obj", f"line {ln}: vertex needs 3 coordinates")
                    verts.append([float(parts[1]), float(parts[2]), float(parts[3])])
                elif parts[0] == "f":
                    if len(parts) != 4:
                        raise ToolkitError("bad-obj", f"line {ln}: only triangle faces supported")
                    # accept f v, f v/vt, f v/vt/vn forms; vertex index is the first field
                    idx = [int(p.split("/")[0]) for p in parts[1:]]
                    if any(i < 1 for i in idx):
                        raise ToolkitError("bad-obj", f"line {ln}: negative indices unsupported")
                    tris.append([i - 1 for i in idx])
                # other line kinds (vn, vt, o, g, s, usemtl, ...) are ignored
        return cls(np.array(verts, dtype=np.float64).reshape(-1, 3),
                   np.array(tris, dtype=np.int32).reshape(-1, 3), name)

    def __repr__(self):
        return f"TriMesh({self.name or 'unnamed'}: {self.n_vertices} verts, {self.n_triangles} tris)"
