"""Signed distance queries against watertight triangle meshes.

Magnitude is the exact minimum distance to the surface; the sign comes from
ray-crossing parity (odd = inside). Parity rays use a fixed direction table:
when a ray grazes an edge, runs parallel to a face, or starts on the surface,
the crossing kernel flags it degenerate and the next table entry is tried.
"""

from __future__ import annotations

import numpy as np

from ..errors import ToolkitError
from .. import _kernels
from .mesh import TriMesh

# fixed unit directions, deliberately skew to every coordinate plane so
# axis-aligned geometry cannot keep a whole table entry degenerate
_PARITY_DIRS = (
    (0.717494308785187, -0.07959851576415287, 0.6920014401350698),
    (0.12312351478374094, -0.4191741507514404, -0.8995185553667621),
    (0.5922183230550827, -0.07394786143090207, -0.8023772003413494),
    (-0.8963341877082285, 0.1107833381983853, 0.4293158230522749),
    (-0.15987326917477931, 0.9853592596003828, -0.05922556308853502),
    (-0.7314720112726284, 0.1376080652744083, -0.6678418353893457),
    (0.17458694295958166, 0.9801192884244515, 0.09426335346450739),
    (0.7707115356857905, -0.24298945361086333, 0.5890329822639344),
)

_ON_SURFACE = 1e-12


def _inside_mask(mesh: TriMesh, points: np.ndarray) -> np.ndarray:
    inside = np.zeros(points.shape[0], dtype=bool)
    unresolved = np.arange(points.shape[0])
    for d in _PARITY_DIRS:
        counts, degen = _kernels.crossing_counts(
            mesh.vertices, mesh.triangles, points[unresolved], np.asarray(d))
        ok = ~degen
        inside[unresolved[ok]] = (counts[ok] % 2) == 1
        unresolved = unresolved[degen]
        if unresolved.size == 0:
            break
    else:
        raise ToolkitError(
            "sdf-degenerate",
            f"{unresolved.size} query point(s) hit degenerate crossings for every "
            "parity direction")
    return inside


def signed_distance(mesh: TriMesh, points, use_bvh: bool = True):
    """Signed distance from one point (3,) or many (N, 3) to the mesh surface.

    Negative inside, positive outside. Points within 1e-12 of the surface are
    reported positive without a parity test. Raises "open-mesh" when the mesh
    fails the watertightness audit, since parity is meaningless there.
    """
    q = np.asarray(points, dtype=np.float64)
    single = q.shape == (3,)
    q = q.reshape(-1, 3)
    if mesh.n_triangles == 0:
        raise ToolkitError("empty-mesh", "signed distance needs a non-empty mesh")
    if not mesh.is_watertight:
        raise ToolkitError("open-mesh", "signed distance requires a watertight mesh")
    if use_bvh:
        d = _kernels.closest_distance(mesh.vertices, mesh.triangles, q, mesh.bvh)
    else:
        d = _kernels.closest_distance_brute(mesh.vertices, mesh.triangles, q)
    off_surface = d > _ON_SURFACE
    signs = np.ones(q.shape[0])
    if off_surface.any():
        sub = np.flatnonzero(off_surface)
        inside = _inside_mask(mesh, q[sub])
        signs[sub[inside]] = -1.0
    out = d * signs
    return float(out[0]) if single else out
