"""Bubble-membrane sensor geometry.

The membrane lives in a canonical frame: its mounting plane is z=0 and the
dome bulges toward +z with the apex at z=dome_height.  The camera is assumed
to sit on the -z side looking up through the (transparent) body, so the
surface an object touches is the spherical cap farthest from the camera.

The outer surface is the cap of the sphere through the rim circle
(radius `radius` at z=0) and the apex: its radius is
R = (radius^2 + dome_height^2) / (2 * dome_height).  The membrane body is the
shell between that sphere and the concentric sphere of radius R - thickness,
clipped to z >= 0 and closed across the mounting plane.
"""

from dataclasses import dataclass

import numpy as np

from ..errors import ToolkitError
from ..geometry.mesh import TriMesh


def _sphere_radius(radius: float, dome_height: float) -> float:
    return (radius * radius + dome_height * dome_height) / (2.0 * dome_height)


def _check_params(radius: float, thickness: float, dome_height: float) -> None:
    if not (radius > 0.0 and np.isfinite(radius)):
        raise ToolkitError("bad-membrane", f"radius must be positive, got {radius}")
    if not (thickness > 0.0 and np.isfinite(thickness)):
        raise ToolkitError("bad-membrane", f"thickness must be positive, got {thickness}")
    if not (dome_height >= 0.0 and np.isfinite(dome_height)):
        raise ToolkitError("bad-membrane", f"dome height must be >= 0, got {dome_height}")
    if dome_height > radius:
        raise ToolkitError(
            "bad-membrane",
            f"dome height {dome_height} exceeds rim radius {radius}; "
            "the dome cannot be taller than a hemisphere of its rim",
        )


def _azimuths(segments: int) -> np.ndarray:
    # half-segment offset keeps meridian seams off the exact diagonal and
    # axis-aligned ray families a symmetric pixel grid produces
    return 2.0 * np.pi * (np.arange(segments) + 0.5) / segments


def _cap_grid(sphere_r: float, center_z: float, phi_max: float, rings: int,
              segments: int, rim_r: float):
    """Vertices of a spherical cap: apex plus `rings` latitude rings.

    The last ring is snapped exactly onto z=0 at radius rim_r so shared rim
    vertices are bit-identical across the pieces stitched to them.
    """
    theta = _azimuths(segments)
    cos_t, sin_t = np.cos(theta), np.sin(theta)
    verts = [np.array([[0.0, 0.0, center_z + sphere_r]])]
    for k in range(1, rings + 1):
        if k == rings:
            r, z = rim_r, 0.0
        else:
            phi = phi_max * k / rings
            r = sphere_r * np.sin(phi)
            z = center_z + sphere_r * np.cos(phi)
        ring = np.column_stack((r * cos_t, r * sin_t, np.full(segments, z)))
        verts.append(ring)
    return np.concatenate(verts, axis=0)


def _cap_tris(rings: int, segments: int, base: int):
    """Triangles of a cap with outward (away from sphere center) normals.

    Vertex layout per _cap_grid: apex at `base`, ring k occupying
    base + 1 + (k-1)*segments ... + segments - 1.
    """
    s = segments
    tris = []
    ring1 = base + 1
    for j in range(s):
        jn = (j + 1) % s
        tris.append((base, ring1 + j, ring1 + jn))
    for k in range(1, rings):
        up = base + 1 + (k - 1) * s
        lo = up + s
        for j in range(s):
            jn = (j + 1) % s
            tris.append((up + jn, up + j, lo + j))
            tris.append((up + jn, lo + j, lo + jn))
    return tris


def _flip(tris):
    return [(a, c, b) for (a, b, c) in tris]


def _ring_count(segments: int, phi_max: float) -> int:
    return max(2, int(round(segments * phi_max / np.pi)))


def make_bubble_membrane(radius: float, thickness: float, dome_height: float,
                         tessellation: int = 48) -> TriMesh:
    """Watertight mesh of the membrane body.

    tessellation sets the segment count around the axis; latitude ring counts
    are derived from it.  dome_height == 0 degenerates to a flat slab of the
    given thickness below z=0.  dome_height > radius is rejected.
    """
    _check_params(radius, thickness, dome_height)
    s = int(tessellation)
    if s < 6:
        raise ToolkitError("bad-membrane", f"tessellation must be >= 6, got {tessellation}")

    if dome_height == 0.0:
        return _slab(radius, thickness, s, "membrane")

    R = _sphere_radius(radius, dome_height)
    cz = dome_height - R
    phi_out = np.arcsin(min(1.0, radius / R))
    k_out = _ring_count(s, phi_out)
    verts_o = _cap_grid(R, cz, phi_out, k_out, s, radius)
    tris = _cap_tris(k_out, s, 0)
    rim_o = 1 + (k_out - 1) * s  # first vertex of the outer rim ring

    if thickness >= dome_height:
        # inner sphere never rises above the mounting plane: close with a disc
        base = verts_o.shape[0]
        verts = np.concatenate([verts_o, np.zeros((1, 3))], axis=0)
        for j in range(s):
            jn = (j + 1) % s
            tris.append((base, rim_o + jn, rim_o + j))
    else:
        Ri = R - thickness
        rim_i_r = float(np.sqrt(Ri * Ri - cz * cz))
        phi_in = np.arccos(min(1.0, -cz / Ri))
        k_in = max(2, int(round(k_out * phi_in / phi_out)))
        base = verts_o.shape[0]
        verts_i = _cap_grid(Ri, cz, phi_in, k_in, s, rim_i_r)
        verts = np.concatenate([verts_o, verts_i], axis=0)
        tris += _flip(_cap_tris(k_in, s, base))
        rim_i = base + 1 + (k_in - 1) * s
        for j in range(s):
            jn = (j + 1) % s
            tris.append((rim_o + j, rim_i + jn, rim_o + jn))
            tris.append((rim_o + j, rim_i + j, rim_i + jn))

    mesh = TriMesh(verts, np.asarray(tris, dtype=np.int32), name="membrane")
    return mesh


def _slab(radius: float, thickness: float, s: int, name: str) -> TriMesh:
    theta = _azimuths(s)
    ring = np.column_stack((radius * np.cos(theta), radius * np.sin(theta),
                            np.zeros(s)))
    top_c = np.array([[0.0, 0.0, 0.0]])
    bot_c = np.array([[0.0, 0.0, -thickness]])
    bot_ring = ring + np.array([0.0, 0.0, -thickness])
    verts = np.concatenate([top_c, ring, bot_c, bot_ring], axis=0)
    tris = []
    bc = 1 + s
    br = bc + 1
    for j in range(s):
        jn = (j + 1) % s
        tris.append((0, 1 + j, 1 + jn))            # top disc, +z
        tris.append((1 + jn, 1 + j, br + j))       # wall, outward
        tris.append((1 + jn, br + j, br + jn))
        tris.append((bc, br + jn, br + j))         # bottom disc, -z
    return TriMesh(verts, np.asarray(tris, dtype=np.int32), name=name)


def membrane_visible_surface(radius: float, thickness: float, dome_height: float,
                             tessellation: int = 48) -> TriMesh:
    """Open mesh of just the touchable outer surface, for depth rendering."""
    _check_params(radius, thickness, dome_height)
    s = int(tessellation)
    if s < 6:
        raise ToolkitError("bad-membrane", f"tessellation must be >= 6, got {tessellation}")
    if dome_height == 0.0:
        theta = _azimuths(s)
        ring = np.column_stack((radius * np.cos(theta), radius * np.sin(theta),
                                np.zeros(s)))
        verts = np.concatenate([np.zeros((1, 3)), ring], axis=0)
        tris = [(0, 1 + j, 1 + (j + 1) % s) for j in range(s)]
        return TriMesh(verts, np.asarray(tris, dtype=np.int32), name="membrane-surface")
    R = _sphere_radius(radius, dome_height)
    cz = dome_height - R
    phi_out = np.arcsin(min(1.0, radius / R))
    k_out = _ring_count(s, phi_out)
    verts = _cap_grid(R, cz, phi_out, k_out, s, radius)
    tris = _cap_tris(k_out, s, 0)
    return TriMesh(verts, np.asarray(tris, dtype=np.int32), name="membrane-surface")


def membrane_surface_height(radius: float, dome_height: float, x, y):
    """Exact height z of the outer surface above canonical (x, y).

    Raises on queries outside the rim circle.  Accepts scalars or arrays.
    """
    if dome_height < 0 or dome_height > radius:
        raise ToolkitError("bad-membrane", "invalid dome height")
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    r2 = x * x + y * y
    if np.any(r2 > radius * radius * (1.0 + 1e-12)):
        raise ToolkitError("bad-membrane",
                           "surface height queried outside the rim circle")
    if dome_height == 0.0:
        z = np.zeros_like(r2)
    else:
        R = _sphere_radius(radius, dome_height)
        z = (dome_height - R) + np.sqrt(np.maximum(R * R - r2, 0.0))
    return float(z) if z.ndim == 0 else z


@dataclass(frozen=True)
class MembraneParams:
    """Build parameters of a bubble membrane, kept for manifests."""

    radius: float
    thickness: float
    dome_height: float
    tessellation: int = 48

    def body(self) -> TriMesh:
        return make_bubble_membrane(self.radius, self.thickness,
                                    self.dome_height, self.tessellation)

    def surface(self) -> TriMesh:
        return membrane_visible_surface(self.radius, self.thickness,
                                        self.dome_height, self.tessellation)

    def surface_height(self, x, y):
        return membrane_surface_height(self.radius, self.dome_height, x, y)
