"""Geometry kernel checks: BVH vs exhaustive routes, closest-point math,
parity counting, and backend agreement."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tactile_derender import _kernels
from tactile_derender.geometry.mesh import TriMesh
from tactile_derender.geometry.primitives import make_primitive, KINDS

from conftest import random_soup


def closest_point_on_triangle(p, a, b, c):
    """Independent closest-point computation via region classification."""
    ab, ac, ap = b - a, c - a, p - a
    d1, d2 = ab @ ap, ac @ ap
    if d1 <= 0 and d2 <= 0:
        return a
    bp = p - b
    d3, d4 = ab @ bp, ac @ bp
    if d3 >= 0 and d4 <= d3:
        return b
    vc = d1 * d4 - d3 * d2
    if vc <= 0 and d1 >= 0 and d3 <= 0:
        return a + (d1 / (d1 - d3)) * ab
    cp = p - c
    d5, d6 = ab @ cp, ac @ cp
    if d6 >= 0 and d5 <= d6:
        return c
    vb = d5 * d2 - d1 * d6
    if vb <= 0 and d2 >= 0 and d6 <= 0:
        return a + (d2 / (d2 - d6)) * ac
    va = d3 * d6 - d5 * d4
    if va <= 0 and (d4 - d3) >= 0 and (d5 - d6) >= 0:
        return b + ((d4 - d3) / ((d4 - d3) + (d5 - d6))) * (c - b)
    denom = 1.0 / (va + vb + vc)
    return a + ab * (vb * denom) + ac * (vc * denom)


def brute_min_distance(mesh, points):
    out = np.empty(len(points))
    for i, p in enumerate(points):
        best = np.inf
        for tri in mesh.triangles:
            a, b, c = mesh.vertices[tri]
            q = closest_point_on_triangle(p, a, b, c)
            best = min(best, float(np.linalg.norm(p - q)))
        out[i] = best
    return out


class TestRaycast:

    def test_bvh_equals_brute_on_random_soups(self, rng):
        for k in range(20):
            mesh = random_soup(rng, 5 + 3 * k)
            origins = rng.uniform(-2, 2, (200, 3))
            dirs = rng.normal(size=(200, 3))
            bvh = _kernels.build_bvh(mesh.vertices, mesh.triangles)
            t_a, i_a = _kernels.raycast(mesh.vertices, mesh.triangles,
                                        origins, dirs, 1e-9, 10.0, bvh)
            t_b, i_b = _kernels.raycast_brute(mesh.vertices, mesh.triangles,
                                              origins, dirs, 1e-9, 10.0)
            assert np.array_equal(t_a, t_b)
            assert np.array_equal(i_a, i_b)

    def test_hit_point_lies_on_triangle(self, rng):
        # aim rays at known barycentric targets of a random triangle
        for _ in range(50):
            v = rng.uniform(-1, 1, (3, 3))
            mesh = TriMesh(v, [[0, 1, 2]])
            w = rng.dirichlet([1, 1, 1])
            target = w @ v
            origin = target + rng.normal(size=3) * 2.0
            d = target - origin
            t, idx = _kernels.raycast_brute(mesh.vertices, mesh.triangles,
                                            origin[None], d[None], 1e-9, 10.0)
            if not np.isfinite(t[0]):
                continue  # grazing configurations may legitimately miss
            hit = origin + t[0] * d
            assert idx[0] == 0
            assert np.linalg.norm(hit - target) < 1e-9

    def test_miss_is_infinite(self):
        mesh = TriMesh([[0, 0, 1], [1, 0, 1], [0, 1, 1]], [[0, 1, 2]])
        t, idx = _kernels.raycast_brute(
            mesh.vertices, mesh.triangles, np.array([[5.0, 5.0, 0.0]]),
            np.array([[0.0, 0.0, 1.0]]), 1e-9, 10.0)
        assert np.isinf(t[0]) and idx[0] == -1

    def test_t_window_is_respected(self):
        mesh = TriMesh([[-1, -1, 2], [1, -1, 2], [0, 1, 2]], [[0, 1, 2]])
        o = np.zeros((1, 3))
        d = np.array([[0.0, 0.0, 1.0]])
        t, _ = _kernels.raycast_brute(mesh.vertices, mesh.triangles, o, d,
                                      1e-9, 1.5)
        assert np.isinf(t[0])  # hit at t=2 lies beyond t_max
        t, _ = _kernels.raycast_brute(mesh.vertices, mesh.triangles, o, d,
                                      1e-9, 2.5)
        assert abs(t[0] - 2.0) < 1e-12


class TestClosestDistance:

    def test_bvh_equals_brute(self, rng):
        for k in range(10):
            mesh = random_soup(rng, 8 + 5 * k)
            queries = rng.uniform(-2, 2, (300, 3))
            bvh = _kernels.build_bvh(mesh.vertices, mesh.triangles)
            d_a = _kernels.closest_distance(mesh.vertices, mesh.triangles,
                                            queries, bvh)
            d_b = _kernels.closest_distance_brute(mesh.vertices,
                                                  mesh.triangles, queries)
            assert np.array_equal(d_a, d_b)

    def test_against_region_oracle(self, rng):
        mesh = random_soup(rng, 25)
        queries = rng.uniform(-2, 2, (100, 3))
        got = _kernels.closest_distance_brute(mesh.vertices, mesh.triangles,
                                              queries)
        want = brute_min_distance(mesh, queries)
        np.testing.assert_allclose(got, want, atol=1e-12)

    def test_analytic_cases(self):
        mesh = TriMesh([[0, 0, 0], [2, 0, 0], [0, 2, 0]], [[0, 1, 2]])

        def d(p):
            return _kernels.closest_distance_brute(
                mesh.vertices, mesh.triangles, np.asarray(p, float)[None])[0]

        assert abs(d([0.5, 0.5, 3.0]) - 3.0) < 1e-15   # above the interior
        assert abs(d([-1.0, -1.0, 0.0]) - np.sqrt(2)) < 1e-15  # nearest vertex
        assert abs(d([1.0, -2.0, 0.0]) - 2.0) < 1e-15  # nearest edge
        assert d([0.3, 0.3, 0.0]) == 0.0               # on the face

    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 2 ** 32 - 1))
    def test_distance_is_metric_like(self, seed):
        rng = np.random.default_rng(seed)
        v = rng.uniform(-1, 1, (3, 3))
        if 0.5 * np.linalg.norm(np.cross(v[1] - v[0], v[2] - v[0])) < 1e-6:
            return
        mesh = TriMesh(v, [[0, 1, 2]])
        p = rng.uniform(-2, 2, 3)
        d = _kernels.closest_distance_brute(mesh.vertices, mesh.triangles,
                                            p[None])[0]
        assert d >= 0
        # never larger than distance to any vertex
        assert d <= np.linalg.norm(v - p, axis=1).min() + 1e-12
        # vertices themselves are at distance zero
        dv = _kernels.closest_distance_brute(mesh.vertices, mesh.triangles,
                                             v.copy())
        assert np.all(dv < 1e-12)


class TestCrossingCounts:

    def test_cube_parity(self, rng):
        cube = make_primitive("trapezoid", bottom=0.02, top=0.02, depth=0.02,
                              height=0.02)  # degenerate trapezoid = box
        inside = rng.uniform(-0.008, 0.008, (50, 3))
        outside = inside + np.array([0.05, 0.0, 0.0])
        d = np.array([0.717494308785187, -0.07959851576415287,
                      0.6920014401350698])
        c_in, deg_in = _kernels.crossing_counts(cube.vertices, cube.triangles,
                                                inside, d)
        c_out, deg_out = _kernels.crossing_counts(cube.vertices,
                                                  cube.triangles, outside, d)
        assert not deg_in.any() and not deg_out.any()
        assert np.all(c_in % 2 == 1)
        assert np.all(c_out % 2 == 0)

    def test_degenerate_flagging(self):
        tri = TriMesh([[0, 0, 1], [1, 0, 1], [0, 1, 1]], [[0, 1, 2]])
        # direction parallel to the triangle plane is degenerate by design
        _, deg = _kernels.crossing_counts(tri.vertices, tri.triangles,
                                          np.array([[0.2, 0.2, 0.0]]),
                                          np.array([1.0, 0.0, 0.0]))
        assert deg[0]


class TestBackends:

    def test_both_backends_present(self):
        avail = _kernels.backends()
        assert "python" in avail
        assert "compiled" in avail, "compiled extension failed to import"

    def test_cross_backend_bitwise_agreement(self, rng):
        avail = _kernels.backends()
        if len(avail) < 2:
            pytest.skip("only one backend importable")
        mesh = make_primitive("cross")
        bvh = _kernels.build_bvh(mesh.vertices, mesh.triangles)
        origins = rng.uniform(-0.05, 0.05, (500, 3))
        dirs = rng.normal(size=(500, 3))
        queries = rng.uniform(-0.05, 0.05, (500, 3))
        outs = []
        for mod in avail.values():
            t, idx = mod.raycast(mesh.vertices, mesh.triangles, origins,
                                 dirs, 1e-9, 1.0, bvh)
            d = mod.closest_distance(mesh.vertices, mesh.triangles, queries,
                                     bvh)
            outs.append((t, idx, d))
        for other in outs[1:]:
            for a, b in zip(outs[0], other):
                assert np.array_equal(a, b)

    def test_backend_name_reported(self):
        assert _kernels.get_backend() in _kernels.backends()


class TestBvh:

    def test_build_is_deterministic(self, rng):
        mesh = random_soup(rng, 40)
        a = _kernels.build_bvh(mesh.vertices, mesh.triangles)
        b = _kernels.build_bvh(mesh.vertices, mesh.triangles)
        for field in ("node_min", "node_max", "child_a", "child_b",
                      "is_leaf", "prim"):
            assert np.array_equal(getattr(a, field), getattr(b, field))

    def test_every_triangle_reachable(self, rng):
        mesh = random_soup(rng, 33)
        bvh = _kernels.build_bvh(mesh.vertices, mesh.triangles)
        assert sorted(bvh.prim.tolist()) == list(range(33))
