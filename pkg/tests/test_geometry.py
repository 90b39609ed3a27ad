"""Poses, cameras, depth images, point clouds, meshes, primitives, SDF,
and the renderer."""

import math

import numpy as np
import pytest

from tactile_derender.errors import ToolkitError
from tactile_derender.geometry.camera import (PinholeCamera,
                                              unproject_project_roundtrip)
from tactile_derender.geometry.cloud import (pixel_index_map, project_depth,
                                             PointCloud)
from tactile_derender.geometry.depth import DepthImage
from tactile_derender.geometry.mesh import TriMesh
from tactile_derender.geometry.pose import RigidPose, rot_x, rot_y, rot_z
from tactile_derender.geometry.primitives import KINDS, make_primitive
from tactile_derender.geometry.render import render_depth
from tactile_derender.geometry.sdf import signed_distance
from tactile_derender.scene import stock_camera

from conftest import mesh_volume


class TestPose:

    def test_rotations_are_orthonormal(self):
        for mk in (rot_x, rot_y, rot_z):
            R = mk(0.7)
            np.testing.assert_allclose(R @ R.T, np.eye(3), atol=1e-15)
            assert abs(np.linalg.det(R) - 1.0) < 1e-14

    def test_rot_z_moves_x_to_y(self):
        p = rot_z(np.pi / 2.0) @ np.array([1.0, 0.0, 0.0])
        np.testing.assert_allclose(p, [0.0, 1.0, 0.0], atol=1e-15)

    def test_compose_inverse_roundtrip(self, rng):
        a = RigidPose(rot_z(0.3) @ rot_x(-0.8), rng.normal(size=3))
        b = RigidPose(rot_y(1.1), rng.normal(size=3))
        pts = rng.normal(size=(20, 3))
        np.testing.assert_allclose(a.compose(b).apply(pts),
                                   a.apply(b.apply(pts)), atol=1e-12)
        np.testing.assert_allclose(a.inverse().apply(a.apply(pts)), pts,
                                   atol=1e-12)

    def test_matrix_roundtrip(self):
        pose = RigidPose(rot_x(0.4) @ rot_z(2.0), (0.1, -0.2, 0.3))
        again = RigidPose.from_matrix(pose.matrix())
        np.testing.assert_allclose(again.rotation, pose.rotation, atol=1e-15)
        np.testing.assert_allclose(again.translation, pose.translation,
                                   atol=1e-15)

    def test_from_planar(self):
        pose = RigidPose.from_planar(0.01, -0.02, 0.5, z=0.1)
        np.testing.assert_allclose(pose.rotation, rot_z(0.5), atol=1e-15)
        np.testing.assert_allclose(pose.translation, [0.01, -0.02, 0.1])


class TestCamera:

    def test_ray_dirs_have_unit_z(self):
        cam = stock_camera()
        dirs = cam.ray_dirs()
        assert dirs.shape == (64 * 64, 3)
        np.testing.assert_array_equal(dirs[:, 2], 1.0)

    def test_project_back_project_roundtrip(self, rng):
        cam = stock_camera()
        for _ in range(20):
            u, v = rng.integers(0, 64, 2)
            d = rng.uniform(0.02, 0.19)
            p = cam.back_project(u, v, d)
            uu, vv, z = cam.project_point(p)
            assert abs(uu - u) < 1e-9 and abs(vv - v) < 1e-9
            assert abs(z - d) < 1e-15

    def test_roundtrip_helper_is_identity(self, rng):
        cam = stock_camera()
        p = np.array([0.01, -0.02, 0.11])
        np.testing.assert_allclose(unproject_project_roundtrip(cam, p), p,
                                   atol=1e-12)

    def test_ray_dirs_match_back_project(self):
        cam = stock_camera()
        dirs = cam.ray_dirs().reshape(64, 64, 3)
        np.testing.assert_allclose(dirs[5, 7], cam.back_project(7, 5, 1.0),
                                   atol=1e-15)


class TestDepthImage:

    def test_bytes_roundtrip_is_bitexact(self, rng):
        img = DepthImage(rng.uniform(0, 0.2, (64, 64)))
        again = DepthImage.from_bytes(img.to_bytes())
        # float64 -> float32 file -> float64, so compare as stored
        assert np.array_equal(again.data,
                              img.data.astype("<f4").astype(np.float64))
        assert DepthImage.from_bytes(again.to_bytes()).data.tobytes() == \
            again.data.tobytes()

    def test_save_load(self, tmp_path, rng):
        img = DepthImage(rng.uniform(0, 0.2, (16, 8)).astype(np.float32))
        img.save(tmp_path / "d.tdrd")
        again = DepthImage.load(tmp_path / "d.tdrd")
        assert again.height == 16 and again.width == 8
        assert np.array_equal(again.data, img.data)

    def test_bad_magic(self):
        with pytest.raises(ToolkitError) as e:
            DepthImage.from_bytes(b"NOPE" + b"\0" * 20)
        assert e.value.category == "bad-depth-file"

    def test_truncated_payload(self):
        blob = DepthImage.zeros(4, 4).to_bytes()[:-8]
        with pytest.raises(ToolkitError) as e:
            DepthImage.from_bytes(blob)
        assert e.value.category == "bad-depth-file"

    def test_valid_mask(self):
        img = DepthImage(np.array([[0.0, 0.5], [0.2, 0.0]]))
        assert img.valid_count() == 2
        assert np.asarray(img.valid_mask).tolist() == [[False, True],
                                                       [True, False]]


class TestPointCloud:

    def test_constant_depth_projects_to_plane(self):
        cam = stock_camera()
        depth = DepthImage(np.full((64, 64), 0.15))
        cloud = project_depth(depth, cam)
        assert len(cloud.points) == 64 * 64
        np.testing.assert_allclose(cloud.points[:, 2], 0.15, atol=1e-15)

    def test_zero_pixels_are_skipped(self):
        cam = stock_camera()
        data = np.zeros((64, 64))
        data[10, 20] = 0.1
        cloud = project_depth(DepthImage(data), cam)
        assert cloud.points.shape == (1, 3)
        u, v, _ = cam.project_point(cloud.points[0])
        assert round(u) == 20 and round(v) == 10

    def test_camera_pose_moves_points(self):
        cam = stock_camera()
        depth = DepthImage(np.full((64, 64), 0.1))
        pose = RigidPose(rot_z(0.5), (0.01, 0.02, 0.03))
        a = project_depth(depth, cam).points
        b = project_depth(depth, cam, pose).points
        np.testing.assert_allclose(b, pose.apply(a), atol=1e-12)

    def test_dimension_mismatch(self):
        cam = stock_camera()
        with pytest.raises(ToolkitError) as e:
            project_depth(DepthImage.zeros(32, 32), cam)
        assert e.value.category == "dimension-mismatch"

    def test_pixel_index_map(self):
        data = np.zeros((4, 4))
        data[1, 2] = 0.1
        data[3, 0] = 0.2
        pm = pixel_index_map(DepthImage(data))
        assert pm.indices.tolist() == [6, 12]
        assert len(pm) == 2
        assert pm.height == 4 and pm.width == 4

    def test_projection_order_matches_pixel_map(self):
        cam = stock_camera()
        data = np.zeros((64, 64))
        data[3, 5] = 0.12
        data[40, 60] = 0.17
        depth = DepthImage(data)
        cloud = project_depth(depth, cam)
        pm = pixel_index_map(depth)
        for k, flat in enumerate(pm.indices):
            v, u = divmod(int(flat), 64)
            np.testing.assert_allclose(
                cloud.points[k], cam.back_project(u, v, data[v, u]),
                atol=1e-15)


class TestMesh:

    def test_primitives_are_watertight(self):
        for kind in KINDS:
            assert make_primitive(kind).is_watertight, kind

    def test_open_mesh_detected(self):
        quad = TriMesh([[0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0]],
                       [[0, 1, 2], [0, 2, 3]])
        assert not quad.is_watertight

    def test_obj_roundtrip(self, tmp_path):
        mesh = make_primitive("prism3")
        mesh.save_obj(tmp_path / "m.obj")
        again = TriMesh.load_obj(tmp_path / "m.obj")
        assert np.array_equal(again.vertices, mesh.vertices)
        assert np.array_equal(again.triangles, mesh.triangles)

    def test_bad_obj_reports_line(self, tmp_path):
        (tmp_path / "bad.obj").write_text("v 0 0 0\nf 1 2\n")
        with pytest.raises(ToolkitError) as e:
            TriMesh.load_obj(tmp_path / "bad.obj")
        assert e.value.category == "bad-obj"
        assert "line 2" in str(e.value)

    def test_transform_rotates_vertices(self):
        mesh = make_primitive("cylinder")
        pose = RigidPose(rot_x(np.pi / 2.0), (0.0, 0.0, 0.05))
        moved = mesh.transform(pose)
        np.testing.assert_allclose(moved.vertices,
                                   pose.apply(mesh.vertices), atol=1e-15)

    def test_degenerate_triangle_rejected(self):
        with pytest.raises(ValueError):
            TriMesh([[0, 0, 0], [1, 0, 0]], [[0, 1, 1]])


class TestPrimitiveVolumes:
    """Exact polyhedron volumes for the extrusions, bounds for the round
    shapes."""

    def test_cylinder(self):
        r, h, n = 0.010, 0.036, 24
        v = mesh_volume(make_primitive("cylinder", radius=r, height=h,
                                       segments=n))
        want = 0.5 * n * r * r * math.sin(2 * math.pi / n) * h
        assert abs(v - want) < 1e-15

    def test_prism3(self):
        s, h = 0.024, 0.020
        v = mesh_volume(make_primitive("prism3", side=s, height=h))
        assert abs(v - (math.sqrt(3) / 4) * s * s * h) < 1e-15

    def test_trapezoid(self):
        b, t, d, h = 0.024, 0.012, 0.016, 0.020
        v = mesh_volume(make_primitive("trapezoid", bottom=b, top=t, depth=d,
                                       height=h))
        assert abs(v - 0.5 * (b + t) * d * h) < 1e-15

    def test_cross(self):
        s, a, h = 0.028, 0.009, 0.020
        v = mesh_volume(make_primitive("cross", span=s, arm=a, height=h))
        assert abs(v - (2 * s * a - a * a) * h) < 1e-15

    def test_sphere_volume_converges_from_below(self):
        r = 0.015
        exact = 4.0 / 3.0 * math.pi * r ** 3
        v3 = mesh_volume(make_primitive("sphere", radius=r, level=3))
        v4 = mesh_volume(make_primitive("sphere", radius=r, level=4))
        assert v3 < exact and v4 < exact
        assert exact - v4 < exact - v3  # refinement tightens the gap
        assert v3 > 0.98 * exact

    def test_bullet_between_bounds(self):
        r, ln = 0.010, 0.020
        v = mesh_volume(make_primitive("bullet", radius=r, length=ln))
        exact = math.pi * r * r * ln + 2.0 / 3.0 * math.pi * r ** 3
        assert 0.95 * exact < v < exact

    def test_centered_on_volume_centroid(self):
        for kind in KINDS:
            mesh = make_primitive(kind)
            v = mesh.vertices
            a, b, c = (v[mesh.triangles[:, k]] for k in range(3))
            # divergence-theorem centroid of the solid
            vol6 = np.einsum("ij,ij->i", a, np.cross(b, c))
            cen = ((a + b + c + np.zeros(3)) / 4.0 * vol6[:, None]).sum(0) \
                / vol6.sum()
            assert np.linalg.norm(cen) < 1e-12, kind


class TestSignedDistance:

    def test_bvh_equals_brute(self, rng):
        for kind in KINDS:
            mesh = make_primitive(kind)
            lo, hi = mesh.bounds()
            pts = rng.uniform(lo - 0.01, hi + 0.01, (500, 3))
            a = signed_distance(mesh, pts, use_bvh=True)
            b = signed_distance(mesh, pts, use_bvh=False)
            assert np.array_equal(a, b), kind

    def test_sphere_analytic(self, rng):
        r = 0.015
        mesh = make_primitive("sphere", radius=r, level=4)
        pts = rng.uniform(-0.03, 0.03, (300, 3))
        got = signed_distance(mesh, pts)
        want = np.linalg.norm(pts, axis=1) - r
        # icosphere level 4 chord error ~ r * (pi/40)^2 / 2
        np.testing.assert_allclose(got, want, atol=2e-5)

    def test_box_analytic(self, rng):
        # a degenerate trapezoid is an axis-aligned box; compare against the
        # standard closed-form box SDF
        bx, dy, hz = 0.02, 0.016, 0.012
        mesh = make_primitive("trapezoid", bottom=bx, top=bx, depth=dy,
                              height=hz)
        lo, hi = mesh.bounds()
        center = (np.asarray(lo) + np.asarray(hi)) / 2.0
        half = (np.asarray(hi) - np.asarray(lo)) / 2.0
        pts = rng.uniform(lo - 0.01, hi + 0.01, (400, 3))
        q = np.abs(pts - center) - half
        outside = np.linalg.norm(np.maximum(q, 0.0), axis=1)
        inside = np.minimum(q.max(axis=1), 0.0)
        want = outside + inside
        np.testing.assert_allclose(signed_distance(mesh, pts), want,
                                   atol=1e-12)

    def test_interior_is_negative(self):
        for kind in KINDS:
            mesh = make_primitive(kind)
            d = signed_distance(mesh, np.zeros((1, 3)))[0]
            assert d < 0, kind

    def test_far_point_positive(self):
        mesh = make_primitive("cross")
        d = signed_distance(mesh, np.array([[1.0, 1.0, 1.0]]))[0]
        assert abs(d - (np.linalg.norm([1, 1, 1] - np.array(
            [0.014, 0.0045, 0.01]))) ) < 0.02  # coarse sanity: near corner
        assert d > 0


class TestRender:

    def test_bvh_equals_brute_bitexact(self):
        cam = stock_camera()
        mesh = make_primitive("cross").transform(
            RigidPose(rot_z(0.3), (0.002, -0.003, 0.11)))
        a = render_depth(mesh, cam, use_bvh=True)
        b = render_depth(mesh, cam, use_bvh=False)
        assert np.array_equal(a.data, b.data)

    def test_sphere_depth_analytic(self):
        cam = stock_camera()
        r, cz = 0.015, 0.11
        mesh = make_primitive("sphere", radius=r, level=4).transform(
            RigidPose(translation=(0.0, 0.0, cz)))
        img = render_depth(mesh, cam)
        dirs = cam.ray_dirs().reshape(64, 64, 3)
        for (v, u) in [(31, 31), (32, 32), (31, 32), (28, 35)]:
            d = dirs[v, u]
            # smallest root of |t*d - c|^2 = r^2 in the z-depth parameter
            aa = d @ d
            bb = -2.0 * d[2] * cz
            cc = cz * cz - r * r
            t = (-bb - math.sqrt(bb * bb - 4 * aa * cc)) / (2 * aa)
            assert abs(img.data[v, u] - t) < 5e-5  # tessellation chord error

    def test_empty_mesh_raises(self):
        cam = stock_camera()
        with pytest.raises(ToolkitError) as e:
            render_depth(TriMesh(np.zeros((0, 3)), np.zeros((0, 3), int)),
                         cam)
        assert e.value.category == "empty-mesh"

    def test_miss_pixels_are_zero(self):
        cam = stock_camera()
        mesh = make_primitive("sphere").transform(
            RigidPose(translation=(0.0, 0.0, 0.1)))
        img = render_depth(mesh, cam)
        assert img.data[0, 0] == 0.0  # corner ray misses the small sphere
        assert img.valid_count() > 0

    def test_behind_camera_not_rendered(self):
        cam = stock_camera()
        mesh = make_primitive("sphere").transform(
            RigidPose(translation=(0.0, 0.0, -0.1)))
        img = render_depth(mesh, cam)
        assert img.valid_count() == 0
