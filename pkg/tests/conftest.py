import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


class DeltaOracle:
    """Exact noise predictor for a point-mass data distribution.

    If all probability sits on x0_star, the optimal noise estimate at any
    step is the residual that maps x_t straight back to x0_star.
    """

    def __init__(self, x0_star, schedule):
        self.x0_star = np.asarray(x0_star, dtype=np.float64)
        self.schedule = schedule

    def predict(self, x_t, condition, t):
        _, _, abar = self.schedule.at(t)
        return (x_t - np.sqrt(abar) * self.x0_star) / np.sqrt(1.0 - abar)


class CondOracle(DeltaOracle):
    """Delta oracle whose target shifts with the conditioning channel."""

    def predict(self, x_t, condition, t):
        _, _, abar = self.schedule.at(t)
        target = self.x0_star + 0.05 * condition
        return (x_t - np.sqrt(abar) * target) / np.sqrt(1.0 - abar)


class ConstantPredictor:
    def __init__(self, value):
        self.value = float(value)

    def predict(self, x_t, condition, t):
        return np.full_like(np.asarray(x_t, dtype=np.float64), self.value)


def mesh_volume(mesh) -> float:
    """Signed volume via the divergence theorem (positive when outward)."""
    v = mesh.vertices
    a, b, c = (v[mesh.triangles[:, k]] for k in range(3))
    return float(np.einsum("ij,ij->i", a, np.cross(b, c)).sum() / 6.0)


def random_soup(rng, n_tris: int, scale: float = 1.0):
    """Triangle soup with no degenerate triangles, for raycast parity tests."""
    from tactile_derender.geometry.mesh import TriMesh

    tris = []
    while len(tris) < n_tris:
        p = rng.uniform(-scale, scale, (3, 3))
        area = 0.5 * np.linalg.norm(np.cross(p[1] - p[0], p[2] - p[0]))
        if area > 1e-4 * scale * scale:
            tris.append(p)
    verts = np.concatenate(tris)
    faces = np.arange(3 * n_tris, dtype=np.int32).reshape(-1, 3)
    return TriMesh(verts, faces, "soup")


def run_cli(argv) -> int:
    from tactile_derender.cli import main

    return main([str(a) for a in argv])
