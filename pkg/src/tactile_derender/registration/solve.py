"""Pose search: restarted simplex descent over (x, y, heading)."""

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from ..errors import ToolkitError
from ..geometry.mesh import TriMesh
from ..seeding import rng_for
from .cost import registration_cost
from .planar import PlanarPose, wrap_angle

SHRINK = 0.35  # simplex step scale per outer round


@dataclass(frozen=True)
class RegistrationConfig:
    """Search settings.

    n_inits seeded starts inside bounds (the first is always the center);
    each start runs n_iters simplex rounds with shrinking initial steps.
    n_inits=1 searches from the center only, which keeps repeated solves of
    perturbed inputs comparable.
    """

    n_inits: int = 10
    n_iters: int = 5
    bounds: tuple = ((-0.02, 0.02), (-0.02, 0.02), (-np.pi, np.pi))
    tol: float = 1e-6
    seed: int = 0
    max_evals_per_round: int = 150

    def __post_init__(self):
        if self.n_inits < 1 or self.n_iters < 1:
            raise ToolkitError("bad-config", "n_inits and n_iters must be >= 1")
        if len(self.bounds) != 3 or any(len(b) != 2 or b[0] > b[1]
                                        for b in self.bounds):
            raise ToolkitError("bad-config", "bounds must be 3 (lo, hi) pairs")
        if self.tol <= 0.0:
            raise ToolkitError("bad-config", "tol must be positive")


@dataclass
class RegistrationResult:
    pose: PlanarPose
    cost: float
    converged: bool
    n_evals: int = 0
    per_init: list = field(default_factory=list)

    def __iter__(self):
        return iter((self.pose, self.cost))


def _initial_points(config: RegistrationConfig):
    pts = [np.zeros(3)]
    if config.n_inits > 1:
        rng = rng_for(config.seed)
        lo = np.array([b[0] for b in config.bounds])
        hi = np.array([b[1] for b in config.bounds])
        for _ in range(config.n_inits - 1):
            pts.append(rng.uniform(lo, hi))
    return pts


def register(cloud, mesh: TriMesh, support_z: float,
             config: RegistrationConfig = RegistrationConfig()) -> RegistrationResult:
    """Best planar pose of the model explaining the cloud.

    Runs restarted Nelder-Mead descents of the mean squared surface distance
    and keeps the lowest cost.  If no descent converged the best point comes
    back anyway with converged=False.
    """
    evals = 0

    def f(q):
        nonlocal evals
        evals += 1
        return registration_cost(cloud, PlanarPose(q[0], q[1], q[2]),
                                 mesh, support_z)

    span = np.array([b[1] - b[0] for b in config.bounds])
    step0 = 0.35 * span / 2.0
    best = None
    per_init = []
    for q0 in _initial_points(config):
        q = np.asarray(q0, dtype=np.float64)
        cost = f(q)
        success = False
        for r in range(config.n_iters):
            step = step0 * (SHRINK ** r)
            simplex = np.vstack([q, q + np.diag(step)])
            res = minimize(f, q, method="Nelder-Mead",
                           options={"initial_simplex": simplex,
                                    "xatol": config.tol,
                                    "fatol": config.tol * config.tol,
                                    "maxfev": config.max_evals_per_round,
                                    "disp": False})
            if res.fun <= cost:
                q, cost = res.x, float(res.fun)
            success = bool(res.success) or success
        q[2] = wrap_angle(q[2])
        per_init.append((PlanarPose(*q), cost, success))
        if best is None or cost < best[1]:
            best = (PlanarPose(*q), cost, success)
    return RegistrationResult(pose=best[0], cost=best[1],
                              converged=any(p[2] for p in per_init),
                              n_evals=evals, per_init=per_init)
