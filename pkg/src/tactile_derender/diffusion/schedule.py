"""Variance schedules for the forward noising process.

Arrays are indexed by step-1: entry 0 belongs to t=1, entry T-1 to t=T.
alpha_bar is the running product of alpha = 1 - beta, so corruption at step
t is x_t = sqrt(alpha_bar_t) x_0 + sqrt(1 - alpha_bar_t) noise.
"""

from dataclasses import dataclass, field

import numpy as np

from ..errors import ToolkitError

BETA_MAX = 0.999


@dataclass(frozen=True)
class VarianceSchedule:
    beta: np.ndarray
    alpha: np.ndarray
    alpha_bar: np.ndarray
    kind: str = "custom"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        beta = np.asarray(self.beta, dtype=np.float64)
        alpha = np.asarray(self.alpha, dtype=np.float64)
        abar = np.asarray(self.alpha_bar, dtype=np.float64)
        if not (beta.ndim == 1 and beta.shape == alpha.shape == abar.shape):
            raise ToolkitError("bad-schedule", "schedule arrays must match 1D shapes")
        if beta.shape[0] < 1:
            raise ToolkitError("bad-schedule", "schedule needs at least one step")
        if not np.all((beta > 0.0) & (beta <= BETA_MAX)):
            raise ToolkitError("bad-schedule",
                               f"betas must lie in (0, {BETA_MAX}]")
        if not np.allclose(alpha, 1.0 - beta, rtol=0.0, atol=1e-15):
            raise ToolkitError("bad-schedule", "alpha must equal 1 - beta")
        if np.max(np.abs(abar - np.cumprod(alpha))) > 1e-12:
            raise ToolkitError("bad-schedule",
                               "alpha_bar must be the running product of alpha")
        if np.any(np.diff(abar) >= 0.0):
            raise ToolkitError("bad-schedule", "alpha_bar must strictly decrease")
        for name, arr in (("beta", beta), ("alpha", alpha), ("alpha_bar", abar)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def steps(self) -> int:
        return self.beta.shape[0]

    def at(self, t: int):
        """(beta, alpha, alpha_bar) at 1-based step t."""
        if not 1 <= t <= self.steps:
            raise ToolkitError("bad-schedule",
                               f"step {t} outside 1..{self.steps}")
        i = t - 1
        return float(self.beta[i]), float(self.alpha[i]), float(self.alpha_bar[i])

    def alpha_bar_at(self, t) -> np.ndarray:
        """alpha_bar at 1-based steps; t may be an int or an int array."""
        t = np.asarray(t)
        if np.any((t < 1) | (t > self.steps)):
            raise ToolkitError("bad-schedule", "step outside schedule")
        return self.alpha_bar[t - 1]


def cosine_schedule(steps: int = 250, offset: float = 0.008) -> VarianceSchedule:
    """Squared-cosine noise ramp.

    The target cumulative signal level at step u is
    f(u) = cos(((u/steps + offset)/(1 + offset)) * pi/2)^2 scaled so u=0 is
    exactly 1; betas follow from consecutive ratios and are clipped to
    BETA_MAX, after which alpha_bar is recomputed from the clipped betas so
    the product identity holds exactly.
    """
    if steps < 1:
        raise ToolkitError("bad-schedule", "steps must be >= 1")
    u = np.arange(steps + 1, dtype=np.float64)
    angle = ((u / steps + offset) / (1.0 + offset)) * (np.pi / 2.0)
    f = np.cos(angle) ** 2
    ratio = f[1:] / f[:-1]
    beta = np.minimum(1.0 - ratio, BETA_MAX)
    alpha = 1.0 - beta
    return VarianceSchedule(beta, alpha, np.cumprod(alpha), kind="cosine",
                            params={"steps": steps, "offset": offset})
