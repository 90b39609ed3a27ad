"""Geometry kernel backends.

The compiled extension is preferred when it imported cleanly; the numpy
reference is the fallback. Both produce bit-identical results, so the choice
only affects speed. Set TDR_KERNELS=python or TDR_KERNELS=compiled to force
one explicitly (forcing an unavailable backend is an error).
"""

from __future__ import annotations

import os

from . import ref
from .bvh import Bvh, build_bvh

_impls = {"python": ref}
try:
    from . import _core
    _impls["compiled"] = _core
except ImportError:
    _core = None

_forced = os.environ.get("TDR_KERNELS", "").strip().lower()
if _forced:
    if _forced not in _impls:
        raise ImportError(
            f"TDR_KERNELS={_forced!r} but available backends are {sorted(_impls)}"
        )
    _active = _impls[_forced]
else:
    _active = _impls.get("compiled", ref)

raycast = _active.raycast
raycast_brute = _active.raycast_brute
closest_distance = _active.closest_distance
closest_distance_brute = _active.closest_distance_brute
crossing_counts = _active.crossing_counts

DET_EPS = ref.DET_EPS
BARY_EPS = ref.BARY_EPS
T_EPS = ref.T_EPS


def get_backend() -> str:
    """Name of the backend serving module-level kernel calls."""
    return _active.NAME


def backends() -> dict:
    """All importable backend modules keyed by name (for benchmarks/tests)."""
    return dict(_impls)


__all__ = [
    "Bvh",
    "build_bvh",
    "raycast",
    "raycast_brute",
    "closest_distance",
    "closest_distance_brute",
    "crossing_counts",
    "get_backend",
    "backends",
    "DET_EPS",
    "BARY_EPS",
    "T_EPS",
]
