"""Run configuration: defaults, JSON overrides, strict validation.

A config file may override any subset of the tree below; unknown keys
anywhere are rejected so typos cannot silently fall back to defaults.
Commands write the fully resolved tree next to their outputs.
"""

import json
import math
from pathlib import Path

from .errors import ToolkitError

# leaf spec: (default, type tag); tags: int, float, bool, str, str?, int?,
# numlist, intlist, strlist
DEFAULTS = {
    "seed": (0, "int"),
    "dataset": {
        "n_samples": (2000, "int"),
        "noise_mean": (0.0, "float"),
        "noise_std": (0.00138, "float"),
        "train_ratio": (0.9, "float"),
        "test_objects": ([], "strlist"),
        "cloak_px": (21, "int"),
        "base_z": (0.10, "float"),
        "camera": {
            "fx": (105.0, "float"), "fy": (105.0, "float"),
            "cx": (31.5, "float"), "cy": (31.5, "float"),
            "width": (64, "int"), "height": (64, "int"),
            "near": (0.01, "float"), "far": (0.2, "float"),
        },
        "membrane": {
            "radius": (0.045, "float"), "thickness": (0.012, "float"),
            "dome_height": (0.015, "float"), "tessellation": (48, "int"),
        },
        "sampler": {
            "x_range": ([-0.008, 0.008], "numlist"),
            "y_range": ([-0.008, 0.008], "numlist"),
            "theta_range": ([-math.pi, math.pi], "numlist"),
            "penetration_range": ([0.0015, 0.005], "numlist"),
            "negative_fraction": (0.05, "float"),
            "lift_clearance": (0.005, "float"),
        },
    },
    "train": {
        "learning_rate": (1e-4, "float"),
        "epochs": (15, "int"),
        "batch_size": (32, "int"),
        "loss": ("l1", "str"),
        "steps": (250, "int"),
        "offset": (0.008, "float"),
        "widths": ([32, 32, 64], "intlist"),
        "emb_dim": (64, "int"),
    },
    "derender": {
        "split": ("test_pose", "str"),
        "batch": (8, "int"),
        "limit": (None, "int?"),
        "png": (0, "int"),
    },
    "pose": {
        "limit": (None, "int?"),
        "n_inits": (10, "int"),
        "n_iters": (5, "int"),
        "bound_xy": (0.02, "float"),
        "tol": (1e-6, "float"),
        "subsample": (256, "int"),
        "baseline_threshold": (0.003, "float"),
    },
    "uncertainty": {
        "n": (50, "int"),
        "batch": (10, "int"),
        "sample": (None, "str?"),
        "object": ("cross", "str"),
    },
    "eval": {
        "panels": (4, "int"),
    },
}


def _default_tree(spec: dict) -> dict:
    out = {}
    for key, val in spec.items():
        out[key] = _default_tree(val) if isinstance(val, dict) else val[0]
    return out


def _check_leaf(value, tag: str, path: str):
    def fail(why):
        raise ToolkitError("bad-config", f"{path}: {why}")

    optional = tag.endswith("?")
    base = tag.rstrip("?")
    if value is None:
        if optional:
            return None
        fail("may not be null")
    if base == "int":
        if isinstance(value, bool) or not isinstance(value, int):
            fail(f"expected integer, got {value!r}")
        return value
    if base == "float":
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            fail(f"expected number, got {value!r}")
        return float(value)
    if base == "bool":
        if not isinstance(value, bool):
            fail(f"expected boolean, got {value!r}")
        return value
    if base == "str":
        if not isinstance(value, str):
            fail(f"expected string, got {value!r}")
        return value
    if base in ("numlist", "intlist", "strlist"):
        if not isinstance(value, list):
            fail(f"expected list, got {value!r}")
        for i, v in enumerate(value):
            if base == "numlist" and (isinstance(v, bool)
                                      or not isinstance(v, (int, float))):
                fail(f"element {i} must be a number, got {v!r}")
            if base == "intlist" and (isinstance(v, bool)
                                      or not isinstance(v, int)):
                fail(f"element {i} must be an integer, got {v!r}")
            if base == "strlist" and not isinstance(v, str):
                fail(f"element {i} must be a string, got {v!r}")
        return [float(v) for v in value] if base == "numlist" else list(value)
    fail(f"unhandled type tag {tag}")


def _merge(spec: dict, override: dict, path: str = "") -> dict:
    out = {}
    unknown = set(override) - set(spec)
    if unknown:
        where = path or "top level"
        raise ToolkitError("bad-config",
                           f"unknown key {sorted(unknown)[0]!r} at {where}")
    for key, val in spec.items():
        sub_path = f"{path}.{key}" if path else key
        if isinstance(val, dict):
            user = override.get(key, {})
            if not isinstance(user, dict):
                raise ToolkitError("bad-config",
                                   f"{sub_path}: expected an object")
            out[key] = _merge(val, user, sub_path)
        elif key in override:
            out[key] = _check_leaf(override[key], val[1], sub_path)
        else:
            out[key] = val[0]
    return out


def load_config(path=None) -> dict:
    """Resolved configuration tree, with the file's overrides applied."""
    override = {}
    if path is not None:
        try:
            with open(path) as f:
                override = json.load(f)
        except OSError as e:
            raise ToolkitError("io-error", f"cannot read config {path}: {e}")
        except json.JSONDecodeError as e:
            raise ToolkitError("bad-config", f"config {path} is not valid JSON: {e}")
        if not isinstance(override, dict):
            raise ToolkitError("bad-config", "config root must be an object")
    return _merge(DEFAULTS, override)


def write_resolved(config: dict, out_dir, command: str) -> None:
    """Drop the resolved tree next to a command's artifacts."""
    payload = {"command": command, "config": config}
    path = Path(out_dir) / f"resolved_{command}.json"
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w") as f:
            json.dump(payload, f, sort_keys=True, indent=1)
            f.write("\n")
    except OSError as e:
        raise ToolkitError("io-error", f"cannot write {path}: {e}")
