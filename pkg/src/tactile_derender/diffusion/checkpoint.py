"""Binary checkpoints with bit-exact round-trips.

Layout: magic, version, header length, JSON header, then raw float32
parameter bytes in header order, then (optionally) Adam first/second moment
blobs in the same order, then a sha256 of everything before it.  Weights
and optimizer state restore exactly, so a resumed run continues the byte
stream a straight-through run would have produced.
"""

import hashlib
import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch

from ..errors import ToolkitError
from .model import build_model
from .schedule import VarianceSchedule
from .train import TrainConfig, make_optimizer

MAGIC = b"TDCK"
VERSION = 1


@dataclass
class Checkpoint:
    model: torch.nn.Module
    schedule: VarianceSchedule
    d_max: float
    image: tuple
    epoch: int
    loss_curve: list
    train_config: TrainConfig
    optimizer_state: dict | None

    def predictor(self):
        from .model import TorchPredictor
        return TorchPredictor(self.model)

    def make_optimizer(self) -> torch.optim.Adam:
        """Adam wired to the model, with any saved state restored."""
        opt = make_optimizer(self.model, self.train_config)
        if self.optimizer_state is not None:
            params = dict(self.model.named_parameters())
            for name, entry in self.optimizer_state.items():
                p = params[name]
                opt.state[p] = {
                    "step": torch.tensor(float(entry["step"])),
                    "exp_avg": torch.from_numpy(entry["m"].copy()),
                    "exp_avg_sq": torch.from_numpy(entry["v"].copy()),
                }
        return opt


def _param_entries(model: torch.nn.Module):
    entries = []
    for name, p in model.state_dict().items():
        t = p.detach().cpu()
        if t.dtype != torch.float32:
            raise ToolkitError("bad-checkpoint",
                               f"cannot serialize {name} of dtype {t.dtype}")
        entries.append((name, t))
    return entries


def save_checkpoint(path, model: torch.nn.Module, schedule: VarianceSchedule,
                    *, d_max: float, image, epoch: int, loss_curve,
                    train_config: TrainConfig,
                    optimizer: torch.optim.Adam | None = None) -> None:
    entries = _param_entries(model)
    header = {
        "arch": model.arch_config(),
        "schedule": {"kind": schedule.kind, "params": schedule.params,
                     "beta": schedule.beta.tolist()},
        "d_max": float(d_max),
        "image": [int(image[0]), int(image[1])],
        "epoch": int(epoch),
        "loss_curve": [float(v) for v in loss_curve],
        "train": train_config.to_json(),
        "params": [{"name": n, "shape": list(t.shape)} for n, t in entries],
        "optimizer": {"present": False},
    }

    opt_blobs = []
    if optimizer is not None:
        named = dict(model.named_parameters())
        steps = {}
        for name, p in named.items():
            state = optimizer.state.get(p)
            if state is None:
                # untouched param (no step taken yet): zero moments
                m = torch.zeros_like(p)
                v = torch.zeros_like(p)
                steps[name] = 0.0
            else:
                m, v = state["exp_avg"], state["exp_avg_sq"]
                steps[name] = float(state["step"])
            opt_blobs.append((name, m.detach().cpu(), v.detach().cpu()))
        header["optimizer"] = {"present": True, "steps": steps,
                               "names": [n for n, _, _ in opt_blobs]}

    head = json.dumps(header, sort_keys=True).encode()
    out = bytearray()
    out += MAGIC
    out += struct.pack("<II", VERSION, len(head))
    out += head
    for _, t in entries:
        out += t.numpy().astype("<f4").tobytes()
    for _, m, v in opt_blobs:
        out += m.numpy().astype("<f4").tobytes()
        out += v.numpy().astype("<f4").tobytes()
    out += hashlib.sha256(bytes(out)).digest()
    try:
        Path(path).write_bytes(bytes(out))
    except OSError as e:
        raise ToolkitError("io-error", f"cannot write checkpoint: {e}")


def load_checkpoint(path) -> Checkpoint:
    try:
        raw = Path(path).read_bytes()
    except OSError as e:
        raise ToolkitError("io-error", f"cannot read checkpoint: {e}")
    if len(raw) < 44 or raw[:4] != MAGIC:
        raise ToolkitError("bad-checkpoint", f"{path} is not a checkpoint file")
    body, digest = raw[:-32], raw[-32:]
    if hashlib.sha256(body).digest() != digest:
        raise ToolkitError("bad-checkpoint", f"{path} failed its integrity check")
    version, head_len = struct.unpack_from("<II", raw, 4)
    if version != VERSION:
        raise ToolkitError("bad-checkpoint", f"unsupported version {version}")
    header = json.loads(raw[12:12 + head_len].decode())

    beta = np.asarray(header["schedule"]["beta"], dtype=np.float64)
    schedule = VarianceSchedule(beta, 1.0 - beta, np.cumprod(1.0 - beta),
                                kind=header["schedule"]["kind"],
                                params=header["schedule"]["params"])
    model = build_model(header["arch"])

    off = 12 + head_len
    state = {}
    for entry in header["params"]:
        shape = tuple(entry["shape"])
        count = int(np.prod(shape, dtype=np.int64)) if shape else 1
        arr = np.frombuffer(body, dtype="<f4", count=count, offset=off)
        off += count * 4
        state[entry["name"]] = torch.from_numpy(
            arr.reshape(shape).astype(np.float32))
    missing = set(model.state_dict()) - set(state)
    if missing:
        raise ToolkitError("bad-checkpoint", f"missing tensors {sorted(missing)}")
    model.load_state_dict(state)

    opt_state = None
    opt_head = header["optimizer"]
    if opt_head["present"]:
        opt_state = {}
        shapes = {e["name"]: tuple(e["shape"]) for e in header["params"]}
        for name in opt_head["names"]:
            shape = shapes[name]
            count = int(np.prod(shape, dtype=np.int64)) if shape else 1
            m = np.frombuffer(body, dtype="<f4", count=count, offset=off)
            off += count * 4
            v = np.frombuffer(body, dtype="<f4", count=count, offset=off)
            off += count * 4
            opt_state[name] = {"m": m.reshape(shape).astype(np.float32),
                               "v": v.reshape(shape).astype(np.float32),
                               "step": opt_head["steps"][name]}
    if off != len(body):
        raise ToolkitError("bad-checkpoint",
                           f"{len(body) - off} stray bytes in {path}")

    return Checkpoint(
        model=model, schedule=schedule, d_max=float(header["d_max"]),
        image=tuple(header["image"]), epoch=int(header["epoch"]),
        loss_curve=list(header["loss_curve"]),
        train_config=TrainConfig.from_json(header["train"]),
        optimizer_state=opt_state)
