"""Depth images and their binary file format.

A depth image stores z-range values in meters on a row-major grid; 0.0 marks
an invalid (no data) pixel. The on-disk format is a 16-byte header -- magic
"TDRD", u32 width, u32 height, u32 reserved, all little-endian -- followed by
width*height float32 values, row-major.
"""

from __future__ import annotations

import struct

import numpy as np

from ..errors import ToolkitError

MAGIC = b"TDRD"


class DepthImage:

    __slots__ = ("data",)

    def __init__(self, data):
        a = np.array(data, dtype=np.float64)
        if a.ndim != 2:
            raise ValueError("depth data must be a 2D grid")
        if not np.isfinite(a).all():
            raise ValueError("depth values must be finite")
        if (a < 0).any():
            raise ValueError("depth values must be non-negative (0 = invalid)")
        a.setflags(write=False)
        self.data = a

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def valid_mask(self) -> np.ndarray:
        return self.data > 0.0

    def valid_count(self) -> int:
        return int(np.count_nonzero(self.data))

    def same_shape(self, other: "DepthImage") -> bool:
        return self.data.shape == other.data.shape

    def to_bytes(self) -> bytes:
        header = MAGIC + struct.pack("<III", self.width, self.height, 0)
        return header + self.data.astype("<f4").tobytes()

    def save(self, path) -> None:
        with open(path, "wb") as f:
            f.write(self.to_bytes())

    @classmethod
    def from_bytes(cls, blob: bytes) -> "DepthImage":
        if len(blob) < 16 or blob[:4] != MAGIC:
            raise ToolkitError("bad-depth-file", "missing TDRD header")
        w, h, _ = struct.unpack("<III", blob[4:16])
        expect = 16 + 4 * w * h
        if len(blob) != expect:
            raise ToolkitError(
                "bad-depth-file",
                f"payload length {len(blob) - 16} does not match {w}x{h} float32")
        data = np.frombuffer(blob, dtype="<f4", offset=16).reshape(h, w)
        return cls(data.astype(np.float64))

    @classmethod
    def load(cls, path) -> "DepthImage":
        with open(path, "rb") as f:
            return cls.from_bytes(f.read())

    @classmethod
    def zeros(cls, height: int, width: int) -> "DepthImage":
        return cls(np.zeros((height, width)))

    def __repr__(self):
        return f"DepthImage({self.width}x{self.height}, {self.valid_count()} valid)"
