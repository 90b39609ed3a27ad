"""Self-contained PNG output: depth colormaps and simple line charts.

Writer emits fixed-parameter zlib streams, so identical pixels give
identical files.
"""

import struct
import zlib

import numpy as np

from ..errors import ToolkitError
from ..geometry.depth import DepthImage


def write_png(path, rgb: np.ndarray) -> None:
    """Write an (H, W, 3) uint8 array as an 8-bit RGB PNG."""
    arr = np.asarray(rgb)
    if arr.ndim != 3 or arr.shape[2] != 3 or arr.dtype != np.uint8:
        raise ToolkitError("bad-image", f"need (H, W, 3) uint8, got "
                                        f"{arr.shape} {arr.dtype}")
    h, w = arr.shape[:2]
    raw = b"".join(b"\x00" + arr[y].tobytes() for y in range(h))

    def chunk(tag, payload):
        body = tag + payload
        return struct.pack(">I", len(payload)) + body + struct.pack(
            ">I", zlib.crc32(body) & 0xFFFFFFFF)

    ihdr = struct.pack(">IIBBBBB", w, h, 8, 2, 0, 0, 0)
    data = zlib.compress(raw, 6)
    png = (b"\x89PNG\r\n\x1a\n" + chunk(b"IHDR", ihdr)
           + chunk(b"IDAT", data) + chunk(b"IEND", b""))
    try:
        with open(path, "wb") as f:
            f.write(png)
    except OSError as e:
        raise ToolkitError("io-error", f"cannot write {path}: {e}")


def colormap(x: np.ndarray) -> np.ndarray:
    """Blue-to-red rainbow over [0, 1] -> (..., 3) uint8."""
    v = np.clip(np.asarray(x, dtype=np.float64), 0.0, 1.0)
    r = np.clip(1.5 - np.abs(4.0 * v - 3.0), 0.0, 1.0)
    g = np.clip(1.5 - np.abs(4.0 * v - 2.0), 0.0, 1.0)
    b = np.clip(1.5 - np.abs(4.0 * v - 1.0), 0.0, 1.0)
    return (np.stack([r, g, b], axis=-1) * 255.0).round().astype(np.uint8)


def depth_to_rgb(depth: DepthImage, lo: float | None = None,
                 hi: float | None = None) -> np.ndarray:
    """Colormapped depth; invalid pixels render black."""
    d = depth.data
    valid = d > 0.0
    if lo is None:
        lo = float(d[valid].min()) if valid.any() else 0.0
    if hi is None:
        hi = float(d[valid].max()) if valid.any() else 1.0
    span = hi - lo if hi > lo else 1.0
    rgb = colormap((d - lo) / span)
    rgb[~valid] = 0
    return rgb


def save_depth_png(path, depth: DepthImage, lo: float | None = None,
                   hi: float | None = None) -> None:
    write_png(path, depth_to_rgb(depth, lo, hi))


def save_panel_png(path, images, lo: float | None = None,
                   hi: float | None = None, pad: int = 2) -> None:
    """Side-by-side depth images on a white gutter, shared color range."""
    if not images:
        raise ToolkitError("bad-image", "no images for panel")
    valid_vals = np.concatenate(
        [im.data[im.data > 0.0].ravel() for im in images]) if any(
            im.valid_count() for im in images) else np.array([0.0, 1.0])
    lo = float(valid_vals.min()) if lo is None else lo
    hi = float(valid_vals.max()) if hi is None else hi
    tiles = [depth_to_rgb(im, lo, hi) for im in images]
    h = max(t.shape[0] for t in tiles)
    strips = []
    gutter = np.full((h, pad, 3), 255, dtype=np.uint8)
    for i, t in enumerate(tiles):
        if i:
            strips.append(gutter)
        if t.shape[0] < h:
            t = np.pad(t, ((0, h - t.shape[0]), (0, 0), (0, 0)),
                       constant_values=255)
        strips.append(t)
    write_png(path, np.concatenate(strips, axis=1))


def _polyline(img: np.ndarray, xs, ys, color) -> None:
    for i in range(len(xs) - 1):
        x0, y0, x1, y1 = int(xs[i]), int(ys[i]), int(xs[i + 1]), int(ys[i + 1])
        n = max(abs(x1 - x0), abs(y1 - y0), 1)
        for k in range(n + 1):
            x = x0 + (x1 - x0) * k // n
            y = y0 + (y1 - y0) * k // n
            if 0 <= y < img.shape[0] and 0 <= x < img.shape[1]:
                img[y, x] = color


def save_curve_png(path, x, y, size=(480, 320), margin: int = 32,
                   color=(30, 60, 200)) -> None:
    """Minimal line chart: axes box plus one polyline."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.ndim != 1 or x.shape != y.shape or x.shape[0] < 2:
        raise ToolkitError("bad-image", "curve needs matching 1D x, y (n >= 2)")
    w, h = size
    img = np.full((h, w, 3), 255, dtype=np.uint8)
    box = (margin, w - margin, margin, h - margin)  # x0, x1, y0, y1
    img[box[2]:box[3] + 1, box[0]] = 0
    img[box[2]:box[3] + 1, box[1]] = 0
    img[box[2], box[0]:box[1] + 1] = 0
    img[box[3], box[0]:box[1] + 1] = 0
    spanx = x.max() - x.min() or 1.0
    spany = y.max() - y.min() or 1.0
    px = box[0] + (x - x.min()) / spanx * (box[1] - box[0])
    py = box[3] - (y - y.min()) / spany * (box[3] - box[2])
    _polyline(img, px, py, np.array(color, dtype=np.uint8))
    write_png(path, img)
