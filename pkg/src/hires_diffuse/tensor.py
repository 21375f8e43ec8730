"""Dense (height, width, channels) float32 tensors and bicubic resampling.

Tensors are plain ``numpy.ndarray`` objects of dtype float32, laid out
row-major and channel-last. Pixel images and latents share the layout.
"""
from __future__ import annotations

import struct
from pathlib import Path
from typing import NamedTuple

import numpy as np
from PIL import Image

# Keys cubic convolution parameter. Shared with the test oracle.
CUBIC_A = -0.5

TF32_MAGIC = b"TF32"


class Shape2D(NamedTuple):
    height: int
    width: int

    @classmethod
    def parse(cls, text: str) -> "Shape2D":
        """Parse ``"HxW"`` (e.g. ``"1024x2048"``)."""
        parts = text.lower().replace("×", "x").split("x")
        if len(parts) != 2:
            raise ValueError(f"expected HxW, got {text!r}")
        shape = cls(int(parts[0]), int(parts[1]))
        shape.validate()
        return shape

    def validate(self) -> None:
        if self.height < 1 or self.width < 1:
            raise ValueError(f"shape dimensions must be >= 1, got {self.height}x{self.width}")

    @property
    def area(self) -> int:
        return self.height * self.width

    def __str__(self) -> str:
        return f"{self.height}x{self.width}"


def as_tensor(x) -> np.ndarray:
    """Return ``x`` as a finite float32 (h, w, c) array, validating the invariants."""
    t = np.asarray(x, dtype=np.float32)
    if t.ndim != 3:
        raise ValueError(f"tensor must have rank 3 (h, w, c), got shape {t.shape}")
    if t.size == 0:
        raise ValueError(f"tensor has a zero-sized dimension: {t.shape}")
    if not np.all(np.isfinite(t)):
        raise ValueError("tensor contains non-finite values")
    return t


def flatten(t: np.ndarray) -> np.ndarray:
    """(h, w, c) -> (h*w, c); row ``r*w + col`` holds cell (r, col)."""
    t = np.asarray(t)
    h, w, c = t.shape
    return t.reshape(h * w, c)


def unflatten(m: np.ndarray, height: int, width: int) -> np.ndarray:
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != height * width:
        raise ValueError(f"cannot unflatten {m.shape} into {height}x{width}")
    return m.reshape(height, width, m.shape[1])


def cubic_kernel(x: np.ndarray, a: float = CUBIC_A) -> np.ndarray:
    x = np.abs(np.asarray(x, dtype=np.float64))
    x2, x3 = x * x, x * x * x
    near = (a + 2.0) * x3 - (a + 3.0) * x2 + 1.0
    far = a * x3 - 5.0 * a * x2 + 8.0 * a * x - 4.0 * a
    return np.where(x <= 1.0, near, np.where(x < 2.0, far, 0.0))


def _resample_matrix(n_in: int, n_out: int, a: float = CUBIC_A) -> np.ndarray:
    """(n_out, n_in) interpolation matrix for one axis.

    Half-pixel centres, four taps, edge indices clamped. Clamped taps
    accumulate onto the border sample so each row sums to one.
    """
    scale = n_in / n_out
    src = (np.arange(n_out) + 0.5) * scale - 0.5
    base = np.floor(src).astype(np.int64)
    weights = np.zeros((n_out, n_in), dtype=np.float64)
    rows = np.arange(n_out)
    for offset in (-1, 0, 1, 2):
        idx = base + offset
        w = cubic_kernel(src - idx, a)
        np.add.at(weights, (rows, np.clip(idx, 0, n_in - 1)), w)
    return weights


def bicubic_resample(t: np.ndarray, target: Shape2D | tuple[int, int]) -> np.ndarray:
    """Separable Keys cubic resampling of every channel to ``target``."""
    t = as_tensor(t)
    target = Shape2D(*target)
    target.validate()
    h, w, _ = t.shape
    if (h, w) == tuple(target):
        return t.copy()
    wy = _resample_matrix(h, target.height)
    wx = _resample_matrix(w, target.width)
    out = np.einsum("ih,hwc,jw->ijc", wy, t.astype(np.float64), wx, optimize=True)
    return out.astype(np.float32)


def downsample(t: np.ndarray, factor: int) -> np.ndarray:
    t = as_tensor(t)
    h, w, _ = t.shape
    if factor < 1:
        raise ValueError(f"downsample factor must be >= 1, got {factor}")
    if factor > h or factor > w:
        raise ValueError(f"downsample factor {factor} exceeds tensor size {h}x{w}")
    return bicubic_resample(t, Shape2D(h // factor, w // factor))


def write_tf32(path: str | Path, t: np.ndarray) -> None:
    """Write the raw ``TF32`` format: magic, u32 h/w/c, little-endian f32 data."""
    t = as_tensor(t)
    h, w, c = t.shape
    with open(path, "wb") as fh:
        fh.write(TF32_MAGIC)
        fh.write(struct.pack("<3I", h, w, c))
        fh.write(np.ascontiguousarray(t, dtype="<f4").tobytes())


def read_tf32(path: str | Path) -> np.ndarray:
    raw = Path(path).read_bytes()
    if raw[:4] != TF32_MAGIC:
        raise ValueError(f"{path}: not a TF32 file")
    h, w, c = struct.unpack("<3I", raw[4:16])
    expected = 16 + 4 * h * w * c
    if len(raw) != expected:
        raise ValueError(f"{path}: expected {expected} bytes, found {len(raw)}")
    data = np.frombuffer(raw, dtype="<f4", offset=16).reshape(h, w, c)
    return as_tensor(data.astype(np.float32))


def to_uint8(t: np.ndarray) -> np.ndarray:
    """Map [0, 1] to [0, 255] with clipping and round-half-up."""
    t = np.clip(np.asarray(t, dtype=np.float64), 0.0, 1.0)
    return np.floor(t * 255.0 + 0.5).astype(np.uint8)


def write_png(path: str | Path, t: np.ndarray) -> None:
    t = as_tensor(t)
    if t.shape[2] != 3:
        raise ValueError(f"PNG output needs 3 channels, got {t.shape[2]}")
    Image.fromarray(to_uint8(t)).save(path, format="PNG")


def read_png(path: str | Path) -> np.ndarray:
    with Image.open(path) as img:
        arr = np.asarray(img.convert("RGB"), dtype=np.float32)
    return arr / np.float32(255.0)
