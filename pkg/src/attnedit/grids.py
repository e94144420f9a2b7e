"""Core value types: latent grids, points, attention maps, masks, movement fields.

Coordinate convention used everywhere in this package: ``x`` is the column
index, ``y`` is the row index, origin at the top-left.  Flattened indices are
row-major, i.e. ``flat = y * width + x``.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple

import numpy as np

GRID_MAGIC = b"LGRD"

WEIGHT_SUM_TOL = 1e-6


class Point(NamedTuple):
    x: int
    y: int


def flatten_index(p: Point, width: int, height: int | None = None) -> int:
    """Row-major flat index of a point; ``height`` enables full bounds checks."""
    if p.x < 0 or p.x >= width:
        raise ValueError(f"x={p.x} out of bounds for width {width}")
    if p.y < 0 or (height is not None and p.y >= height):
        raise ValueError(f"y={p.y} out of bounds for height {height}")
    return p.y * width + p.x


def unflatten_index(i: int, width: int) -> Point:
    if i < 0:
        raise ValueError("negative flat index")
    return Point(i % width, i // width)


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class LatentGrid:
    """Real-valued C x H x W grid, immutable after construction."""

    values: np.ndarray  # float64, shape (C, H, W)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 3:
            raise ValueError(f"grid must be 3-d (C,H,W), got shape {v.shape}")
        if min(v.shape) < 1:
            raise ValueError(f"grid dims must be positive, got {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("grid contains non-finite values")
        object.__setattr__(self, "values", _frozen(v))

    @property
    def channels(self) -> int:
        return self.values.shape[0]

    @property
    def height(self) -> int:
        return self.values.shape[1]

    @property
    def width(self) -> int:
        return self.values.shape[2]

    def in_bounds(self, p: Point) -> bool:
        return 0 <= p.x < self.width and 0 <= p.y < self.height

    def require_in_bounds(self, p: Point) -> None:
        if not self.in_bounds(p):
            raise ValueError(f"point {tuple(p)} out of bounds for {self.width}x{self.height} grid")


def serialize_grid(grid: LatentGrid) -> bytes:
    """Pack a grid into the flat binary container: 16-byte header
    (magic ``LGRD`` + u32le channels, height, width) then f32le values."""
    header = GRID_MAGIC + struct.pack("<III", grid.channels, grid.height, grid.width)
    data = grid.values.astype("<f4").tobytes()
    return header + data


def deserialize_grid(blob: bytes) -> LatentGrid:
    if len(blob) < 16 or blob[:4] != GRID_MAGIC:
        raise ValueError("not an LGRD blob")
    c, h, w = struct.unpack("<III", blob[4:16])
    n = c * h * w
    if len(blob) != 16 + 4 * n:
        raise ValueError(f"LGRD blob has wrong length for {c}x{h}x{w}")
    v = np.frombuffer(blob, dtype="<f4", offset=16).astype(np.float64).reshape(c, h, w)
    return LatentGrid(v)


@dataclass(frozen=True)
class AttentionMap:
    """H x W nonnegative weights summing to 1 (a row of a row-stochastic matrix)."""

    weights: np.ndarray  # float64, shape (H, W)

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        if w.ndim != 2:
            raise ValueError(f"attention map must be 2-d, got shape {w.shape}")
        if np.any(w < 0):
            raise ValueError("attention map has negative weights")
        s = float(w.sum())
        if abs(s - 1.0) > WEIGHT_SUM_TOL:
            raise ValueError(f"attention map weights sum to {s}, expected 1")
        object.__setattr__(self, "weights", _frozen(w))

    @property
    def height(self) -> int:
        return self.weights.shape[0]

    @property
    def width(self) -> int:
        return self.weights.shape[1]

    def at(self, p: Point) -> float:
        return float(self.weights[p.y, p.x])

    def to_json(self) -> dict:
        return {"height": self.height, "width": self.width,
                "weights": [[float(v) for v in row] for row in self.weights]}


@dataclass(frozen=True)
class BinaryMask:
    """H x W editability map with entries in {0, 1}."""

    bits: np.ndarray  # uint8, shape (H, W)

    def __post_init__(self):
        b = np.asarray(self.bits)
        if b.ndim != 2:
            raise ValueError(f"mask must be 2-d, got shape {b.shape}")
        if not np.isin(b, (0, 1)).all():
            raise ValueError("mask entries must be 0 or 1")
        object.__setattr__(self, "bits", _frozen(b.astype(np.uint8)))

    @property
    def height(self) -> int:
        return self.bits.shape[0]

    @property
    def width(self) -> int:
        return self.bits.shape[1]

    def count(self) -> int:
        return int(self.bits.sum())

    def union(self, other: "BinaryMask") -> "BinaryMask":
        if self.bits.shape != other.bits.shape:
            raise ValueError("mask shape mismatch")
        return BinaryMask(self.bits | other.bits)

    def is_subset_of(self, other: "BinaryMask") -> bool:
        return bool(np.all(self.bits <= other.bits))

    def to_json(self) -> dict:
        return {"height": self.height, "width": self.width,
                "bits": [[int(v) for v in row] for row in self.bits]}

    @classmethod
    def from_json(cls, obj: dict) -> "BinaryMask":
        return cls(np.asarray(obj["bits"], dtype=np.uint8))


@dataclass(frozen=True)
class MovementField:
    """Per-position integer displacement (dx, dy)."""

    dx: np.ndarray  # int64, shape (H, W)
    dy: np.ndarray  # int64, shape (H, W)

    def __post_init__(self):
        dx = np.asarray(self.dx, dtype=np.int64)
        dy = np.asarray(self.dy, dtype=np.int64)
        if dx.shape != dy.shape or dx.ndim != 2:
            raise ValueError("displacement components must share one 2-d shape")
        object.__setattr__(self, "dx", _frozen(dx))
        object.__setattr__(self, "dy", _frozen(dy))

    @property
    def height(self) -> int:
        return self.dx.shape[0]

    @property
    def width(self) -> int:
        return self.dx.shape[1]

    def moving(self) -> np.ndarray:
        """Boolean map of positions with a nonzero displacement."""
        return (self.dx != 0) | (self.dy != 0)

    @classmethod
    def zeros(cls, height: int, width: int) -> "MovementField":
        z = np.zeros((height, width), dtype=np.int64)
        return cls(z, z.copy())

    def to_json(self) -> dict:
        return {"height": self.height, "width": self.width,
                "dx": [[int(v) for v in row] for row in self.dx],
                "dy": [[int(v) for v in row] for row in self.dy]}


def point_to_json(p: Point) -> dict:
    return {"x": int(p.x), "y": int(p.y)}


def point_from_json(obj: dict) -> Point:
    return Point(int(obj["x"]), int(obj["y"]))


def dumps_canonical(obj) -> bytes:
    """Deterministic JSON encoding used wherever byte-stable output matters."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":")).encode()
