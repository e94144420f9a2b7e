"""Drag vectors, attention-proportional movement fields, and the scatter warp."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .grids import (AttentionMap, BinaryMask, LatentGrid, MovementField, Point,
                    unflatten_index)


@dataclass(frozen=True)
class DragInstruction:
    handle: Point
    target: Point

    def to_json(self) -> dict:
        return {"handle": {"x": self.handle.x, "y": self.handle.y},
                "target": {"x": self.target.x, "y": self.target.y}}

    @classmethod
    def from_json(cls, obj: dict) -> "DragInstruction":
        return cls(Point(int(obj["handle"]["x"]), int(obj["handle"]["y"])),
                   Point(int(obj["target"]["x"]), int(obj["target"]["y"])))


@dataclass(frozen=True)
class WarpResult:
    warped: LatentGrid
    blanks: frozenset[Point]
    writes: int  # collisions resolved


def drag_vector(instr: DragInstruction) -> tuple[int, int]:
    return (instr.target.x - instr.handle.x, instr.target.y - instr.handle.y)


def round_half_away(a: np.ndarray) -> np.ndarray:
    """Per-component rounding, halves away from zero (keeps +/- drags symmetric)."""
    return (np.sign(a) * np.floor(np.abs(a) + 0.5)).astype(np.int64)


def ratio_field(attn: AttentionMap, handle: Point) -> np.ndarray:
    """Per-position weight divided by the handle weight (the reference value)."""
    ref = attn.at(handle)
    if ref <= 0:
        raise ValueError("handle attention weight must be positive")
    return attn.weights / ref


def compute_movement_field(attn: AttentionMap, handle: Point,
                           v: tuple[int, int], mask: BinaryMask) -> MovementField:
    """Displacement at each position is (weight ratio) * V, rounded to integers,
    zeroed outside the mask."""
    if (attn.height, attn.width) != (mask.height, mask.width):
        raise ValueError("attention map and mask dims disagree")
    r = ratio_field(attn, handle)
    dx = round_half_away(r * v[0]) * mask.bits
    dy = round_half_away(r * v[1]) * mask.bits
    return MovementField(dx, dy)


def masked_field(raw_dx: np.ndarray, raw_dy: np.ndarray, mask: BinaryMask) -> MovementField:
    return MovementField(raw_dx * mask.bits, raw_dy * mask.bits)


def warp_latent(z: LatentGrid, field: MovementField, attn: AttentionMap) -> WarpResult:
    """Scatter every moving position's channel vector to source + displacement.

    Collision policy: larger attention weight wins, ties to the smaller
    row-major source index; out-of-bounds destinations clamp to the grid edge.
    A source becomes blank iff it moved and nothing wrote into it.
    """
    if (z.height, z.width) != (field.height, field.width):
        raise ValueError("grid and field dims disagree")
    if (z.height, z.width) != (attn.height, attn.width):
        raise ValueError("grid and attention map dims disagree")
    warped, blank, collisions = kernels.scatter_warp(
        z.values, field.dx, field.dy, attn.weights)
    blanks = frozenset(
        unflatten_index(int(i), z.width) for i in np.flatnonzero(blank.ravel()))
    return WarpResult(warped=LatentGrid(warped), blanks=blanks, writes=collisions)
