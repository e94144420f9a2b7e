"""Binary editable-region masks from the attention-ratio threshold rule."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grids import AttentionMap, BinaryMask, Point


@dataclass(frozen=True)
class MaskConfig:
    tau: float = 2.0
    include_handle: bool = True
    dilation_radius: int = 0

    def __post_init__(self):
        if self.tau <= 0:
            raise ValueError("tau must be positive")
        if self.dilation_radius < 0:
            raise ValueError("dilation_radius must be >= 0")


def _dilate(bits: np.ndarray, radius: int) -> np.ndarray:
    """Square dilation by shifting and OR-ing; radius is small in practice."""
    out = bits.copy()
    h, w = bits.shape
    for dy in range(-radius, radius + 1):
        for dx in range(-radius, radius + 1):
            if dx == 0 and dy == 0:
                continue
            shifted = np.zeros_like(bits)
            ys = slice(max(dy, 0), h + min(dy, 0))
            yd = slice(max(-dy, 0), h + min(-dy, 0))
            xs = slice(max(dx, 0), w + min(dx, 0))
            xd = slice(max(-dx, 0), w + min(-dx, 0))
            shifted[ys, xs] = bits[yd, xd]
            out |= shifted
    return out


def generate_mask(attn: AttentionMap, handle: Point, cfg: MaskConfig = MaskConfig()) -> BinaryMask:
    """Position is editable iff its weight exceeds tau times the handle weight.

    The handle itself is force-included by default: with tau > 1 the raw ratio
    rule excludes it (ratio exactly 1), which would pin the very point being
    dragged.
    """
    if not (0 <= handle.x < attn.width and 0 <= handle.y < attn.height):
        raise ValueError(f"handle {tuple(handle)} out of bounds")
    ref = attn.at(handle)
    if ref <= 0:
        raise ValueError("handle attention weight must be positive")
    bits = (attn.weights / ref > cfg.tau).astype(np.uint8)
    if cfg.include_handle:
        bits[handle.y, handle.x] = 1
    if cfg.dilation_radius > 0:
        bits = _dilate(bits, cfg.dilation_radius)
    return BinaryMask(bits)
