"""Fill vacated positions with attention-weighted averages of the surviving
values.  Each blank takes a convex combination of non-blank positions,
weighted by its own aggregated attention row restricted to non-blanks and
renormalized; blanks never contribute to other blanks."""

from __future__ import annotations

from typing import Iterable, Mapping

import numpy as np

from . import kernels
from .grids import AttentionMap, LatentGrid, Point, flatten_index


def _nearest_nonblank(b: Point, blank_set: frozenset[Point], h: int, w: int) -> Point:
    # Defensive fallback only: softmax rows are strictly positive, so the
    # restricted weight sum cannot vanish in normal operation.
    best = None
    best_key = None
    for y in range(h):
        for x in range(w):
            p = Point(x, y)
            if p in blank_set:
                continue
            key = ((x - b.x) ** 2 + (y - b.y) ** 2, y * w + x)
            if best_key is None or key < best_key:
                best, best_key = p, key
    if best is None:
        raise ValueError("no non-blank contributor exists")
    return best


def interpolate_blanks(warped: LatentGrid, blanks: Iterable[Point],
                       rows: Mapping[Point, AttentionMap]) -> LatentGrid:
    """Return a grid with every blank filled; non-blank values bit-unchanged."""
    blank_list = sorted(set(blanks), key=lambda p: (p.y, p.x))
    if not blank_list:
        return warped
    h, w = warped.height, warped.width
    for b in blank_list:
        warped.require_in_bounds(b)
        if b not in rows:
            raise ValueError(f"no attention row provided for blank {tuple(b)}")
    blank_cols = np.array([flatten_index(b, w, h) for b in blank_list], dtype=np.int64)
    row_mat = np.stack([rows[b].weights.reshape(-1) for b in blank_list])
    values2d = warped.values.reshape(warped.channels, h * w)
    fill, ok = kernels.weighted_fill(values2d, row_mat, blank_cols)

    out = values2d.copy()
    blank_set = frozenset(blank_list)
    for j, b in enumerate(blank_list):
        if ok[j]:
            out[:, blank_cols[j]] = fill[:, j]
        else:
            src = _nearest_nonblank(b, blank_set, h, w)
            out[:, blank_cols[j]] = values2d[:, flatten_index(src, w, h)]
    return LatentGrid(out.reshape(warped.values.shape))
