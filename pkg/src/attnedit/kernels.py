"""Hot inner loops with a numba fast path and a pure-numpy fallback.

Set ``ATTNEDIT_NO_NUMBA=1`` to force the numpy path (also used automatically
when numba is unavailable).  Both paths implement the identical sequential
reference semantics; the warp results are bit-identical between them.
"""

from __future__ import annotations

import os

import numpy as np

_env_off = os.environ.get("ATTNEDIT_NO_NUMBA", "").lower() in ("1", "true", "yes")

try:
    if _env_off:
        raise ImportError
    from numba import njit

    HAVE_NUMBA = True
except ImportError:
    HAVE_NUMBA = False

    def njit(*args, **kwargs):  # pragma: no cover - trivial shim
        def wrap(f):
            return f

        if args and callable(args[0]):
            return args[0]
        return wrap


def numba_enabled() -> bool:
    return HAVE_NUMBA


# ---------------------------------------------------------------------------
# scatter warp
#
# Collision policy (normative): among moved sources targeting one destination
# the source with the larger priority weight wins; exact ties go to the
# smaller row-major source index.  Out-of-bounds destinations clamp to the
# nearest in-bounds cell.  A source is blank iff it moved and nothing (moved)
# wrote into it.


def _scatter_warp_numpy(values2d, dxf, dyf, wf, h, w):
    hw = h * w
    moving = (dxf != 0) | (dyf != 0)
    moved = np.flatnonzero(moving)
    blank = moving.astype(np.uint8)
    if moved.size == 0:
        return values2d.copy(), blank, 0
    sy, sx = np.divmod(moved, w)
    tx = np.clip(sx + dxf[moved], 0, w - 1)
    ty = np.clip(sy + dyf[moved], 0, h - 1)
    dest = ty * w + tx
    # sort by (dest asc, weight desc, source index asc); first row per dest wins
    order = np.lexsort((moved, -wf[moved], dest))
    d_sorted = dest[order]
    first = np.ones(d_sorted.size, dtype=bool)
    first[1:] = d_sorted[1:] != d_sorted[:-1]
    winners = order[first]
    collisions = int(moved.size - first.sum())
    warped = values2d.copy()
    warped[:, dest[winners]] = values2d[:, moved[winners]]
    blank[np.unique(dest)] = 0
    return warped, blank, collisions


@njit(cache=True)
def _scatter_warp_jit(values2d, dxf, dyf, wf, h, w):  # pragma: no cover - jit
    hw = h * w
    nch = values2d.shape[0]
    best = np.full(hw, -1, dtype=np.int64)
    bestw = np.zeros(hw, dtype=np.float64)
    blank = np.zeros(hw, dtype=np.uint8)
    collisions = 0
    for i in range(hw):
        dx = dxf[i]
        dy = dyf[i]
        if dx == 0 and dy == 0:
            continue
        blank[i] = 1
        x = i % w + dx
        y = i // w + dy
        if x < 0:
            x = 0
        elif x >= w:
            x = w - 1
        if y < 0:
            y = 0
        elif y >= h:
            y = h - 1
        d = y * w + x
        if best[d] < 0:
            best[d] = i
            bestw[d] = wf[i]
        else:
            collisions += 1
            if wf[i] > bestw[d]:
                best[d] = i
                bestw[d] = wf[i]
    warped = values2d.copy()
    for d in range(hw):
        s = best[d]
        if s >= 0:
            for c in range(nch):
                warped[c, d] = values2d[c, s]
            blank[d] = 0
    return warped, blank, collisions


def scatter_warp(values: np.ndarray, dx: np.ndarray, dy: np.ndarray,
                 weights: np.ndarray):
    """Scatter each moving channel vector to source+displacement.

    values: (C, H, W) float64; dx/dy: (H, W) int64; weights: (H, W) float64
    priorities for collision resolution.  Returns (warped (C,H,W),
    blank (H,W) uint8, collisions resolved).
    """
    c, h, w = values.shape
    v2 = np.ascontiguousarray(values.reshape(c, h * w))
    dxf = np.ascontiguousarray(dx.reshape(-1).astype(np.int64))
    dyf = np.ascontiguousarray(dy.reshape(-1).astype(np.int64))
    wf = np.ascontiguousarray(weights.reshape(-1).astype(np.float64))
    fn = _scatter_warp_jit if HAVE_NUMBA else _scatter_warp_numpy
    warped, blank, collisions = fn(v2, dxf, dyf, wf, h, w)
    return warped.reshape(c, h, w), blank.reshape(h, w), int(collisions)


# ---------------------------------------------------------------------------
# attention-weighted hole filling
#
# For each blank, weights are its attention row with every blank column
# zeroed, renormalized to sum 1; zero-support blanks are flagged for the
# caller's nearest-neighbour fallback.


def _weighted_fill_numpy(values2d, rows, blank_cols):
    w = rows.copy()
    w[:, blank_cols] = 0.0
    s = w.sum(axis=1)
    ok = s > 0.0
    fill = np.zeros((values2d.shape[0], rows.shape[0]))
    for b in np.flatnonzero(ok):
        wn = w[b] / s[b]
        # anchor at the heaviest contributor: all-equal contributors and a
        # sole full-weight contributor then come out exactly
        anchor = values2d[:, int(wn.argmax())]
        fill[:, b] = anchor + (values2d - anchor[:, None]) @ wn
    return fill, ok


@njit(cache=True)
def _weighted_fill_jit(values2d, rows, blank_cols):  # pragma: no cover - jit
    nch = values2d.shape[0]
    nb, hw = rows.shape
    fill = np.zeros((nch, nb))
    ok = np.zeros(nb, dtype=np.bool_)
    wn = np.zeros(hw)
    for b in range(nb):
        for j in range(hw):
            wn[j] = rows[b, j]
        for k in range(blank_cols.shape[0]):
            wn[blank_cols[k]] = 0.0
        s = 0.0
        for j in range(hw):
            s += wn[j]
        if s <= 0.0:
            continue
        ok[b] = True
        anchor_j = 0
        best = -1.0
        for j in range(hw):
            wn[j] = wn[j] / s
            if wn[j] > best:
                best = wn[j]
                anchor_j = j
        for c in range(nch):
            acc = 0.0
            for j in range(hw):
                acc += wn[j] * (values2d[c, j] - values2d[c, anchor_j])
            fill[c, b] = values2d[c, anchor_j] + acc
    return fill, ok


def weighted_fill(values2d: np.ndarray, rows: np.ndarray,
                  blank_cols: np.ndarray):
    """values2d: (C, H*W); rows: (n_blanks, H*W) attention rows; blank_cols:
    flat indices of all blanks.  Returns (fill (C, n_blanks), ok (n_blanks))."""
    values2d = np.ascontiguousarray(values2d, dtype=np.float64)
    rows = np.ascontiguousarray(rows, dtype=np.float64)
    blank_cols = np.ascontiguousarray(blank_cols, dtype=np.int64)
    fn = _weighted_fill_jit if HAVE_NUMBA else _weighted_fill_numpy
    return fn(values2d, rows, blank_cols)
