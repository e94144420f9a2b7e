"""Slicing per-point attention maps out of recorded matrices and averaging
them across inversion timesteps."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .diffusion import AttentionRecord
from .grids import AttentionMap, Point, flatten_index


def slice_attention_map(record: AttentionRecord, handle: Point) -> AttentionMap:
    """Row of the handle point, reshaped to H x W.

    The result is a full row of a row-stochastic matrix, so nonnegativity and
    the sum-to-1 invariant carry over exactly.
    """
    idx = flatten_index(handle, record.width, record.height)
    row = record.matrix[idx]
    return AttentionMap(row.reshape(record.height, record.width))


def slice_attention_row(record: AttentionRecord, source: Point) -> AttentionMap:
    """Same extraction with the query position playing the source role
    (used for interpolation rows)."""
    return slice_attention_map(record, source)


def aggregate_maps(maps: Sequence[AttentionMap]) -> AttentionMap:
    """Element-wise arithmetic mean over timesteps."""
    if not maps:
        raise ValueError("cannot aggregate zero attention maps")
    shape = (maps[0].height, maps[0].width)
    for m in maps:
        if (m.height, m.width) != shape:
            raise ValueError("attention map shape mismatch")
    acc = np.zeros(shape)
    for m in maps:
        acc += m.weights
    return AttentionMap(acc / len(maps))


def aggregate_records(records: Sequence[AttentionRecord]) -> np.ndarray:
    """Mean attention matrix over timesteps; rows stay stochastic.

    Aggregating the matrix once and slicing rows afterwards equals slicing
    per step and aggregating the slices, so both the handle maps and the
    per-blank interpolation rows come from this single array.
    """
    if not records:
        raise ValueError("cannot aggregate zero records")
    shape = records[0].matrix.shape
    acc = np.zeros(shape)
    for r in records:
        if r.matrix.shape != shape:
            raise ValueError("attention record shape mismatch")
        acc += r.matrix
    return acc / len(records)
