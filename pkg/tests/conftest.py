import numpy as np
import pytest

from attnedit.diffusion import AttentionRecord
from attnedit.grids import AttentionMap, LatentGrid


def random_record(seed: int, h: int, w: int, t: int = 1) -> AttentionRecord:
    """Seeded row-stochastic matrix built directly (independent of the
    denoiser's softmax path)."""
    rng = np.random.default_rng(seed)
    m = rng.random((h * w, h * w)) + 1e-3
    m /= m.sum(axis=1, keepdims=True)
    return AttentionRecord(t=t, height=h, width=w, matrix=m)


def random_map(seed: int, h: int, w: int) -> AttentionMap:
    rng = np.random.default_rng(seed)
    m = rng.random((h, w)) + 1e-3
    return AttentionMap(m / m.sum())


def random_grid(seed: int, c: int, h: int, w: int) -> LatentGrid:
    rng = np.random.default_rng(seed)
    return LatentGrid(rng.normal(size=(c, h, w)))
