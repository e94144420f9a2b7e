"""Both kernel paths (numba jit and pure numpy) must agree with the
sequential reference semantics; the warp paths are bit-identical."""

import numpy as np
import pytest

from attnedit import kernels

paths = [("numpy", kernels._scatter_warp_numpy, kernels._weighted_fill_numpy)]
if kernels.HAVE_NUMBA:
    paths.append(("numba", kernels._scatter_warp_jit, kernels._weighted_fill_jit))


@pytest.mark.parametrize("name,warp_fn,_", paths, ids=[p[0] for p in paths])
def test_warp_paths_agree_with_each_other(name, warp_fn, _):
    rng = np.random.default_rng(5)
    for _case in range(30):
        h = int(rng.integers(1, 9))
        w = int(rng.integers(1, 9))
        hw = h * w
        v = rng.normal(size=(2, hw))
        dx = rng.integers(-3, 4, size=hw)
        dy = rng.integers(-3, 4, size=hw)
        wt = rng.random(hw)
        out_a, blank_a, col_a = warp_fn(v, dx, dy, wt, h, w)
        out_b, blank_b, col_b = kernels._scatter_warp_numpy(v, dx, dy, wt, h, w)
        assert np.array_equal(out_a, out_b)
        assert np.array_equal(blank_a, blank_b)
        assert col_a == col_b


@pytest.mark.parametrize("name,_,fill_fn", paths, ids=[p[0] for p in paths])
def test_fill_paths_agree(name, _, fill_fn):
    rng = np.random.default_rng(8)
    hw = 36
    v = rng.normal(size=(3, hw))
    rows = rng.random((5, hw))
    rows /= rows.sum(axis=1, keepdims=True)
    cols = np.array([0, 7, 14, 21, 35], dtype=np.int64)
    fill_a, ok_a = fill_fn(v, rows, cols)
    fill_b, ok_b = kernels._weighted_fill_numpy(v, rows, cols)
    assert np.array_equal(ok_a, ok_b)
    assert np.max(np.abs(fill_a - fill_b)) < 1e-9


def test_fill_flags_zero_support():
    v = np.ones((1, 4))
    rows = np.array([[1.0, 0.0, 0.0, 0.0]])
    cols = np.array([0], dtype=np.int64)
    _, ok = kernels.weighted_fill(v, rows, cols)
    assert not ok[0]


def test_env_flag_documented():
    # the dispatch flag is read at import; just assert the switch exists
    assert isinstance(kernels.numba_enabled(), bool)
