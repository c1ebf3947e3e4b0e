import numpy as np
import pytest

from conftest import full, graph
from iglin import _backend, _fallback

compiled = pytest.mark.skipif("compiled" not in _backend.available(), reason="extension not built")


def test_backend_selection():
    assert _backend.BACKEND in ("compiled", "python")
    assert _backend.get("python") is _fallback
    with pytest.raises(LookupError):
        _backend.get("fortran")


def test_lowest_bit_and_pack():
    words = _fallback.pack_rows(np.array([[0, 0, 1, 0], [0, 0, 0, 0], [1, 1, 0, 0]], dtype=bool))
    assert _fallback.lowest_bit(words).tolist() == [2, -1, 0]
    big = np.zeros((1, 130), dtype=bool)
    big[0, 129] = True
    assert _fallback.lowest_bit(_fallback.pack_rows(big)).tolist() == [129]


@compiled
@pytest.mark.parametrize("n,r,q", [(4, 1, 2), (5, 2, 2), (4, 1, 3), (6, 2, 2)])
def test_closure_kernels_agree(n, r, q):
    _, delta, tree = graph(n, r, q)
    blue0 = tree.mask(delta.nedges)
    a = _backend.closure_rounds(delta.nx, delta.ny, delta.ex, delta.ey, blue0, backend="compiled")
    b = _backend.closure_rounds(delta.nx, delta.ny, delta.ex, delta.ey, blue0, backend="python")
    for u, v in zip(a, b):
        assert np.array_equal(u, v)


@compiled
def test_closure_kernels_agree_on_random_graphs():
    rng = np.random.default_rng(5)
    for _ in range(20):
        nx, ny = rng.integers(2, 90, 2)
        dense = rng.random((nx, ny)) < 0.3
        ex, ey = np.nonzero(dense)
        blue0 = rng.random(len(ex)) < 0.2
        a = _backend.closure_rounds(nx, ny, ex, ey, blue0, backend="compiled")
        b = _backend.closure_rounds(nx, ny, ex, ey, blue0, backend="python")
        for u, v in zip(a, b):
            assert np.array_equal(u, v)


@compiled
@pytest.mark.parametrize("n,r,q", [(4, 1, 2), (5, 2, 2), (4, 1, 3)])
def test_strong_kernels_agree(n, r, q):
    cells = np.ascontiguousarray(full(n, r, q).cells, dtype=np.int32)
    ident = full(n, r, q).identity_vid
    for c in (cells, np.ascontiguousarray(cells.T)):
        a = _backend.strong_rows(c, ident, backend="compiled")
        b = _backend.strong_rows(c, ident, backend="python")
        assert all(np.array_equal(u, v) for u, v in zip(a, b))
        j = _backend.strong_rows(c, ident, jobs=2, backend="compiled")
        assert all(np.array_equal(u, v) for u, v in zip(a, j))


@compiled
def test_strong_kernels_agree_on_random_tables():
    rng = np.random.default_rng(9)
    for _ in range(20):
        R, C = rng.integers(1, 100, 2)
        cells = rng.integers(0, 4, (R, C)).astype(np.int32)
        a = _backend.strong_rows(cells, 0, backend="compiled")
        b = _backend.strong_rows(cells, 0, backend="python")
        assert all(np.array_equal(u, v) for u, v in zip(a, b))
    empty = _backend.strong_rows(np.zeros((3, 3), dtype=np.int32), -1)
    assert (empty[0] == -1).all()
