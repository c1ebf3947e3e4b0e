import itertools

import numpy as np
import pytest

from conftest import field, graph
from iglin.matspace import Mat, MatError, matmul
from iglin.squares import all_invertible, singular_mask, is_singular, squares_through, stage3_square
from oracles import matmul as brute_matmul


def brute_singular(P, x, x2, y, y2):
    """PQ^-1 == RS^-1 with inverses found by search over GL_r."""
    ctx, r = P.ctx, P.k
    mats = [P.row_mats[y], P.row_mats[y2]], [P.col_mats[x], P.col_mats[x2]]
    c = {}
    for (i, Y), (j, X) in itertools.product(enumerate(mats[0]), enumerate(mats[1])):
        c[i, j] = brute_matmul(Y.tolist(), X.tolist(), ctx.add, ctx.mul)
    eye = np.eye(r, dtype=int).tolist()
    cands = [m.tolist() for m in all_invertible(r, ctx)]

    def inv(m):
        for k in cands:
            if brute_matmul(m, k, ctx.add, ctx.mul) == eye:
                return k
        return None

    if any(inv(v) is None for v in c.values()):
        return False
    lhs = brute_matmul(c[0, 0], inv(c[1, 0]), ctx.add, ctx.mul)
    rhs = brute_matmul(c[0, 1], inv(c[1, 1]), ctx.add, ctx.mul)
    return lhs == rhs


@pytest.mark.parametrize("n,r,q", [(4, 1, 3), (4, 2, 2), (3, 1, 5)])
def test_singular_mask_matches_brute_force(n, r, q):
    P, _, _ = graph(n, r, q)
    rng = np.random.default_rng(7)
    N = P.nrows
    quads = rng.integers(0, N, (400, 4))
    # bias toward nonzero squares so both outcomes are exercised
    got = singular_mask(P, *quads.T)
    for (x, x2, y, y2), g in zip(quads.tolist(), got.tolist()):
        assert g == brute_singular(P, x, x2, y, y2)


def test_every_identity_four_cycle_is_singular():
    P, _, _ = graph(4, 1, 2)
    ident = P.cells == P.identity_vid
    count = 0
    for x, x2 in itertools.combinations(range(P.ncols), 2):
        rows = np.flatnonzero(ident[:, x] & ident[:, x2])
        for y, y2 in itertools.combinations(rows.tolist(), 2):
            assert is_singular(P, x, x2, y, y2)
            count += 1
    assert count > 0


def test_nonsingular_example_found_by_search():
    P, _, _ = graph(4, 1, 3)
    one = int(np.flatnonzero(P.codes == 1)[0])
    two = int(np.flatnonzero(P.codes == 2)[0])
    C = P.cells
    found = None
    for x, x2 in itertools.combinations(range(P.ncols), 2):
        rows = np.flatnonzero((C[:, x] == one) & (C[:, x2] == one))
        other = np.flatnonzero((C[:, x] == one) & (C[:, x2] == two))
        if len(rows) and len(other):
            found = (x, x2, int(rows[0]), int(other[0]))
            break
    assert found is not None
    assert not is_singular(P, *found)
    assert not brute_singular(P, *found)


def test_symmetry_and_degenerate():
    P, _, _ = graph(4, 2, 2)
    rng = np.random.default_rng(1)
    for x, x2, y, y2 in rng.integers(0, P.nrows, (300, 4)).tolist():
        if x != x2 and y != y2:
            assert is_singular(P, x, x2, y, y2) == is_singular(P, x2, x, y2, y)
    assert not is_singular(P, 0, 0, 0, 1)
    with pytest.raises(IndexError):
        is_singular(P, 0, 1, 0, P.nrows)


def test_stage3_scalar_example():
    ctx = field(3)
    two = Mat.from_rows(ctx, [[2]])
    sq = stage3_square(two, two, 4, 1)
    pr = sq.products()
    assert [pr[k].tolist() for k in ("YX", "YX2", "Y2X", "Y2X2")] == [[[2]], [[1]], [[1]], [[2]]]
    P, _, _ = graph(4, 1, 3)
    ids = sq.ids(P.enum)
    assert is_singular(P, ids.x, ids.x2, ids.y, ids.y2)


@pytest.mark.parametrize("n,r,q", [(7, 2, 2), (4, 1, 3), (7, 2, 3)])
def test_stage3_exhaustive(n, r, q):
    ctx = field(q)
    G = all_invertible(r, ctx)
    P = graph(n, r, q)[0] if q ** (r * (n - r)) < 5000 else None
    for A, B in itertools.product(G, G):
        sq = stage3_square(A, B, n, r)
        pr = sq.products()
        assert pr["YX"] == A and pr["YX2"] == matmul(A, B)
        assert pr["Y2X"] == Mat.identity(ctx, r) and pr["Y2X2"] == B
        if P is not None:
            ids = sq.ids(P.enum)
            assert is_singular(P, ids.x, ids.x2, ids.y, ids.y2)


def test_stage3_preconditions():
    ctx = field(2)
    I = Mat.identity(ctx, 2)
    with pytest.raises(ValueError):
        stage3_square(I, I, 6, 2)
    with pytest.raises(MatError):
        stage3_square(Mat.zeros(ctx, 2, 2), I, 7, 2)


def test_gl_sizes():
    assert len(all_invertible(2, field(2))) == 6
    assert len(all_invertible(2, field(3))) == 48
    assert len(all_invertible(1, field(4))) == 3


def test_squares_through_row_pair_with_identity_witness():
    P, _, _ = graph(4, 1, 2)
    C = P.cells
    # two cells in one row, a second row with the identity in both columns
    y = 3
    xs = np.flatnonzero(C[y] != 0)
    x, x2 = int(xs[0]), int(xs[1])
    found = list(squares_through(P, (y, x), (y, x2)))
    assert found and all(is_singular(P, s.x, s.x2, s.y, s.y2) for s in found)
    assert all((s.y, s.x, s.x2) == (y, x, x2) for s in found)
    col = list(squares_through(P, (y, x), (int(np.flatnonzero(C[:, x] != 0)[-1]), x)))
    assert all(is_singular(P, s.x, s.x2, s.y, s.y2) for s in col)
    with pytest.raises(ValueError):
        list(squares_through(P, (0, 0), (1, 1)))
