import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import field
from iglin.matspace import (
    Mat,
    MatError,
    col_space_equal,
    format_mat,
    idempotent_of,
    inverse,
    is_rre,
    leading_cols,
    matmul,
    parse_mat,
    rank,
    row_space_equal,
    rre,
    scattered_identity,
    scattered_identity_sets,
    transpose,
)
from oracles import brute_rank, is_rre_brute, matmul as brute_matmul


def mats(q, rows, cols):
    return st.lists(st.integers(0, q - 1), min_size=rows * cols, max_size=rows * cols).map(
        lambda e: Mat(rows, cols, tuple(e), field(q))
    )


def all_mats(q, rows, cols):
    ctx = field(q)
    for e in itertools.product(range(q), repeat=rows * cols):
        yield Mat(rows, cols, e, ctx)


@pytest.mark.parametrize("q", [2, 3])
def test_rre_idempotent_and_rank_exhaustive(q):
    ctx = field(q)
    for m in all_mats(q, 2, 3):
        r = rre(m)
        assert rre(r) == r
        assert rank(m) == brute_rank([list(row) for row in m.tolist()], q, ctx.add, ctx.mul)
        assert row_space_equal(m, r)


@given(mats(4, 3, 4))
@settings(max_examples=60, deadline=None)
def test_rank_matches_span_size_over_f4(m):
    ctx = field(4)
    assert rank(m) == brute_rank(m.tolist(), 4, ctx.add, ctx.mul)


@given(mats(3, 3, 2), mats(3, 2, 4))
@settings(max_examples=60, deadline=None)
def test_matmul_matches_oracle(a, b):
    ctx = field(3)
    assert matmul(a, b).tolist() == brute_matmul(a.tolist(), b.tolist(), ctx.add, ctx.mul)
    assert (a @ b) == matmul(a, b)
    assert transpose(matmul(a, b)) == matmul(transpose(b), transpose(a))


def test_is_rre_agrees_with_oracle():
    for m in all_mats(2, 2, 3):
        full_rank = rank(m) == 2
        assert (is_rre(m) and full_rank) == is_rre_brute(m.tolist())


def test_inverse():
    for m in all_mats(3, 2, 2):
        if rank(m) == 2:
            assert matmul(m, inverse(m)) == Mat.identity(m.ctx, 2)
        else:
            with pytest.raises(MatError):
                inverse(m)


def test_leading_cols_one_based():
    ctx = field(2)
    m = Mat.from_rows(ctx, [[0, 1, 1, 0], [0, 0, 0, 1]])
    assert leading_cols(m) == (2, 4)
    with pytest.raises(MatError):
        leading_cols(Mat.from_rows(ctx, [[1, 1], [1, 0]]))


def test_scattered_identity():
    ctx = field(2)
    assert scattered_identity(4, (1, 3), ctx).tolist() == [[1, 0, 0, 0], [0, 0, 1, 0]]
    assert scattered_identity_sets(3, [{1, 2}, {3}], ctx).tolist() == [[1, 1, 0], [0, 0, 1]]


def test_space_equality():
    ctx = field(3)
    a = Mat.from_rows(ctx, [[1, 2, 0], [0, 0, 1]])
    b = Mat.from_rows(ctx, [[1, 2, 1], [2, 1, 0]])
    assert row_space_equal(a, b)
    assert col_space_equal(transpose(a), transpose(b))
    assert not row_space_equal(a, Mat.from_rows(ctx, [[1, 0, 0], [0, 1, 0]]))


def test_idempotent_of_postconditions():
    from iglin.enumeration import enumerate_Y

    ctx = field(2)
    enum = enumerate_Y(4, 2, ctx)
    rng = np.random.default_rng(3)
    hits = 0
    for _ in range(300):
        i, j = rng.integers(0, len(enum), 2)
        Y, X = enum.y_mat(i), enum.x_mat(j)
        if rank(matmul(Y, X)) < 2:
            with pytest.raises(MatError):
                idempotent_of(X, Y)
            continue
        hits += 1
        E = idempotent_of(X, Y)
        assert matmul(E, E) == E
        assert row_space_equal(E, Y)  # same L-class as Y
        assert col_space_equal(E, X)  # same R-class as X
    assert hits > 50


def test_text_round_trip():
    ctx = field(9)
    m = Mat.from_rows(ctx, [[0, 8, 3], [5, 1, 0]])
    text = format_mat(m)
    assert text == "2 3 9 : 0 8 3 5 1 0"
    assert parse_mat(text) == m
    with pytest.raises(MatError):
        parse_mat("2 2 2 : 1 0 1")


def test_shape_errors():
    ctx = field(2)
    with pytest.raises(MatError):
        matmul(Mat.zeros(ctx, 2, 3), Mat.zeros(ctx, 2, 3))
    with pytest.raises(MatError):
        Mat.from_rows(ctx, [[0, 2]])
    with pytest.raises(MatError):
        Mat(1, 2, (0,), ctx)
