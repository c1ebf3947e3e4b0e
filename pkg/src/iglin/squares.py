"""Singular squares of the rank-r D-class.

A square is a quadruple (x, x', y, y') of column/row ids with all four cells
of the structure matrix nonzero. It is singular exactly when

    P(y, x) P(y', x)^-1 == P(y, x') P(y', x')^-1

in GL_r. Squares are never materialized wholesale; they are checked on demand.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .gf import FieldCtx
from .matspace import Mat, MatError, inverse, is_rre, matmul, rank, transpose
from .tables import ProductTable, ZERO_IF_SINGULAR, value_code


@dataclass(frozen=True)
class SingularSquare:
    x: int
    x2: int
    y: int
    y2: int

    def cells(self) -> tuple:
        """(row, col) of the four cells: (y,x), (y2,x), (y,x2), (y2,x2)."""
        return ((self.y, self.x), (self.y2, self.x), (self.y, self.x2), (self.y2, self.x2))


class _QuotientTable:
    """code(value(a) * value(b)^-1) for every pair of nonzero value-ids."""

    def __init__(self, P: ProductTable):
        nv = P.nvalues
        self.table = np.full((nv, nv), -1, dtype=np.int64)
        vals = [P.value(v) for v in range(nv)]
        for b in range(nv):
            if P.is_zero(b):
                continue
            binv = inverse(vals[b])
            for a in range(nv):
                if not P.is_zero(a):
                    self.table[a, b] = value_code(matmul(vals[a], binv).to_array()[None], P.ctx.q)[0]


def _quotients(P: ProductTable) -> np.ndarray:
    qt = P.__dict__.get("_quot")
    if qt is None:
        qt = _QuotientTable(P).table
        P.__dict__["_quot"] = qt
    return qt


def singular_mask(P: ProductTable, x, x2, y, y2) -> np.ndarray:
    """Vectorized singularity test; False wherever a cell is zero."""
    if P.zero_rank_policy != ZERO_IF_SINGULAR:
        raise ValueError("singularity is judged on the structure matrix")
    x, x2, y, y2 = (np.asarray(a, dtype=np.int64) for a in (x, x2, y, y2))
    c = P.cells
    a, b, a2, b2 = c[y, x], c[y2, x], c[y, x2], c[y2, x2]
    qt = _quotients(P)
    nonzero = (a != 0) & (b != 0) & (a2 != 0) & (b2 != 0)
    return nonzero & (qt[a, b] == qt[a2, b2])


def is_singular(P: ProductTable, x: int, x2: int, y: int, y2: int) -> bool:
    for i, bound in ((x, P.ncols), (x2, P.ncols), (y, P.nrows), (y2, P.nrows)):
        if not 0 <= i < bound:
            raise IndexError(f"id {i} out of range")
    if x == x2 or y == y2:
        return False
    return bool(singular_mask(P, [x], [x2], [y], [y2])[0])


@dataclass(frozen=True)
class Stage3Square:
    """The square certifying f_B f_A = f_AB."""

    A: Mat
    B: Mat
    Y: Mat  # [0 | I | A | 0]
    Y2: Mat  # [0 | 0 | I | 0]
    X: Mat  # [0 ; 0 ; I ; 0]
    X2: Mat  # [I ; 0 ; B ; 0]

    def products(self) -> dict:
        return {
            "YX": matmul(self.Y, self.X),
            "YX2": matmul(self.Y, self.X2),
            "Y2X": matmul(self.Y2, self.X),
            "Y2X2": matmul(self.Y2, self.X2),
        }

    def ids(self, enum) -> SingularSquare:
        return SingularSquare(enum.id_of_x(self.X), enum.id_of_x(self.X2), enum.id_of_y(self.Y), enum.id_of_y(self.Y2))


def stage3_square(A: Mat, B: Mat, n: int, r: int) -> Stage3Square:
    if n <= 3 * r:
        raise ValueError(f"the square needs n > 3r, got n={n}, r={r}")
    if (A.rows, A.cols, B.rows, B.cols) != (r, r, r, r):
        raise MatError("A and B must be r x r")
    if rank(A) < r or rank(B) < r:
        raise MatError("A and B must be invertible")
    ctx = A.ctx
    Ir = Mat.identity(ctx, r)

    def block_row(blocks):
        # blocks: list of r x r mats or None for zeros, then pad to n columns
        rows = []
        for i in range(r):
            row = []
            for blk in blocks:
                row.extend(blk.row(i) if blk is not None else [0] * r)
            row.extend([0] * (n - len(row)))
            rows.append(row)
        return Mat.from_rows(ctx, rows)

    Y = block_row([None, Ir, A])
    Y2 = block_row([None, None, Ir])
    X = transpose(block_row([None, None, Ir]))
    X2 = transpose(block_row([Ir, None, transpose(B)]))
    sq = Stage3Square(A, B, Y, Y2, X, X2)
    for m in (Y, Y2, transpose(X), transpose(X2)):
        if not is_rre(m) or rank(m) != r:
            raise MatError("constructed square left Y_r / X_r")
    return sq


def squares_through(P: ProductTable, cell, cell2) -> Iterator[SingularSquare]:
    """Singular squares containing both cells, which share a row or a column."""
    (y, x), (y2, x2) = cell, cell2
    if (y, x) == (y2, x2) or (y != y2 and x != x2):
        raise ValueError("cells must be distinct and share a row or a column")
    if y == y2:
        cand = np.flatnonzero((P.cells[:, x] != 0) & (P.cells[:, x2] != 0))
        cand = cand[cand != y]
        ok = singular_mask(P, np.full(len(cand), x), np.full(len(cand), x2), np.full(len(cand), y), cand)
        for yy in cand[ok].tolist():
            yield SingularSquare(x, x2, y, yy)
    else:
        cand = np.flatnonzero((P.cells[y, :] != 0) & (P.cells[y2, :] != 0))
        cand = cand[cand != x]
        ok = singular_mask(P, np.full(len(cand), x), cand, np.full(len(cand), y), np.full(len(cand), y2))
        for xx in cand[ok].tolist():
            yield SingularSquare(x, xx, y, y2)


def all_invertible(r: int, ctx: FieldCtx) -> list[Mat]:
    """GL_r(F_q) in code order."""
    from .tables import all_matrices

    out = []
    for a in all_matrices(r, r, ctx.q):
        m = Mat.from_array(ctx, a)
        if rank(m) == r:
            out.append(m)
    return out
