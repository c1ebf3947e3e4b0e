"""Dense matrices over F_q.

:class:`Mat` is an immutable value type; equality and hashing look only at
the shape and the entry codes. Everything here is written with plain Python
loops over the field tables. The bulk product tables live in
:mod:`iglin.tables`; this module is the small-scale (and independent) path.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .gf import FieldCtx, make_field

SubsetR = tuple  # strictly increasing tuple of 1-based indices


class MatError(ValueError):
    pass


@dataclass(frozen=True)
class Mat:
    rows: int
    cols: int
    entries: tuple
    ctx: FieldCtx = field(compare=False, hash=False, repr=False)

    def __post_init__(self):
        if len(self.entries) != self.rows * self.cols:
            raise MatError("entry count does not match shape")

    @classmethod
    def from_rows(cls, ctx: FieldCtx, rows: Sequence[Sequence[int]]) -> "Mat":
        rows = [list(r) for r in rows]
        ncols = len(rows[0]) if rows else 0
        if any(len(r) != ncols for r in rows):
            raise MatError("ragged rows")
        entries = tuple(int(v) for r in rows for v in r)
        if any(not 0 <= v < ctx.q for v in entries):
            raise MatError("entry code out of range")
        return cls(len(rows), ncols, entries, ctx)

    @classmethod
    def from_array(cls, ctx: FieldCtx, a: np.ndarray) -> "Mat":
        a = np.asarray(a)
        return cls(a.shape[0], a.shape[1], tuple(int(v) for v in a.ravel()), ctx)

    @classmethod
    def zeros(cls, ctx: FieldCtx, rows: int, cols: int) -> "Mat":
        return cls(rows, cols, (0,) * (rows * cols), ctx)

    @classmethod
    def identity(cls, ctx: FieldCtx, n: int) -> "Mat":
        return cls(n, n, tuple(1 if i == j else 0 for i in range(n) for j in range(n)), ctx)

    def __getitem__(self, ij):
        i, j = ij
        return self.entries[i * self.cols + j]

    def row(self, i: int) -> tuple:
        return self.entries[i * self.cols:(i + 1) * self.cols]

    def tolist(self) -> list[list[int]]:
        return [list(self.row(i)) for i in range(self.rows)]

    def to_array(self) -> np.ndarray:
        return np.array(self.entries, dtype=np.int64).reshape(self.rows, self.cols)

    @property
    def T(self) -> "Mat":
        return transpose(self)

    def __matmul__(self, other: "Mat") -> "Mat":
        return matmul(self, other)

    def __str__(self):
        return format_mat(self)


def transpose(m: Mat) -> Mat:
    e = m.entries
    return Mat(m.cols, m.rows, tuple(e[i * m.cols + j] for j in range(m.cols) for i in range(m.rows)), m.ctx)


def matmul(a: Mat, b: Mat) -> Mat:
    if a.cols != b.rows:
        raise MatError(f"cannot multiply {a.rows}x{a.cols} by {b.rows}x{b.cols}")
    if a.ctx != b.ctx:
        raise MatError("operands live over different fields")
    ctx = a.ctx
    add, mul = ctx._add, ctx._mul
    out = []
    for i in range(a.rows):
        arow = a.row(i)
        for j in range(b.cols):
            s = 0
            for k in range(a.cols):
                x = arow[k]
                if x:
                    s = add[s][mul[x][b.entries[k * b.cols + j]]]
            out.append(s)
    return Mat(a.rows, b.cols, tuple(out), ctx)


def _rre_rows(m: Mat) -> tuple[list[list[int]], list[int]]:
    ctx = m.ctx
    add, mul, neg = ctx._add, ctx._mul, ctx._neg
    rows = m.tolist()
    pivots = []
    r = 0
    for c in range(m.cols):
        piv = next((i for i in range(r, m.rows) if rows[i][c]), None)
        if piv is None:
            continue
        rows[r], rows[piv] = rows[piv], rows[r]
        s = ctx.inv(rows[r][c])
        rows[r] = [mul[s][v] for v in rows[r]]
        for i in range(m.rows):
            if i != r and rows[i][c]:
                f = neg[rows[i][c]]
                rows[i] = [add[v][mul[f][w]] for v, w in zip(rows[i], rows[r])]
        pivots.append(c)
        r += 1
        if r == m.rows:
            break
    return rows, pivots


def rre(m: Mat) -> Mat:
    rows, _ = _rre_rows(m)
    return Mat(m.rows, m.cols, tuple(v for row in rows for v in row), m.ctx)


def rank(m: Mat) -> int:
    return len(_rre_rows(m)[1])


def is_rre(m: Mat) -> bool:
    last = -1
    seen_zero = False
    for i in range(m.rows):
        row = m.row(i)
        lead = next((j for j, v in enumerate(row) if v), None)
        if lead is None:
            seen_zero = True
            continue
        if seen_zero or lead <= last or row[lead] != 1:
            return False
        if any(m[k, lead] for k in range(m.rows) if k != i):
            return False
        last = lead
    return True


def leading_cols(m: Mat) -> SubsetR:
    """LC(m) as a 1-based tuple. ``m`` must be RRE with full row rank."""
    if not is_rre(m):
        raise MatError("leading_cols needs a matrix in reduced row echelon form")
    out = []
    for i in range(m.rows):
        lead = next((j for j, v in enumerate(m.row(i)) if v), None)
        if lead is None:
            raise MatError("leading_cols needs full row rank")
        out.append(lead + 1)
    return tuple(out)


def leading_rows(m: Mat) -> SubsetR:
    """LR(m): leading rows of a matrix whose transpose is RRE."""
    return leading_cols(transpose(m))


def inverse(m: Mat) -> Mat:
    if m.rows != m.cols:
        raise MatError("only square matrices have inverses")
    n = m.rows
    ctx = m.ctx
    aug = Mat.from_rows(ctx, [list(m.row(i)) + [1 if i == j else 0 for j in range(n)] for i in range(n)])
    rows, pivots = _rre_rows(aug)
    if pivots[:n] != list(range(n)) or len(pivots) < n:
        raise MatError("matrix is singular")
    return Mat.from_rows(ctx, [row[n:] for row in rows])


def scattered_identity_sets(n: int, sets: Sequence[Iterable[int]], ctx: FieldCtx) -> Mat:
    """I(A_1|...|A_k): row j has a 1 in every column of A_j (1-based)."""
    sets = [sorted(set(s)) for s in sets]
    flat = [a for s in sets for a in s]
    if len(flat) != len(set(flat)):
        raise MatError("index sets overlap")
    if any(not 1 <= a <= n for a in flat):
        raise MatError("index out of range")
    entries = [0] * (len(sets) * n)
    for j, s in enumerate(sets):
        for a in s:
            entries[j * n + a - 1] = 1
    return Mat(len(sets), n, tuple(entries), ctx)


def scattered_identity(n: int, subset: SubsetR, ctx: FieldCtx) -> Mat:
    """I(i_1|...|i_r) for a strictly increasing 1-based subset."""
    subset = tuple(subset)
    if any(a >= b for a, b in zip(subset, subset[1:])):
        raise MatError("subset must be strictly increasing")
    return scattered_identity_sets(n, [[i] for i in subset], ctx)


def row_space_equal(a: Mat, b: Mat) -> bool:
    if a.cols != b.cols:
        raise MatError("row spaces live in different ambient spaces")
    ra, rb = rre(a), rre(b)
    k = max(a.rows, b.rows)
    # pad with zero rows so the canonical forms are comparable
    pa = ra.entries + (0,) * ((k - a.rows) * a.cols)
    pb = rb.entries + (0,) * ((k - b.rows) * b.cols)
    return pa == pb


def col_space_equal(a: Mat, b: Mat) -> bool:
    return row_space_equal(transpose(a), transpose(b))


def idempotent_of(x: Mat, y: Mat) -> Mat:
    """The idempotent X (YX)^{-1} Y of the H-class R(X) ∩ L(Y)."""
    yx = matmul(y, x)
    if rank(yx) < yx.rows:
        raise MatError("YX is singular; the H-class holds no idempotent")
    return matmul(matmul(x, inverse(yx)), y)


# --- text serialization -------------------------------------------------------

_HEX = "0123456789abcdef"


def format_mat(m: Mat) -> str:
    if m.ctx.q > 16:
        raise MatError("text format supports q <= 16")
    return f"{m.rows} {m.cols} {m.ctx.q} : " + " ".join(_HEX[v] for v in m.entries)


def parse_mat(text: str, ctx: FieldCtx | None = None) -> Mat:
    head, _, body = text.partition(":")
    try:
        rows, cols, q = (int(t) for t in head.split())
        entries = tuple(int(t, 16) for t in body.split())
    except ValueError as exc:
        raise MatError(f"malformed matrix text: {text!r}") from exc
    if ctx is None:
        ctx = make_field(q)
    elif ctx.q != q:
        raise MatError(f"matrix is over F_{q}, context is F_{ctx.q}")
    if len(entries) != rows * cols or any(v >= q for v in entries):
        raise MatError(f"malformed matrix text: {text!r}")
    return Mat(rows, cols, entries, ctx)
