"""Product tables: the Rees structure matrix P_r and the full tables T.

A table stores one small value-id per cell. Distinct product matrices are
interned in a pool (``values``/``codes``/``ranks`` indexed by value-id). A
product matrix ``M`` (k x k) is keyed by ``sum(M[i, j] * q**(i*k + j))``.

Under ``ZERO_IF_SINGULAR`` (the structure matrix) value-id 0 is the adjoined
zero and stands for every singular product; under ``KEEP_ALL`` every product
is kept and the zero matrix, whenever it occurs, is value-id 0.
"""

from __future__ import annotations

import os
import threading
from dataclasses import dataclass, field

import numpy as np

from .enumeration import Enumeration, enumerate_Y
from .gf import FieldCtx
from .matspace import Mat, rank

ZERO_IF_SINGULAR = "zero_if_singular"
KEEP_ALL = "keep_all"

DEFAULT_CELL_BUDGET = int(float(os.environ.get("IGLIN_BUDGET", 2e8)))
TMK_SIZE_BUDGET = 4096

_BLOCK_BYTES = 64 << 20


class BudgetError(RuntimeError):
    """A requested table would exceed the configured size budget."""


def value_code(arr: np.ndarray, q: int) -> np.ndarray:
    """Key of each trailing (k, k) matrix of ``arr``."""
    k = arr.shape[-1]
    w = q ** np.arange(k * k, dtype=np.int64)
    return (arr.reshape(arr.shape[:-2] + (k * k,)).astype(np.int64) * w).sum(-1)


def decode_value(code: int, k: int, ctx: FieldCtx) -> Mat:
    out = []
    for _ in range(k * k):
        out.append(code % ctx.q)
        code //= ctx.q
    return Mat(k, k, tuple(out), ctx)


def batched_products(left: np.ndarray, right: np.ndarray, ctx: FieldCtx) -> np.ndarray:
    """Key of ``left[a] @ right[b]`` for all a, b.

    ``left`` is (A, k, m), ``right`` is (B, m, k); result is (A, B) int64.
    """
    na, k, m = left.shape
    nb = right.shape[0]
    q = ctx.q
    out = np.empty((na, nb), dtype=np.int64)
    w = q ** np.arange(k * k, dtype=np.int64)
    step = max(1, _BLOCK_BYTES // max(1, nb * k * k * 8))
    if ctx.is_prime:
        rt = right.astype(np.int64).transpose(1, 0, 2).reshape(m, nb * k)
        for s in range(0, na, step):
            blk = left[s:s + step].astype(np.int64)
            prod = (blk.reshape(-1, m) @ rt) % q
            prod = prod.reshape(len(blk), k, nb, k).transpose(0, 2, 1, 3)
            out[s:s + step] = (prod.reshape(len(blk), nb, k * k) * w).sum(-1)
        return out
    addt, mult = ctx.add_table, ctx.mul_table
    rl = right.astype(np.intp)
    for s in range(0, na, step):
        blk = left[s:s + step].astype(np.intp)
        acc_code = np.zeros((len(blk), nb), dtype=np.int64)
        for i in range(k):
            for j in range(k):
                acc = np.zeros((len(blk), nb), dtype=np.intp)
                for t in range(m):
                    acc = addt[acc, mult[blk[:, i, t][:, None], rl[None, :, t, j]]]
                acc_code += acc * w[i * k + j]
        out[s:s + step] = acc_code
    return out


def all_matrices(rows: int, cols: int, q: int) -> np.ndarray:
    """Every rows x cols matrix over F_q, ordered by base-q code (first entry most significant)."""
    count = q ** (rows * cols)
    idx = np.arange(count)
    powers = q ** np.arange(rows * cols - 1, -1, -1)
    digits = (idx[:, None] // powers[None, :]) % q
    return digits.reshape(count, rows, cols).astype(np.uint8)


@dataclass(eq=False)
class ProductTable:
    kind: str  # "P", "T" or "Tmk"
    ctx: FieldCtx
    k: int  # value matrices are k x k
    row_index: str
    col_index: str
    cells: np.ndarray  # (nrows, ncols) value-ids
    codes: np.ndarray  # value-id -> key (-1 for the adjoined zero)
    ranks: np.ndarray  # value-id -> rank
    zero_rank_policy: str
    identity_vid: int  # -1 when I_k never occurs
    enum: Enumeration | None = None
    row_mats: np.ndarray | None = field(default=None, repr=False)
    col_mats: np.ndarray | None = field(default=None, repr=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)
    _occ: dict = field(default_factory=dict, repr=False)

    @property
    def shape(self):
        return self.cells.shape

    @property
    def nrows(self):
        return self.cells.shape[0]

    @property
    def ncols(self):
        return self.cells.shape[1]

    @property
    def nvalues(self):
        return len(self.codes)

    def cell(self, row: int, col: int) -> int:
        if not (0 <= row < self.nrows and 0 <= col < self.ncols):
            raise IndexError(f"cell ({row}, {col}) outside a {self.nrows}x{self.ncols} table")
        return int(self.cells[row, col])

    def value(self, vid: int) -> Mat:
        if not 0 <= vid < self.nvalues:
            raise IndexError(f"value-id {vid} not in pool")
        code = int(self.codes[vid])
        if code < 0:
            return Mat.zeros(self.ctx, self.k, self.k)
        return decode_value(code, self.k, self.ctx)

    def vid_of(self, m: Mat) -> int | None:
        code = int(value_code(m.to_array()[None], self.ctx.q)[0])
        if self.zero_rank_policy == ZERO_IF_SINGULAR and rank(m) < self.k:
            return 0
        hit = np.flatnonzero(self.codes == code)
        return int(hit[0]) if len(hit) else None

    def is_zero(self, vid: int) -> bool:
        return self.zero_rank_policy == ZERO_IF_SINGULAR and vid == 0

    def row_mat(self, i: int) -> Mat:
        return Mat.from_array(self.ctx, self.row_mats[i])

    def col_mat(self, j: int) -> Mat:
        return Mat.from_array(self.ctx, self.col_mats[j])

    def occurrences(self, vid: int) -> tuple[np.ndarray, np.ndarray]:
        """(rows, cols) of every cell holding ``vid``, memoized."""
        hit = self._occ.get(vid)
        if hit is None:
            with self._lock:
                hit = self._occ.get(vid)
                if hit is None:
                    rows, cols = np.nonzero(self.cells == vid)
                    hit = (rows.astype(np.int32), cols.astype(np.int32))
                    self._occ[vid] = hit
        return hit

    def value_counts(self) -> np.ndarray:
        return np.bincount(self.cells.ravel(), minlength=self.nvalues)

    def stats(self) -> dict:
        counts = self.value_counts()
        nonzero = int(counts.sum() - (counts[0] if self.zero_rank_policy == ZERO_IF_SINGULAR else 0))
        idem = int(counts[self.identity_vid]) if self.identity_vid >= 0 else 0
        return {
            "rows": self.nrows,
            "cols": self.ncols,
            "nonzero": nonzero,
            "distinct_values": int((counts > 0).sum()),
            "idempotent_cells": idem,
        }


def _check_budget(cells: int, budget: int | None):
    budget = DEFAULT_CELL_BUDGET if budget is None else budget
    if cells > budget:
        raise BudgetError(f"table needs {cells} cells, budget is {budget}; raise --budget or IGLIN_BUDGET")


def _intern(keys: np.ndarray, k: int, ctx: FieldCtx, policy: str):
    distinct = np.unique(keys)
    ranks = np.array([rank(decode_value(int(c), k, ctx)) for c in distinct], dtype=np.int64)
    if policy == ZERO_IF_SINGULAR:
        keep = distinct[ranks == k]
        codes = np.concatenate([[-1], keep]).astype(np.int64)
        vranks = np.concatenate([[0], np.full(len(keep), k)]).astype(np.int64)
        lut_codes, lut_vids = keep, np.arange(1, len(keep) + 1)
    else:
        codes, vranks = distinct.astype(np.int64), ranks
        lut_codes, lut_vids = distinct, np.arange(len(distinct))
    dtype = np.uint8 if len(codes) <= 256 else np.uint16 if len(codes) <= 65536 else np.uint32
    pos = np.searchsorted(lut_codes, keys)
    pos = np.clip(pos, 0, max(len(lut_codes) - 1, 0))
    if len(lut_codes):
        found = lut_codes[pos] == keys
        cells = np.where(found, lut_vids[pos], 0).astype(dtype)
    else:
        cells = np.zeros(keys.shape, dtype=dtype)
    ident = int(value_code(np.eye(k, dtype=np.int64)[None], ctx.q)[0])
    hit = np.flatnonzero(codes == ident)
    identity_vid = int(hit[0]) if len(hit) else -1
    return cells, codes, vranks, identity_vid


def _rees_table(enum: Enumeration, policy: str, budget: int | None) -> ProductTable:
    if not 1 <= enum.r < enum.n:
        raise ValueError(f"need 1 <= r < n, got n={enum.n}, r={enum.r}")
    N = len(enum)
    _check_budget(N * N, budget)
    xs = enum.mats.transpose(0, 2, 1)
    keys = batched_products(enum.mats, xs, enum.ctx)
    cells, codes, ranks, ident = _intern(keys, enum.r, enum.ctx, policy)
    return ProductTable(
        kind="P" if policy == ZERO_IF_SINGULAR else "T",
        ctx=enum.ctx,
        k=enum.r,
        row_index=f"Y_{enum.r}",
        col_index=f"X_{enum.r}",
        cells=cells,
        codes=codes,
        ranks=ranks,
        zero_rank_policy=policy,
        identity_vid=ident,
        enum=enum,
        row_mats=enum.mats,
        col_mats=xs,
    )


def build_P(n: int, r: int, ctx: FieldCtx, budget: int | None = None, enum: Enumeration | None = None) -> ProductTable:
    """Structure matrix: cell (Y, X) is YX when rank(YX) = r, else the zero marker."""
    enum = enum or enumerate_Y(n, r, ctx)
    return _rees_table(enum, ZERO_IF_SINGULAR, budget)


def build_T_full(n: int, r: int, ctx: FieldCtx, budget: int | None = None, enum: Enumeration | None = None) -> ProductTable:
    """Same index sets as the structure matrix, every product YX kept."""
    enum = enum or enumerate_Y(n, r, ctx)
    return _rees_table(enum, KEEP_ALL, budget)


def build_T_mk(m: int, k: int, ctx: FieldCtx, size_budget: int = TMK_SIZE_BUDGET) -> ProductTable:
    """Rows: all k x m matrices B; columns: all m x k matrices A; cell BA."""
    if not 1 <= k <= m:
        raise ValueError(f"need 1 <= k <= m, got m={m}, k={k}")
    size = ctx.q ** (k * m)
    if size > size_budget:
        raise BudgetError(f"T_{{{m},{k}}} over F_{ctx.q} has {size} rows, budget is {size_budget}")
    rows = all_matrices(k, m, ctx.q)
    cols = all_matrices(m, k, ctx.q)
    keys = batched_products(rows, cols, ctx)
    cells, codes, ranks, ident = _intern(keys, k, ctx, KEEP_ALL)
    return ProductTable(
        kind="Tmk",
        ctx=ctx,
        k=k,
        row_index=f"M_{k}x{m}",
        col_index=f"M_{m}x{k}",
        cells=cells,
        codes=codes,
        ranks=ranks,
        zero_rank_policy=KEEP_ALL,
        identity_vid=ident,
        row_mats=rows,
        col_mats=cols,
    )


def rees_from_full(t: ProductTable) -> ProductTable:
    """Derive the structure matrix from a full table without recomputing products."""
    if t.kind != "T":
        raise ValueError("expected a full Rees-index table")
    invertible = t.ranks == t.k
    new_vid = np.zeros(t.nvalues, dtype=np.int64)
    new_vid[invertible] = np.arange(1, invertible.sum() + 1)
    codes = np.concatenate([[-1], t.codes[invertible]])
    ranks = np.concatenate([[0], t.ranks[invertible]])
    ident = int(new_vid[t.identity_vid]) if t.identity_vid >= 0 else -1
    return ProductTable(
        kind="P",
        ctx=t.ctx,
        k=t.k,
        row_index=t.row_index,
        col_index=t.col_index,
        cells=new_vid.astype(t.cells.dtype)[t.cells],
        codes=codes,
        ranks=ranks,
        zero_rank_policy=ZERO_IF_SINGULAR,
        identity_vid=ident,
        enum=t.enum,
        row_mats=t.row_mats,
        col_mats=t.col_mats,
    )
