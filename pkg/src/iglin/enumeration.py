"""Enumerate the rank-r RRE matrices Y_r and their transposes X_r.

Ids are dense and reproducible: regions come in lexicographic order of their
leading-column sets and, inside a region, free entries are counted like digits
of a base-q number (first free position in row-major order most significant).
The id of an X is the id of its transpose, so the two index sets share ids
and regions.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .gf import FieldCtx
from .matspace import Mat, SubsetR, transpose


def region_free_positions(n: int, subset: SubsetR) -> list[tuple[int, int]]:
    """0-based (row, col) positions left free by RRE in the given region."""
    lead = [i - 1 for i in subset]
    leadset = set(lead)
    return [(i, j) for i, c in enumerate(lead) for j in range(c + 1, n) if j not in leadset]


@dataclass(frozen=True, eq=False)
class YIndex:
    id: int
    mat: Mat
    region: SubsetR


@dataclass(frozen=True, eq=False)
class XIndex:
    id: int
    mat: Mat
    region: SubsetR


@dataclass(eq=False)
class Enumeration:
    """Y_r with region slices; X_r is available through :meth:`X`."""

    n: int
    r: int
    ctx: FieldCtx
    mats: np.ndarray  # (N, r, n) codes, row i is Y_i
    subsets: list  # region subsets, in id order
    slices: dict  # subset -> (start, stop)
    region_of: np.ndarray = field(repr=False)  # id -> index into subsets

    def __len__(self):
        return len(self.mats)

    def Y(self, i: int) -> YIndex:
        return YIndex(i, Mat.from_array(self.ctx, self.mats[i]), self.subsets[self.region_of[i]])

    def X(self, i: int) -> XIndex:
        return XIndex(i, transpose(Mat.from_array(self.ctx, self.mats[i])), self.subsets[self.region_of[i]])

    def y_mat(self, i: int) -> Mat:
        return Mat.from_array(self.ctx, self.mats[i])

    def x_mat(self, i: int) -> Mat:
        return transpose(self.y_mat(i))

    def region(self, i: int) -> SubsetR:
        return self.subsets[self.region_of[i]]

    def region_ids(self, subset: SubsetR) -> range:
        return range(*self.slices[tuple(subset)])

    @cached_property
    def _lookup(self) -> dict:
        return {m.tobytes(): i for i, m in enumerate(self.mats)}

    def id_of_y(self, m: Mat) -> int:
        """Id of an r x n RRE matrix; KeyError when it is not in Y_r."""
        key = np.array(m.entries, dtype=self.mats.dtype).reshape(self.r, self.n).tobytes()
        return self._lookup[key]

    def id_of_x(self, m: Mat) -> int:
        return self.id_of_y(transpose(m))

    def ids_of_subset_identity(self) -> dict:
        """subset -> id of the scattered identity I(subset), for every region."""
        return {s: self.slices[s][0] for s in self.subsets}


def enumerate_Y(n: int, r: int, ctx: FieldCtx) -> Enumeration:
    if not 1 <= r <= n:
        raise ValueError(f"need 1 <= r <= n, got n={n}, r={r}")
    q = ctx.q
    blocks = []
    subsets = []
    slices = {}
    region_of = []
    start = 0
    for comb in itertools.combinations(range(1, n + 1), r):
        free = region_free_positions(n, comb)
        count = q ** len(free)
        block = np.zeros((count, r, n), dtype=np.uint8)
        for i, c in enumerate(comb):
            block[:, i, c - 1] = 1
        if free:
            # digits of 0..count-1, most significant first
            idx = np.arange(count)
            rows = np.array([f[0] for f in free])
            cols = np.array([f[1] for f in free])
            powers = q ** np.arange(len(free) - 1, -1, -1)
            digits = (idx[:, None] // powers[None, :]) % q
            block[:, rows, cols] = digits
        blocks.append(block)
        slices[comb] = (start, start + count)
        region_of.extend([len(subsets)] * count)
        subsets.append(comb)
        start += count
    mats = np.concatenate(blocks)
    mats.setflags(write=False)
    return Enumeration(n, r, ctx, mats, subsets, slices, np.array(region_of, dtype=np.int32))


def hasse_parent(subset: SubsetR) -> SubsetR:
    """The unique subset covered by ``subset`` in the ⪯ order."""
    s = list(subset)
    m = next((i for i, a in enumerate(s) if a != i + 1), None)
    if m is None:
        raise ValueError("the minimum {1..r} has no parent")
    s[m] -= 1
    return tuple(s)


def hasse_parent_index(subset: SubsetR) -> int:
    """0-based position that :func:`hasse_parent` decrements."""
    return next(i for i, a in enumerate(subset) if a != i + 1)


def preceq(s: SubsetR, t: SubsetR) -> bool:
    s, t = tuple(s), tuple(t)
    base = tuple(range(1, len(t) + 1))
    while True:
        if s == t:
            return True
        if t == base:
            return False
        t = hasse_parent(t)


def region_order(n: int, r: int) -> dict:
    """Parent map of the Hasse tree on r-subsets of {1..n}."""
    base = tuple(range(1, r + 1))
    return {c: hasse_parent(c) for c in itertools.combinations(range(1, n + 1), r) if c != base}
