"""Connectivity of value classes in product tables.

Two notions are used. lambda-connectivity joins cells of one value that share
a row or a column. Strong connectivity only joins two cells of a row (B, A),
(B, A') when a third row B1 carries the identity at both A and A' (and
symmetrically for columns). Strong components are computed by the row kernel
run once on the table and once on its transpose.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import breadth_first_order, connected_components

from . import _backend
from .errors import TheoremViolation
from .gf import FieldCtx
from .tables import ProductTable, build_T_mk


@dataclass
class LambdaComponents:
    vid: int
    rows: np.ndarray
    cols: np.ndarray
    labels: np.ndarray  # component per occurrence

    @property
    def count(self) -> int:
        return int(self.labels.max()) + 1 if len(self.labels) else 0


def lambda_components(t: ProductTable, vid: int) -> LambdaComponents:
    rows, cols = t.occurrences(vid)
    if len(rows) == 0:
        raise ValueError(f"value id {vid} does not occur in the table")
    # bipartite graph on (rows, cols); each occurrence is an edge
    R = t.nrows
    g = coo_matrix((np.ones(len(rows), dtype=np.int8), (rows, R + cols.astype(np.int64))), shape=(R + t.ncols,) * 2)
    _, lab = connected_components(g, directed=False)
    # renumber by first occurrence so labels are stable
    _, first, inv = np.unique(lab[rows], return_index=True, return_inverse=True)
    rank = np.argsort(np.argsort(first))
    return LambdaComponents(vid, rows, cols, rank[inv].astype(np.int32))


def check_lambda_theorem(m: int, k: int, ctx: FieldCtx, size_budget: int | None = None) -> dict:
    """lambda-components of every value of T_{m,k}.

    For k < m every value must be lambda-connected, for k = m every singular
    value must be. Invertible values at k = m are reported, not asserted.
    """
    t = build_T_mk(m, k, ctx) if size_budget is None else build_T_mk(m, k, ctx, size_budget)
    values = []
    ok = True
    for vid in range(t.nvalues):
        comp = lambda_components(t, vid)
        required = k < m or t.ranks[vid] < k
        connected = comp.count == 1
        ok &= connected or not required
        values.append(
            {
                "value": int(t.codes[vid]),
                "rank": int(t.ranks[vid]),
                "occurrences": len(comp.rows),
                "components": comp.count,
                "required": bool(required),
            }
        )
    return {"m": m, "k": k, "q": ctx.q, "ok": bool(ok), "values": values}


@dataclass
class StrongStep:
    kind: str  # "row": cells share a row, witness is a row; "col" the reverse
    witness: int


@dataclass
class StrongPath:
    vid: int
    cells: list  # [(row, col), ...]
    steps: list = field(default_factory=list)  # len(cells) - 1 StrongStep


@dataclass(eq=False)
class StrongComponents:
    """Strong components of every value of a table at once.

    ``row_parent[b, a]`` is the column of the BFS parent of cell (b, a) inside
    row b, ``row_wit`` the row carrying the identity at both columns.
    ``col_parent``/``col_wit`` are the same for columns (indexed [b, a]).
    """

    table: ProductTable
    row_parent: np.ndarray
    row_wit: np.ndarray
    col_parent: np.ndarray
    col_wit: np.ndarray
    labels: np.ndarray  # global component per cell

    def counts(self) -> dict:
        """value-id -> number of strong components."""
        pairs = np.unique(np.stack([self.table.cells.ravel().astype(np.int64), self.labels.ravel()]), axis=1)
        vids, n = np.unique(pairs[0], return_counts=True)
        return dict(zip(vids.tolist(), n.tolist()))

    def local_edges(self, vid: int | None = None) -> dict:
        """Parent links of the local BFS forests, optionally for one value.

        Returns arrays (kind, row, col, row2, col2, witness) with kind 0 for
        row edges and 1 for column edges; the child cell comes first.
        """
        out = []
        for kind, par, wit in ((0, self.row_parent, self.row_wit), (1, self.col_parent, self.col_wit)):
            mask = par >= 0
            if vid is not None:
                mask &= self.table.cells == vid
            b, a = np.nonzero(mask)
            p = par[b, a].astype(np.int64)
            if kind == 0:
                b2, a2 = b, p
            else:
                b2, a2 = p, a
            out.append((np.full(len(b), kind, dtype=np.int8), b, a, b2, a2, wit[b, a].astype(np.int64)))
        return dict(zip(("kind", "row", "col", "row2", "col2", "witness"), (np.concatenate(c) for c in zip(*out))))

    def _value_graph(self, vid: int):
        """Local forest of one value as a CSR graph, cached per value."""
        cache = self.__dict__.setdefault("_graphs", {})
        if vid not in cache:
            e = self.local_edges(vid)
            C = self.table.ncols
            u = e["row"] * C + e["col"]
            v = e["row2"] * C + e["col2"]
            nodes = np.unique(np.concatenate([u, v]))
            iu, iv = np.searchsorted(nodes, u), np.searchsorted(nodes, v)
            n = len(nodes)
            g = coo_matrix((np.ones(len(iu), dtype=np.int8), (iu, iv)), shape=(n, n)).tocsr()
            # undirected edge key -> position, for witness lookup
            key = np.minimum(iu, iv) * n + np.maximum(iu, iv)
            order = np.argsort(key)
            cache[vid] = (nodes, g, key[order], e["kind"][order], e["witness"][order])
        return cache[vid]

    def path(self, cell, cell2) -> StrongPath | None:
        """Shortest path through local forest edges; None across components."""
        t = self.table
        (b, a), (b2, a2) = cell, cell2
        vid = int(t.cells[b, a])
        if int(t.cells[b2, a2]) != vid or self.labels[b, a] != self.labels[b2, a2]:
            return None
        if (b, a) == (b2, a2):
            return StrongPath(vid, [(b, a)], [])
        nodes, g, keys, kinds, wits = self._value_graph(vid)
        C, n = t.ncols, len(nodes)
        src = int(np.searchsorted(nodes, b * C + a))
        dst = int(np.searchsorted(nodes, b2 * C + a2))
        _, pred = breadth_first_order(g, src, directed=False, return_predecessors=True)
        chain = [dst]
        while chain[-1] != src:
            p = int(pred[chain[-1]])
            if p < 0:
                return None
            chain.append(p)
        chain.reverse()
        ch = np.array(chain)
        pos = np.searchsorted(keys, np.minimum(ch[:-1], ch[1:]) * n + np.maximum(ch[:-1], ch[1:]))
        cells = [divmod(int(nodes[i]), C) for i in chain]
        steps = [StrongStep("row" if k == 0 else "col", int(w)) for k, w in zip(kinds[pos], wits[pos])]
        return StrongPath(vid, cells, steps)


def strong_components(t: ProductTable, jobs: int = 1, backend: str | None = None) -> StrongComponents:
    cells = np.ascontiguousarray(t.cells, dtype=np.int32)
    ident = t.identity_vid
    rp, rw = _backend.strong_rows(cells, ident, jobs=jobs, backend=backend)
    cp, cw = _backend.strong_rows(np.ascontiguousarray(cells.T), ident, jobs=jobs, backend=backend)
    cp, cw = np.ascontiguousarray(cp.T), np.ascontiguousarray(cw.T)
    R, C = cells.shape
    # local roots by pointer jumping, then join row-roots and column-roots
    row_root = np.where(rp >= 0, rp, np.arange(C)[None, :]).astype(np.int64)
    while True:
        nxt = np.take_along_axis(row_root, row_root, axis=1)
        if np.array_equal(nxt, row_root):
            break
        row_root = nxt
    col_root = np.where(cp >= 0, cp, np.arange(R)[:, None]).astype(np.int64)
    while True:
        nxt = np.take_along_axis(col_root, col_root, axis=0)
        if np.array_equal(nxt, col_root):
            break
        col_root = nxt
    rnode = (np.arange(R)[:, None] * C + row_root).ravel()  # a root cell id
    cnode = (col_root * C + np.arange(C)[None, :]).ravel() + R * C
    g = coo_matrix((np.ones(R * C, dtype=np.int8), (rnode, cnode)), shape=(2 * R * C,) * 2)
    _, lab = connected_components(g, directed=False)
    labels = lab[rnode].reshape(R, C).astype(np.int32)
    return StrongComponents(t, rp, rw, cp, cw, labels)


def verify_strong_path(t: ProductTable, path: StrongPath) -> bool:
    """Check a strong path against a table's cells; ids index both tables alike."""
    cells = path.cells
    if not cells or len(path.steps) != len(cells) - 1:
        return False
    ident = t.identity_vid
    if ident < 0:
        return False
    vid = int(t.cells[cells[0]])
    if t.is_zero(vid):
        return False
    for c in cells:
        if int(t.cells[c]) != vid:
            return False
    for (b, a), (b2, a2), st in zip(cells, cells[1:], path.steps):
        w = st.witness
        if st.kind == "row":
            if b != b2 or a == a2 or not 0 <= w < t.nrows:
                return False
            if t.cells[w, a] != ident or t.cells[w, a2] != ident:
                return False
        elif st.kind == "col":
            if a != a2 or b == b2 or not 0 <= w < t.ncols:
                return False
            if t.cells[b, w] != ident or t.cells[b2, w] != ident:
                return False
        else:
            return False
    return True


ABSENT_LIST_CAP = 1 << 16


def check_strong_theorem(t: ProductTable, sc: StrongComponents | None = None) -> dict:
    """Every value occurring in the table must form a single strong component.

    Values of M_k(F_q) that never occur are listed as absent (when there are
    at most ABSENT_LIST_CAP matrices in all), not treated as failures.
    """
    sc = sc or strong_components(t)
    counts = sc.counts()
    values = [
        {"value": int(t.codes[vid]), "rank": int(t.ranks[vid]), "components": n}
        for vid, n in sorted(counts.items())
    ]
    bad = [v for v in values if v["components"] != 1]
    if bad:
        raise TheoremViolation(f"values split into several strong components: {bad[:3]}")
    total = t.ctx.q ** (t.k * t.k)
    absent = None
    if total <= ABSENT_LIST_CAP:
        present = {v["value"] for v in values}
        absent = [c for c in range(total) if c not in present]
    return {"values": values, "absent": absent, "ok": True}
