"""The presentation of the maximal subgroup and the three-stage reduction.

Generators f_{X,Y} are the nonzero cells of the structure matrix, numbered in
row-major (y, x) order. Relations are f = 1 on spanning-tree cells and one
relation per singular square. The reduction merges generators into classes:

1. every identity cell joins the unit (closure trace over the graph),
2. cells of one invertible value join each other (strong edges),
3. the squares [0|I|A|0], [0|0|I|0] x [0;0;I;0], [I;0;B;0] give f_B f_A = f_AB.

After stage 2 there is one class per value; stage 3 shows the classes
multiply like GL_r, so the presented group has order |GL_r(F_q)|.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .connectivity import StrongComponents
from .counts import gl_order
from .deltagraph import ColorState, DeltaGraph, SpanningTree, replay_trace
from .errors import TheoremViolation
from .matspace import Mat, format_mat, inverse, matmul, parse_mat, rank
from .squares import all_invertible, singular_mask, stage3_square
from .tables import BudgetError, ProductTable, value_code


@dataclass(eq=False)
class Presentation:
    P: ProductTable
    delta: DeltaGraph
    tree: SpanningTree
    gen_cells: np.ndarray = field(init=False, repr=False)  # flat y * N + x

    def __post_init__(self):
        self.gen_cells = np.flatnonzero(self.P.cells.ravel() != 0)

    @property
    def ngens(self) -> int:
        return len(self.gen_cells)

    def gen_of(self, y, x) -> np.ndarray:
        """Generator ids of cells; raises if a cell is zero."""
        flat = np.asarray(y, dtype=np.int64) * self.P.ncols + np.asarray(x, dtype=np.int64)
        g = np.searchsorted(self.gen_cells, flat)
        g = np.minimum(g, self.ngens - 1)
        if not np.all(self.gen_cells[g] == flat):
            raise KeyError("cell holds the zero marker, not a generator")
        return g

    def cell_of(self, g) -> tuple[np.ndarray, np.ndarray]:
        return np.divmod(self.gen_cells[np.asarray(g)], self.P.ncols)

    def tree_relations(self) -> np.ndarray:
        e = self.tree.edges
        return self.gen_of(self.delta.ey[e], self.delta.ex[e])


class ClassMap:
    """Partition of generators plus one virtual unit node (the last id)."""

    def __init__(self, ngens: int):
        self.labels = np.arange(ngens + 1, dtype=np.int64)
        self.unit = ngens

    def union(self, a, b) -> None:
        a = np.asarray(a, dtype=np.int64).ravel()
        b = np.asarray(b, dtype=np.int64).ravel()
        n = len(self.labels)
        rows = np.concatenate([np.arange(n), a])
        cols = np.concatenate([self.labels, b])
        g = coo_matrix((np.ones(len(rows), dtype=np.int8), (rows, cols)), shape=(n, n))
        ncomp, comp = connected_components(g, directed=False)
        low = np.full(ncomp, n, dtype=np.int64)
        np.minimum.at(low, comp, np.arange(n))
        self.labels = low[comp]

    def find(self, g) -> np.ndarray:
        return self.labels[np.asarray(g)]

    def in_unit(self, g) -> np.ndarray:
        return self.labels[np.asarray(g)] == self.labels[self.unit]

    @property
    def nclasses(self) -> int:
        return len(np.unique(self.labels))


@dataclass
class Stage2Evidence:
    """Strong edges used, as arrays; kind 0 = row edge, 1 = column edge."""

    kind: np.ndarray
    row: np.ndarray
    col: np.ndarray
    row2: np.ndarray
    col2: np.ndarray
    witness: np.ndarray

    def __len__(self):
        return len(self.kind)

    def squares(self):
        """(x, x2, y, y2) of the singular square behind every edge."""
        rowk = self.kind == 0
        x = self.col
        x2 = np.where(rowk, self.col2, self.witness)
        y = self.row
        y2 = np.where(rowk, self.witness, self.row2)
        return x, x2, y, y2

    def witness_cells(self):
        """The two identity cells each edge leans on, as (y, x) arrays."""
        rowk = self.kind == 0
        y1 = np.where(rowk, self.witness, self.row)
        x1 = np.where(rowk, self.col, self.witness)
        y2 = np.where(rowk, self.witness, self.row2)
        x2 = np.where(rowk, self.col2, self.witness)
        return (y1, x1), (y2, x2)


@dataclass
class Stage3Relation:
    A: Mat
    B: Mat
    AB: Mat
    x: int
    x2: int
    y: int
    y2: int


@dataclass(eq=False)
class CertificateChain:
    n: int
    r: int
    q: int
    modulus: tuple
    mode: str  # "theorem" or "exploratory"
    ngens: int
    tree_x: np.ndarray
    tree_y: np.ndarray
    trace_x: np.ndarray
    trace_y: np.ndarray
    trace_vx: np.ndarray
    trace_vy: np.ndarray
    nrounds: int
    stage2: Stage2Evidence
    stage3: list  # Stage3Relation
    class_values: list  # value codes, one per class, sorted
    nclasses: int
    group_order: int

    def squares(self):
        """Every cited square as (x, x2, y, y2) arrays."""
        s2 = self.stage2.squares()
        s3 = np.array([(s.x, s.x2, s.y, s.y2) for s in self.stage3], dtype=np.int64).reshape(-1, 4).T
        return tuple(
            np.concatenate([a, b, c]).astype(np.int64)
            for a, b, c in zip((self.trace_x, self.trace_vx, self.trace_y, self.trace_vy), s2, s3)
        )


def run_stage1(pres: Presentation, state: ColorState) -> ClassMap:
    if not state.all_blue:
        raise TheoremViolation(f"closure left {int((~state.blue).sum())} edges red")
    rep = replay_trace(pres.delta, pres.tree, state.new, state.via_x, state.via_y)
    if not rep:
        raise TheoremViolation(f"closure trace fails at step {rep.failed_step}: {rep.reason}")
    cm = ClassMap(pres.ngens)
    d = pres.delta
    edges = np.concatenate([pres.tree.edges, state.new])
    g = pres.gen_of(d.ey[edges], d.ex[edges])
    cm.union(g, np.full(len(g), cm.unit))
    return cm


def stage2_evidence(T: ProductTable, sc: StrongComponents) -> Stage2Evidence:
    # identity cells are already one class after stage 1
    e = sc.local_edges()
    v = T.cells[e["row"], e["col"]]
    keep = (T.ranks[v] == T.k) & (v != T.identity_vid)
    return Stage2Evidence(*(e[f][keep] for f in ("kind", "row", "col", "row2", "col2", "witness")))


def run_stage2(pres: Presentation, cm: ClassMap, ev: Stage2Evidence) -> dict:
    """Merge along strong edges; returns P value-id -> class label."""
    (wy1, wx1), (wy2, wx2) = ev.witness_cells()
    wit_ok = cm.in_unit(pres.gen_of(wy1, wx1)) & cm.in_unit(pres.gen_of(wy2, wx2))
    if not wit_ok.all():
        raise TheoremViolation("a strong edge leans on a cell outside the identity class")
    P = pres.P
    a = pres.gen_of(ev.row, ev.col)
    b = pres.gen_of(ev.row2, ev.col2)
    if not np.array_equal(P.cells[ev.row, ev.col], P.cells[ev.row2, ev.col2]):
        raise TheoremViolation("a strong edge joins cells of different values")
    cm.union(a, b)
    vids = P.cells.ravel()[pres.gen_cells].astype(np.int64)
    lab = cm.labels[: pres.ngens]
    pairs = np.unique(np.stack([lab, vids]), axis=1)
    nlab, nvid = len(np.unique(pairs[0])), len(np.unique(pairs[1]))
    if not (pairs.shape[1] == nlab == nvid):
        raise TheoremViolation(f"{nlab} classes for {nvid} values after merging strong edges")
    if not cm.in_unit(np.flatnonzero(vids == P.identity_vid)).all():
        raise TheoremViolation("identity cells are not in the unit class")
    return dict(zip(pairs[1].tolist(), pairs[0].tolist()))


def run_stage3(pres: Presentation, cm: ClassMap, value_class: dict) -> list:
    P = pres.P
    enum = P.enum
    n, r = enum.n, enum.r
    G = all_invertible(r, P.ctx)
    rels = []
    unit = cm.labels[cm.unit]
    for A in G:
        for B in G:
            sq = stage3_square(A, B, n, r)
            ids = sq.ids(enum)
            AB = matmul(A, B)
            g = pres.gen_of([ids.y, ids.y, ids.y2, ids.y2], [ids.x, ids.x2, ids.x, ids.x2])
            want = [value_class[P.vid_of(A)], value_class[P.vid_of(AB)], unit, value_class[P.vid_of(B)]]
            if cm.find(g).tolist() != want:
                raise TheoremViolation(f"square for A={format_mat(A)}, B={format_mat(B)} has unexpected classes")
            rels.append(Stage3Relation(A, B, AB, ids.x, ids.x2, ids.y, ids.y2))
    return rels


def build_chain(pres, state, cm, value_class, ev, rels, mode) -> CertificateChain:
    P = pres.P
    d = pres.delta
    codes = sorted(int(P.codes[v]) for v in value_class)
    return CertificateChain(
        n=P.enum.n,
        r=P.enum.r,
        q=P.ctx.q,
        modulus=tuple(P.ctx.modulus or ()),
        mode=mode,
        ngens=pres.ngens,
        tree_x=d.ex[pres.tree.edges].astype(np.int64),
        tree_y=d.ey[pres.tree.edges].astype(np.int64),
        trace_x=d.ex[state.new].astype(np.int64),
        trace_y=d.ey[state.new].astype(np.int64),
        trace_vx=state.via_x.astype(np.int64),
        trace_vy=state.via_y.astype(np.int64),
        nrounds=state.nrounds,
        stage2=ev,
        stage3=rels,
        class_values=codes,
        nclasses=cm.nclasses,
        group_order=gl_order(P.enum.r, P.ctx.q),
    )


def _raw_square_ok(enum, x, x2, y, y2) -> bool:
    """Recompute one square from the enumerated matrices with plain Mat arithmetic."""
    Y, Y2, X, X2 = enum.y_mat(y), enum.y_mat(y2), enum.x_mat(x), enum.x_mat(x2)
    cells = [matmul(Y, X), matmul(Y2, X), matmul(Y, X2), matmul(Y2, X2)]
    if any(rank(c) < enum.r for c in cells):
        return False
    return matmul(cells[0], inverse(cells[1])) == matmul(cells[2], inverse(cells[3]))


def check_soundness(pres: Presentation, chain: CertificateChain, samples: int = 10_000, seed: int = 0) -> dict:
    """Re-check everything the chain cites.

    Tree cells must hold the identity, every cited square must be singular in
    the table, and a random sample of cited squares is recomputed from the
    enumerated matrices without touching any table.
    """
    P = pres.P
    tree_ok = bool(np.all(P.cells[chain.tree_y, chain.tree_x] == P.identity_vid))
    x, x2, y, y2 = chain.squares()
    squares_ok = bool(singular_mask(P, x, x2, y, y2).all())
    rng = np.random.default_rng(seed)
    k = min(samples, len(x))
    pick = rng.choice(len(x), size=k, replace=False) if k else np.zeros(0, dtype=np.int64)
    raw_bad = [int(i) for i in pick if not _raw_square_ok(P.enum, int(x[i]), int(x2[i]), int(y[i]), int(y2[i]))]
    # the relations f_B f_A = f_AB hold for f_A = A^-1 in GL_r
    hom_ok = all(matmul(inverse(s.B), inverse(s.A)) == inverse(s.AB) for s in chain.stage3)
    ok = tree_ok and squares_ok and not raw_bad and hom_ok
    if chain.mode == "theorem":
        ok = ok and chain.nclasses == chain.group_order
    return {
        "tree_relations": tree_ok,
        "cited_squares": int(len(x)),
        "cited_squares_singular": squares_ok,
        "sampled": int(k),
        "sampled_failures": raw_bad[:10],
        "homomorphism": hom_ok,
        "ok": bool(ok),
    }


# text export ------------------------------------------------------------------

EXPORT_MODES = ("tree-only", "certificate-squares", "full")
FULL_SQUARE_CAP = 1_000_000


def _square_lines(pres: Presentation, x, x2, y, y2):
    g = pres.gen_of
    ids = np.stack([g(y, x), g(y2, x), g(y, x2), g(y2, x2)], axis=1)
    for row in ids.tolist():
        yield "rel square {} {} {} {}".format(*row)


def _all_singular_squares(pres: Presentation, cap: int):
    """Every singular square with x < x2 and y < y2, by grouping rows on
    P(y, x2)^-1 P(y, x)."""
    P = pres.P
    nv = P.nvalues
    lq = np.full((nv, nv), -1, dtype=np.int64)
    vals = [P.value(v) for v in range(nv)]
    for a in range(1, nv):
        ainv = inverse(vals[a])
        for b in range(1, nv):
            lq[a, b] = value_code(matmul(ainv, vals[b]).to_array()[None], P.ctx.q)[0]
    out = [[], [], [], []]
    total = 0
    C = P.cells.astype(np.int64)
    for x in range(P.ncols):
        for x2 in range(x + 1, P.ncols):
            rows = np.flatnonzero((C[:, x] != 0) & (C[:, x2] != 0))
            if len(rows) < 2:
                continue
            key = lq[C[rows, x2], C[rows, x]]
            order = np.lexsort((rows, key))
            rows, key = rows[order], key[order]
            starts = np.flatnonzero(np.r_[True, key[1:] != key[:-1], True])
            for s, e in zip(starts[:-1], starts[1:]):
                grp = rows[s:e]
                if len(grp) < 2:
                    continue
                i, j = np.triu_indices(len(grp), 1)
                total += len(i)
                if total > cap:
                    raise BudgetError(f"more than {cap} singular squares; use a smaller instance or raise the cap")
                out[0].append(np.full(len(i), x))
                out[1].append(np.full(len(i), x2))
                out[2].append(grp[i])
                out[3].append(grp[j])
    return tuple(np.concatenate(o) if o else np.zeros(0, dtype=np.int64) for o in out)


def export_presentation(pres: Presentation, mode: str = "tree-only", chain: CertificateChain | None = None,
                        cap: int = FULL_SQUARE_CAP) -> str:
    if mode not in EXPORT_MODES:
        raise ValueError(f"mode must be one of {EXPORT_MODES}")
    P = pres.P
    enum = P.enum
    lines = [f"p {enum.n} {enum.r} {P.ctx.q}"]
    ys, xs = pres.cell_of(np.arange(pres.ngens))
    vtext = {v: format_mat(P.value(v)) for v in range(1, P.nvalues)}
    vids = P.cells[ys, xs]
    for g, (x, y, v) in enumerate(zip(xs.tolist(), ys.tolist(), vids.tolist())):
        lines.append(f"gen {g} {x} {y} {vtext[v]}")
    for g in sorted(pres.tree_relations().tolist()):
        lines.append(f"rel unit {g}")
    if mode == "certificate-squares":
        if chain is None:
            raise ValueError("certificate-squares export needs a certificate chain")
        lines.extend(_square_lines(pres, *chain.squares()))
    elif mode == "full":
        lines.extend(_square_lines(pres, *_all_singular_squares(pres, cap)))
    return "\n".join(lines) + "\n"


@dataclass
class PresentationText:
    n: int
    r: int
    q: int
    gens: dict  # id -> (x, y, Mat)
    units: list
    squares: list  # (g1, g2, g3, g4)


def parse_presentation(text: str) -> PresentationText:
    head = None
    gens, units, squares = {}, [], []
    for lineno, line in enumerate(text.splitlines(), 1):
        parts = line.split(maxsplit=4)
        if not parts:
            continue
        try:
            if parts[0] == "p" and head is None:
                head = tuple(int(t) for t in parts[1:4])
            elif parts[0] == "gen":
                g, x, y = int(parts[1]), int(parts[2]), int(parts[3])
                if g in gens:
                    raise ValueError("duplicate generator")
                gens[g] = (x, y, parse_mat(parts[4]))
            elif parts[:2] == ["rel", "unit"]:
                units.append(int(parts[2]))
            elif parts[:2] == ["rel", "square"]:
                squares.append(tuple(int(t) for t in line.split()[2:6]))
            else:
                raise ValueError(f"unknown record {parts[0]!r}")
        except (ValueError, IndexError) as exc:
            raise ValueError(f"line {lineno}: {exc}") from exc
    if head is None:
        raise ValueError("missing header line")
    for rel in [(u,) for u in units] + squares:
        if any(g not in gens for g in rel):
            raise ValueError(f"relation cites unknown generator: {rel}")
    return PresentationText(*head, gens, units, squares)
