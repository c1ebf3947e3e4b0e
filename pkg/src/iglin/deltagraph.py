"""The bipartite graph of identity cells, its spanning tree and the colour closure.

Edges are stored once, sorted by (x, y); an edge id is a position in that
order. The closure turns the fourth edge of a square blue whenever the other
three are blue and records, for every edge it turns, the three edges it
relied on.
"""

from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from . import _backend
from .enumeration import hasse_parent_index
from .errors import TheoremViolation
from .matspace import scattered_identity_sets
from .tables import ProductTable, ZERO_IF_SINGULAR


@dataclass(eq=False)
class DeltaGraph:
    table: ProductTable
    ex: np.ndarray  # edge -> x id
    ey: np.ndarray  # edge -> y id
    x_ptr: np.ndarray  # CSR over x; edges of x are ex_ptr[x]:x_ptr[x+1]
    y_order: np.ndarray  # edge ids sorted by (y, x)
    y_ptr: np.ndarray

    @property
    def nx(self) -> int:
        return self.table.ncols

    @property
    def ny(self) -> int:
        return self.table.nrows

    @property
    def nedges(self) -> int:
        return len(self.ex)

    def keys(self) -> np.ndarray:
        return self.ex.astype(np.int64) * self.ny + self.ey

    def edge_ids(self, x, y) -> np.ndarray:
        """Edge ids for arrays of (x, y); -1 where (x, y) is not an edge."""
        x = np.asarray(x, dtype=np.int64)
        y = np.asarray(y, dtype=np.int64)
        keys = self.keys()
        want = x * self.ny + y
        pos = np.searchsorted(keys, want)
        pos = np.minimum(pos, len(keys) - 1)
        return np.where(keys[pos] == want, pos, -1)

    def edge_id(self, x: int, y: int) -> int:
        return int(self.edge_ids([x], [y])[0])

    def has_edge(self, x: int, y: int) -> bool:
        return self.edge_id(x, y) >= 0

    def y_neighbours(self, x: int) -> np.ndarray:
        return self.ey[self.x_ptr[x]:self.x_ptr[x + 1]]

    def x_neighbours(self, y: int) -> np.ndarray:
        return self.ex[self.y_order[self.y_ptr[y]:self.y_ptr[y + 1]]]


def build_delta(P: ProductTable) -> DeltaGraph:
    if P.zero_rank_policy != ZERO_IF_SINGULAR:
        raise ValueError("the graph is defined on the structure matrix")
    if P.identity_vid < 0:
        raise ValueError("identity never occurs in the table")
    # cells are (y, x); nonzero on the transpose gives (x, y)-sorted edges
    ex, ey = np.nonzero((P.cells == P.identity_vid).T)
    ex = ex.astype(np.int32)
    ey = ey.astype(np.int32)
    x_ptr = np.searchsorted(ex, np.arange(P.ncols + 1)).astype(np.int64)
    y_order = np.lexsort((ex, ey)).astype(np.int64)
    y_ptr = np.searchsorted(ey[y_order], np.arange(P.nrows + 1)).astype(np.int64)
    return DeltaGraph(P, ex, ey, x_ptr, y_order, y_ptr)


@dataclass(eq=False)
class SpanningTree:
    edges: np.ndarray  # sorted edge ids
    tags: dict  # edge id -> tuple of "T1"/"T2"/"T3"

    def __len__(self):
        return len(self.edges)

    def mask(self, nedges: int) -> np.ndarray:
        m = np.zeros(nedges, dtype=bool)
        m[self.edges] = True
        return m


def _is_spanning_tree(nx: int, ny: int, ex: np.ndarray, ey: np.ndarray) -> bool:
    if len(ex) != nx + ny - 1:
        return False
    g = coo_matrix((np.ones(len(ex)), (ex, ey.astype(np.int64) + nx)), shape=(nx + ny, nx + ny))
    ncomp, _ = connected_components(g, directed=False)
    # connected with V-1 edges is a tree
    return ncomp == 1


def build_spanning_tree(delta: DeltaGraph) -> SpanningTree:
    P = delta.table
    enum = P.enum
    n, r, ctx = enum.n, enum.r, enum.ctx
    ident = enum.ids_of_subset_identity()
    tags: dict[int, list[str]] = {}
    N = len(enum)

    # T1: (I(S)^T, Y) for Y in region S; T2: (X, I(S)) for X in region S
    sid = np.array([ident[enum.subsets[g]] for g in enum.region_of], dtype=np.int64)
    ids = np.arange(N)
    for tag, xs, ys in (("T1", sid, ids), ("T2", ids, sid)):
        eids = delta.edge_ids(xs, ys)
        if (eids < 0).any():
            bad = int(np.flatnonzero(eids < 0)[0])
            raise TheoremViolation(f"{tag} edge ({xs[bad]}, {ys[bad]}) does not multiply to the identity")
        for e in eids.tolist():
            tags.setdefault(e, []).append(tag)

    # T3: (I(S)^T, I(i_1|..|i_j - 1, i_j|..|i_r)), one per Hasse edge
    base = tuple(range(1, r + 1))
    for S in itertools.combinations(range(1, n + 1), r):
        if S == base:
            continue
        j = hasse_parent_index(S)
        sets = [[i] for i in S]
        sets[j] = [S[j] - 1, S[j]]
        y = enum.id_of_y(scattered_identity_sets(n, sets, ctx))
        x = ident[S]
        e = delta.edge_id(x, y)
        if e < 0:
            raise TheoremViolation(f"T3 edge for region {S} does not multiply to the identity")
        tags.setdefault(e, []).append("T3")

    edges = np.array(sorted(tags), dtype=np.int64)
    if not _is_spanning_tree(delta.nx, delta.ny, delta.ex[edges], delta.ey[edges]):
        raise TheoremViolation("T1/T2/T3 edges do not form a spanning tree")
    return SpanningTree(edges, {e: tuple(t) for e, t in tags.items()})


@dataclass(eq=False)
class ColorState:
    """Blue edges and the ordered trace that produced them.

    Trace step i turns edge ``new[i]`` = (x, y) blue via the square
    x - via_y[i] - via_x[i] - y, whose three other edges were already blue.
    """

    blue: np.ndarray  # bool per edge
    rounds: np.ndarray  # per edge: 0 tree, k >= 1 round turned, -1 never
    new: np.ndarray  # trace: edge ids in order
    via_x: np.ndarray
    via_y: np.ndarray
    engine: str = "rounds"
    nrounds: int = 0

    @property
    def all_blue(self) -> bool:
        return bool(self.blue.all())

    @property
    def steps(self) -> int:
        return len(self.new)

    def trace_lines(self, delta: DeltaGraph):
        ex, ey = delta.ex, delta.ey
        for e, x1, y1 in zip(self.new.tolist(), self.via_x.tolist(), self.via_y.tolist()):
            yield f"new {ex[e]} {ey[e]} via {x1} {y1}"


def _rounds_closure(delta: DeltaGraph, tree: SpanningTree, backend: str | None) -> ColorState:
    blue0 = tree.mask(delta.nedges)
    rnd, wx, wy = _backend.closure_rounds(delta.nx, delta.ny, delta.ex, delta.ey, blue0, backend=backend)
    turned = np.flatnonzero(rnd > 0)
    order = turned[np.lexsort((turned, rnd[turned]))]
    return ColorState(
        blue=rnd >= 0,
        rounds=rnd,
        new=order.astype(np.int64),
        via_x=wx[order].astype(np.int64),
        via_y=wy[order].astype(np.int64),
        engine="rounds",
        nrounds=int(rnd.max()) if len(rnd) else 0,
    )


def _worklist_closure(delta: DeltaGraph, tree: SpanningTree, order: str) -> ColorState:
    """Event-driven closure; every new blue edge looks for squares it completes."""
    rev = order == "reverse"
    ex, ey = delta.ex.tolist(), delta.ey.tolist()
    eid = {(x, y): e for e, (x, y) in enumerate(zip(ex, ey))}
    blue = [False] * len(ex)
    bn: dict[int, list[int]] = {}  # x -> blue y's
    bm: dict[int, list[int]] = {}  # y -> blue x's
    trace: list[tuple[int, int, int]] = []
    queue = deque()

    def make_blue(e, via=None):
        blue[e] = True
        x, y = ex[e], ey[e]
        bn.setdefault(x, []).append(y)
        bm.setdefault(y, []).append(x)
        if via is not None:
            trace.append((e, via[0], via[1]))
        queue.append(e)

    def try_edge(x, y, via):
        e = eid.get((x, y))
        if e is not None and not blue[e]:
            make_blue(e, via)

    seed = tree.edges.tolist()
    for e in (reversed(seed) if rev else seed):
        make_blue(e)
    step = -1 if rev else 1
    while queue:
        e = queue.popleft()
        x, y = ex[e], ey[e]
        ys = list(bn[x])[::step]
        xs = list(bm[y])[::step]
        # new edge opposite the red one
        for y2 in ys:
            for x2 in xs:
                try_edge(x2, y2, (x, y))
        # red edge shares x with the new edge
        for x2 in xs:
            for y2 in list(bn[x2])[::step]:
                try_edge(x, y2, (x2, y))
        # red edge shares y with the new edge
        for y2 in ys:
            for x2 in list(bm[y2])[::step]:
                try_edge(x2, y, (x, y2))

    blue_arr = np.array(blue, dtype=bool)
    rounds = np.where(blue_arr, 1, -1).astype(np.int32)
    rounds[tree.edges] = 0
    t = np.array(trace, dtype=np.int64).reshape(-1, 3)
    return ColorState(blue_arr, rounds, t[:, 0], t[:, 1], t[:, 2], engine=f"worklist-{order}", nrounds=0)


def color_closure(
    delta: DeltaGraph,
    tree: SpanningTree,
    engine: str = "rounds",
    order: str = "forward",
    backend: str | None = None,
    check: bool = True,
) -> ColorState:
    """Run elementary edge colour transformations to the fixed point.

    ``engine="rounds"`` runs the bitset kernel; ``engine="worklist"`` is the
    event-driven pure Python loop (small graphs), whose ``order`` controls the
    worklist order. With ``check`` and ``1 <= r < n-1`` a red edge left at the
    fixed point raises :class:`TheoremViolation`.
    """
    if engine == "rounds":
        state = _rounds_closure(delta, tree, backend)
    elif engine == "worklist":
        state = _worklist_closure(delta, tree, order)
    else:
        raise ValueError(f"unknown closure engine {engine!r}")
    enum = delta.table.enum
    if check and 1 <= enum.r < enum.n - 1 and not state.all_blue:
        red = int((~state.blue).sum())
        raise TheoremViolation(f"closure stopped with {red} red edges at n={enum.n}, r={enum.r}")
    return state


@dataclass
class ReplayResult:
    ok: bool
    failed_step: int | None = None
    reason: str = ""

    def __bool__(self):
        return self.ok


def replay_trace(delta: DeltaGraph, tree: SpanningTree, new, via_x, via_y) -> ReplayResult:
    """Check a closure trace step by step against the table.

    Every step must name a graph edge that is not yet blue and a non-degenerate
    square whose three other edges are already blue; all four cells must hold
    the identity.
    """
    new = np.asarray(new, dtype=np.int64)
    via_x = np.asarray(via_x, dtype=np.int64)
    via_y = np.asarray(via_y, dtype=np.int64)
    E = delta.nedges
    if len(new) and (new.min() < 0 or new.max() >= E):
        bad = int(np.flatnonzero((new < 0) | (new >= E))[0])
        return ReplayResult(False, bad, "step names a non-edge")
    x = delta.ex[new].astype(np.int64)
    y = delta.ey[new].astype(np.int64)
    when = np.full(E, np.iinfo(np.int64).max, dtype=np.int64)
    when[tree.edges] = -1
    steps = np.arange(len(new))
    # first time each edge is named; a repeat is a failure
    first = np.full(E, -1, dtype=np.int64)
    first[new[::-1]] = steps[::-1]
    repeat = first[new] != steps
    when[new] = np.minimum(when[new], steps)
    already = np.zeros(len(new), dtype=bool)
    in_tree = np.zeros(E, dtype=bool)
    in_tree[tree.edges] = True
    already |= in_tree[new] | repeat
    degenerate = (via_x == x) | (via_y == y)
    fails = [already, degenerate]
    P = delta.table
    for ax, ay in ((x, via_y), (via_x, via_y), (via_x, y)):
        inb = (ax >= 0) & (ax < delta.nx) & (ay >= 0) & (ay < delta.ny)
        e = np.where(inb, delta.edge_ids(np.where(inb, ax, 0), np.where(inb, ay, 0)), -1)
        missing = e < 0
        late = np.where(missing, True, when[np.maximum(e, 0)] >= steps)
        fails.append(missing | late)
    cell_ok = P.cells[y, x] == P.identity_vid
    fails.append(~cell_ok)
    bad = np.logical_or.reduce(fails) if fails else np.zeros(0, dtype=bool)
    if bad.any():
        i = int(np.flatnonzero(bad)[0])
        reasons = ["edge already blue", "degenerate square", "witness (x, y') not blue",
                   "witness (x', y') not blue", "witness (x', y) not blue", "cell is not the identity"]
        which = next(k for k, f in enumerate(fails) if f[i])
        return ReplayResult(False, i, reasons[which])
    return ReplayResult(True)


def read_trace(delta: DeltaGraph, lines) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    xs, ys, vx, vy = [], [], [], []
    for line in lines:
        parts = line.split()
        if not parts:
            continue
        if len(parts) != 6 or parts[0] != "new" or parts[3] != "via":
            raise ValueError(f"malformed trace line: {line!r}")
        xs.append(int(parts[1]))
        ys.append(int(parts[2]))
        vx.append(int(parts[4]))
        vy.append(int(parts[5]))
    return delta.edge_ids(xs, ys), np.array(vx, dtype=np.int64), np.array(vy, dtype=np.int64)


def to_dot(delta: DeltaGraph, tree: SpanningTree, tree_only: bool = False) -> str:
    """DOT text: tree edges carry their tags; T3 bold, T2 dashed, T1 plain."""
    enum = delta.table.enum
    lines = ["graph delta {", "  graph [rankdir=TB];", '  node [shape=point];']
    region = lambda i: "".join(str(s) for s in enum.region(i))
    for i in range(delta.nx):
        lines.append(f'  x{i} [xlabel="X{i}:{region(i)}", group="x{region(i)}"];')
    for i in range(delta.ny):
        lines.append(f'  y{i} [xlabel="Y{i}:{region(i)}", group="y{region(i)}"];')
    for e in range(delta.nedges):
        tag = tree.tags.get(e)
        if tag is None:
            if tree_only:
                continue
            attrs = 'color=gray70'
        else:
            style = "bold" if "T3" in tag else "dashed" if tag == ("T2",) else "solid"
            attrs = f'tag="{",".join(tag)}", style={style}'
        lines.append(f"  x{delta.ex[e]} -- y{delta.ey[e]} [{attrs}];")
    lines.append("}")
    return "\n".join(lines) + "\n"
