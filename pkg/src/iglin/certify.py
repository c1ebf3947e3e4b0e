"""Certificate files and an independent replay checker.

The checker rebuilds everything from the enumerated RRE matrices with its own
pairwise product code. It never reads a ProductTable, the closure engine or
the strong-component kernels; it only multiplies matrices, takes ranks and
inverses of the few distinct r x r values, and tests square singularity.
"""

from __future__ import annotations

import gzip
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .counts import gl_order
from .enumeration import enumerate_Y
from .errors import CertificateError
from .gf import FieldCtx, make_field
from .matspace import Mat, format_mat, inverse, matmul, parse_mat, rank
from .presentation import CertificateChain

SCHEMA = 1
CERT_NAME = "certificate.json"
STAGE1_NAME = "stage1.txt.gz"
STAGE2_NAME = "stage2.txt.gz"


def _gz_bytes(text: str) -> bytes:
    # mtime=0 keeps the archive byte-identical across runs; level 1 because
    # the stage-2 file runs to millions of lines
    return gzip.compress(text.encode(), compresslevel=1, mtime=0)


def _rows_text(arr: np.ndarray) -> str:
    if arr.size == 0:
        return ""
    line = " ".join(["%d"] * arr.shape[1]) + "\n"
    return (line * len(arr)) % tuple(arr.ravel().tolist())


def stage1_text(chain: CertificateChain) -> str:
    tree = np.stack([chain.tree_x, chain.tree_y], axis=1)
    steps = np.stack([chain.trace_x, chain.trace_y, chain.trace_vx, chain.trace_vy], axis=1)
    out = ["# tree x y"]
    out += [f"tree {x} {y}" for x, y in tree.tolist()]
    out += [f"new {x} {y} via {x1} {y1}" for x, y, x1, y1 in steps.tolist()]
    return "\n".join(out) + "\n"


def stage2_text(chain: CertificateChain) -> str:
    ev = chain.stage2
    arr = np.stack([ev.kind, ev.row, ev.col, ev.row2, ev.col2, ev.witness], axis=1).astype(np.int64)
    return "# kind(0 row, 1 col) row col row2 col2 witness\n" + _rows_text(arr)


def certificate_dict(chain: CertificateChain, soundness: dict, files: dict) -> dict:
    return {
        "schema": SCHEMA,
        "params": {"n": chain.n, "r": chain.r, "q": chain.q, "modulus": list(chain.modulus)},
        "mode": chain.mode,
        "generators": chain.ngens,
        "tree_relations": int(len(chain.tree_x)),
        "stage1": {
            "file": STAGE1_NAME,
            "sha256": files.get(STAGE1_NAME),
            "steps": int(len(chain.trace_x)),
            "rounds": chain.nrounds,
        },
        "stage2": {
            "file": STAGE2_NAME,
            "sha256": files.get(STAGE2_NAME),
            "edges": int(len(chain.stage2)),
        },
        "stage3": [
            {
                "A": format_mat(s.A),
                "B": format_mat(s.B),
                "AB": format_mat(s.AB),
                "x": int(s.x),
                "x2": int(s.x2),
                "y": int(s.y),
                "y2": int(s.y2),
            }
            for s in chain.stage3
        ],
        "classes": {"count": chain.nclasses, "values": [int(c) for c in chain.class_values]},
        "group_order": chain.group_order,
        "soundness": soundness,
    }


def write_certificate(chain: CertificateChain, soundness: dict, out_dir) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    files = {}
    for name, text in ((STAGE1_NAME, stage1_text(chain)), (STAGE2_NAME, stage2_text(chain))):
        data = _gz_bytes(text)
        (out / name).write_bytes(data)
        files[name] = hashlib.sha256(data).hexdigest()
    cert = certificate_dict(chain, soundness, files)
    path = out / CERT_NAME
    path.write_text(json.dumps(cert, indent=2, sort_keys=True) + "\n")
    return path


# independent replay ----------------------------------------------------------


def pair_products(left: np.ndarray, right: np.ndarray, ctx: FieldCtx) -> np.ndarray:
    """Row-by-row products left[i] @ right[i] over F_q."""
    left = left.astype(np.int64)
    right = right.astype(np.int64)
    if ctx.is_prime:
        return np.matmul(left, right) % ctx.p
    add, mul = np.asarray(ctx.add_table), np.asarray(ctx.mul_table)
    acc = np.zeros((left.shape[0], left.shape[1], right.shape[2]), dtype=np.int64)
    for t in range(left.shape[2]):
        acc = add[acc, mul[left[:, :, t, None], right[:, None, t, :]]]
    return acc


def _codes(vals: np.ndarray, q: int) -> np.ndarray:
    flat = vals.reshape(len(vals), -1)
    w = q ** np.arange(flat.shape[1], dtype=np.int64)
    return flat @ w


def raw_codes(enum, rows: np.ndarray, cols: np.ndarray, chunk: int = 1 << 18) -> np.ndarray:
    """Code of Y_rows[i] X_cols[i] for each i, from the enumerated matrices."""
    out = np.empty(len(rows), dtype=np.int64)
    mats = enum.mats
    for s in range(0, len(rows), chunk):
        ys = mats[rows[s:s + chunk]]
        xs = mats[cols[s:s + chunk]].transpose(0, 2, 1)
        out[s:s + chunk] = _codes(pair_products(ys, xs, enum.ctx), enum.ctx.q)
    return out


def raw_full(enum) -> np.ndarray:
    N = len(enum)
    rows = np.repeat(np.arange(N), N)
    cols = np.tile(np.arange(N), N)
    return raw_codes(enum, rows, cols).reshape(N, N)


class _Values:
    """Rank, inverse and quotients of the distinct value codes."""

    def __init__(self, codes, r: int, ctx: FieldCtx):
        self.r, self.ctx = r, ctx
        self.codes = np.unique(codes)
        q = ctx.q
        w = q ** np.arange(r * r)
        self.mats = [Mat(r, r, tuple(int(c) // int(p) % q for p in w), ctx) for c in self.codes]
        self.invertible = np.array([rank(m) == r for m in self.mats])
        self.ident = int(sum(int(w[i * r + i]) for i in range(r)))

    def index(self, codes) -> np.ndarray:
        i = np.searchsorted(self.codes, codes)
        i = np.minimum(i, len(self.codes) - 1)
        if not np.all(self.codes[i] == codes):
            raise CertificateError("unexpected value code")
        return i

    def is_invertible(self, codes) -> np.ndarray:
        return self.invertible[self.index(codes)]

    def quotient_table(self) -> np.ndarray:
        n = len(self.codes)
        tab = np.full((n, n), -1, dtype=np.int64)
        for b in range(n):
            if not self.invertible[b]:
                continue
            binv = inverse(self.mats[b])
            for a in range(n):
                if self.invertible[a]:
                    m = matmul(self.mats[a], binv)
                    tab[a, b] = _codes(np.array(m.entries).reshape(1, self.r, self.r), self.ctx.q)[0]
        return tab

    def code_of(self, m: Mat) -> int:
        return int(_codes(np.array(m.entries).reshape(1, self.r, self.r), self.ctx.q)[0])


@dataclass
class ReplayReport:
    ok: bool = True
    failures: list = field(default_factory=list)
    checks: dict = field(default_factory=dict)

    def fail(self, stage: str, msg: str):
        self.ok = False
        self.failures.append(f"{stage}: {msg}")

    def to_dict(self) -> dict:
        return {"ok": self.ok, "failures": self.failures, "checks": self.checks}


def _read_gz(path: Path, sha: str | None) -> str:
    data = path.read_bytes()
    if sha is not None and hashlib.sha256(data).hexdigest() != sha:
        raise CertificateError(f"{path.name}: checksum mismatch")
    return gzip.decompress(data).decode()


def _parse_stage1(text: str):
    tree, steps = [], []
    for line in text.splitlines():
        p = line.split()
        if not p or p[0] == "#":
            continue
        if p[0] == "tree" and len(p) == 3:
            tree.append((int(p[1]), int(p[2])))
        elif p[0] == "new" and len(p) == 6 and p[3] == "via":
            steps.append((int(p[1]), int(p[2]), int(p[4]), int(p[5])))
        else:
            raise CertificateError(f"bad stage-1 line: {line!r}")
    return np.array(tree, dtype=np.int64).reshape(-1, 2), np.array(steps, dtype=np.int64).reshape(-1, 4)


def _parse_stage2(text: str) -> np.ndarray:
    body = text.split("\n", 1)[1] if text.startswith("#") else text
    arr = np.array(body.split(), dtype=np.int64)
    if arr.size % 6:
        raise CertificateError("stage-2 file is truncated")
    return arr.reshape(-1, 6)


def _components(n: int, a, b) -> np.ndarray:
    g = coo_matrix((np.ones(len(a), dtype=np.int8), (a, b)), shape=(n, n))
    return connected_components(g, directed=False)[1]


def replay_certificate(cert_dir) -> ReplayReport:
    cert_dir = Path(cert_dir)
    rep = ReplayReport()
    cert = json.loads((cert_dir / CERT_NAME).read_text())
    if cert.get("schema") != SCHEMA:
        raise CertificateError(f"unknown certificate schema {cert.get('schema')}")
    prm = cert["params"]
    n, r, q = prm["n"], prm["r"], prm["q"]
    ctx = make_field(q, prm["modulus"] or None)
    enum = enumerate_Y(n, r, ctx)
    N = len(enum)
    codes = raw_full(enum)
    vals = _Values(codes.ravel(), r, ctx)
    I = vals.ident
    inv_cell = vals.is_invertible(codes.ravel()).reshape(N, N)
    ident_cell = codes == I
    rep.checks["cells"] = N * N
    rep.checks["generators"] = int(inv_cell.sum())
    if int(inv_cell.sum()) != cert["generators"]:
        rep.fail("generators", f"{int(inv_cell.sum())} nonzero cells, certificate says {cert['generators']}")

    # tree relations
    tree, steps = _parse_stage1(_read_gz(cert_dir / cert["stage1"]["file"], cert["stage1"]["sha256"]))
    tx, ty = tree[:, 0], tree[:, 1]
    if len(tree) != 2 * N - 1:
        rep.fail("tree", f"{len(tree)} edges, expected {2 * N - 1}")
    elif not ident_cell[ty, tx].all():
        rep.fail("tree", "a tree cell is not the identity")
    elif _components(2 * N, tx, N + ty).max() != 0:
        rep.fail("tree", "tree edges do not connect the graph")
    rep.checks["tree_edges"] = int(len(tree))

    # stage 1: sequential closure with timestamps
    key = lambda x, y: np.asarray(x, dtype=np.int64) * N + np.asarray(y, dtype=np.int64)  # noqa: E731
    gx, gy = np.nonzero(ident_cell.T)  # x, y of every identity cell
    gkeys = key(gx, gy)
    when = np.full(len(gkeys), np.iinfo(np.int64).max)
    when[np.searchsorted(gkeys, key(tx, ty))] = -1
    if len(steps):
        x, y, x1, y1 = steps.T
        k = key(x, y)
        pos = np.minimum(np.searchsorted(gkeys, k), len(gkeys) - 1)
        is_edge = gkeys[pos] == k
        order = np.arange(len(steps))
        if not is_edge.all():
            rep.fail("stage1", f"step {int(np.flatnonzero(~is_edge)[0])} names a non-identity cell")
        first = np.full(len(gkeys), -1)
        first[pos[::-1]] = order[::-1]
        dup = (first[pos] != order) | (when[pos] == -1)
        if dup.any():
            rep.fail("stage1", f"step {int(np.flatnonzero(dup)[0])} repeats a blue edge")
        when[pos] = np.minimum(when[pos], order)
        if ((x1 == x) | (y1 == y)).any():
            rep.fail("stage1", "degenerate square")
        for ax, ay in ((x, y1), (x1, y1), (x1, y)):
            inb = (ax >= 0) & (ax < N) & (ay >= 0) & (ay < N)
            kk = key(np.where(inb, ax, 0), np.where(inb, ay, 0))
            p2 = np.minimum(np.searchsorted(gkeys, kk), len(gkeys) - 1)
            ok = inb & (gkeys[p2] == kk)
            ok &= np.where(ok, when[p2] < order, False)
            if not ok.all():
                rep.fail("stage1", f"step {int(np.flatnonzero(~ok)[0])} uses a witness that is not yet blue")
                break
    all_blue = bool((when < np.iinfo(np.int64).max).all())
    rep.checks["stage1_steps"] = int(len(steps))
    rep.checks["stage1_all_blue"] = all_blue
    if not all_blue:
        rep.fail("stage1", f"{int((when == np.iinfo(np.int64).max).sum())} identity cells never reached")

    # stage 2: strong edges over raw values
    ev = _parse_stage2(_read_gz(cert_dir / cert["stage2"]["file"], cert["stage2"]["sha256"]))
    kind, b, a, b2, a2, w = ev.T
    rowk = kind == 0
    shape_ok = np.where(rowk, (b == b2) & (a != a2) & (w != b), (a == a2) & (b != b2) & (w != a))
    shape_ok &= ((kind == 0) | (kind == 1)) & (w >= 0) & (w < N)
    if not shape_ok.all():
        rep.fail("stage2", f"edge {int(np.flatnonzero(~shape_ok)[0])} is malformed")
    else:
        c1, c2 = codes[b, a], codes[b2, a2]
        wy1, wx1 = np.where(rowk, w, b), np.where(rowk, a, w)
        wy2, wx2 = np.where(rowk, w, b2), np.where(rowk, a2, w)
        good = (c1 == c2) & vals.is_invertible(c1) & (codes[wy1, wx1] == I) & (codes[wy2, wx2] == I)
        if not good.all():
            rep.fail("stage2", f"edge {int(np.flatnonzero(~good)[0])} is not a strong edge")
    # classes: identity cells to a unit node, then stage-2 unions
    cell = lambda y, x: np.asarray(y, dtype=np.int64) * N + np.asarray(x, dtype=np.int64)  # noqa: E731
    unit = N * N
    iy, ix = np.nonzero(ident_cell)
    ea = np.concatenate([cell(iy, ix), cell(b, a)])
    eb = np.concatenate([np.full(len(iy), unit), cell(b2, a2)])
    comp = _components(N * N + 1, ea, eb)
    gen_cells = np.flatnonzero(inv_cell.ravel())
    pairs = np.unique(np.stack([comp[gen_cells], codes.ravel()[gen_cells]]), axis=1)
    nclasses = len(np.unique(pairs[0]))
    nvalues = len(np.unique(pairs[1]))
    rep.checks["classes"] = nclasses
    if not (pairs.shape[1] == nclasses == nvalues):
        rep.fail("stage2", f"{nclasses} classes for {nvalues} values")
    if nclasses != cert["classes"]["count"]:
        rep.fail("stage2", f"replayed {nclasses} classes, certificate says {cert['classes']['count']}")

    # every cited square must be singular
    qt = vals.quotient_table()

    def singular(x, x2, y, y2):
        cs = [vals.index(codes[yy, xx]) for yy, xx in ((y, x), (y2, x), (y, x2), (y2, x2))]
        return (qt[cs[0], cs[1]] >= 0) & (qt[cs[0], cs[1]] == qt[cs[2], cs[3]])

    if len(steps) and rep.ok:
        if not singular(steps[:, 0], steps[:, 2], steps[:, 1], steps[:, 3]).all():
            rep.fail("stage1", "a cited square is not singular")
    if len(ev) and rep.ok:
        if not singular(a, np.where(rowk, a2, w), b, np.where(rowk, w, b2)).all():
            rep.fail("stage2", "a cited square is not singular")

    # stage 3: f_B f_A = f_AB for every pair
    s3 = cert["stage3"]
    seen = set()
    for s in s3:
        A, B, AB = (parse_mat(s[k], ctx) for k in ("A", "B", "AB"))
        if matmul(A, B) != AB:
            rep.fail("stage3", f"AB mismatch for {s['A']} {s['B']}")
            continue
        x, x2, y, y2 = s["x"], s["x2"], s["y"], s["y2"]
        got = [int(codes[y, x]), int(codes[y, x2]), int(codes[y2, x]), int(codes[y2, x2])]
        want = [vals.code_of(A), vals.code_of(AB), I, vals.code_of(B)]
        if got != want or not singular(np.array([x]), np.array([x2]), np.array([y]), np.array([y2]))[0]:
            rep.fail("stage3", f"square for A={s['A']}, B={s['B']} does not carry A, AB, I, B")
        seen.add((s["A"], s["B"]))
    rep.checks["stage3_pairs"] = len(seen)
    order = gl_order(r, q)
    if cert["mode"] == "theorem":
        if len(seen) != order * order:
            rep.fail("stage3", f"{len(seen)} distinct pairs, expected {order * order}")
        if nclasses != order:
            rep.fail("classes", f"{nclasses} classes, |GL_{r}(F_{q})| = {order}")
    return rep
