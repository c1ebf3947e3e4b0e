import numpy as np
import pytest
from scipy.sparse.csgraph import shortest_path

from conftest import field, full
from iglin.connectivity import (
    StrongPath,
    StrongStep,
    check_lambda_theorem,
    check_strong_theorem,
    lambda_components,
    strong_components,
    verify_strong_path,
)
from iglin.errors import TheoremViolation
from iglin.tables import build_T_mk, rees_from_full
from oracles import lambda_counts, strong_counts


@pytest.mark.parametrize("m,k,q", [(1, 1, 2), (1, 1, 3), (2, 1, 2), (2, 2, 2), (3, 1, 2), (2, 1, 3)])
def test_lambda_components_match_oracle(m, k, q):
    t = build_T_mk(m, k, field(q))
    want = lambda_counts(t.cells.tolist())
    for vid in range(t.nvalues):
        assert lambda_components(t, vid).count == want[vid]


@pytest.mark.parametrize("m,k,q", [(2, 1, 2), (3, 1, 2), (3, 2, 2), (2, 1, 3)])
def test_lambda_theorem_rectangular(m, k, q):
    rep = check_lambda_theorem(m, k, field(q))
    assert rep["ok"] and all(v["components"] == 1 for v in rep["values"])


def test_lambda_square_case_2x2():
    rep = check_lambda_theorem(2, 2, field(2))
    singular = [v for v in rep["values"] if v["rank"] < 2]
    invertible = [v for v in rep["values"] if v["rank"] == 2]
    assert len(singular) == 10 and all(v["components"] == 1 for v in singular)
    assert len(invertible) == 6 and not any(v["required"] for v in invertible)
    assert rep["ok"]


def test_lambda_negative_control():
    rep = check_lambda_theorem(1, 1, field(3))
    inv = [v for v in rep["values"] if v["rank"] == 1]
    assert inv and all(v["components"] > 1 for v in inv)
    zero = [v for v in rep["values"] if v["rank"] == 0]
    assert zero[0]["components"] == 1


@pytest.mark.parametrize("n,r,q", [(3, 1, 2), (4, 1, 2), (3, 1, 3), (4, 2, 2)])
def test_strong_components_match_oracle(n, r, q):
    T = full(n, r, q)
    sc = strong_components(T)
    want = strong_counts(T.cells.tolist(), T.identity_vid)
    assert sc.counts() == want


def test_strong_components_with_a_single_identity_cell():
    # in T_{1,1} over F_3 the identity occurs once, so no strong edge exists
    t = build_T_mk(1, 1, field(3))
    sc = strong_components(t)
    assert sc.counts() == strong_counts(t.cells.tolist(), t.identity_vid)
    assert (sc.row_parent == -1).all() and (sc.col_parent == -1).all()


@pytest.mark.parametrize("n,r,q", [(4, 1, 2), (4, 1, 3), (5, 2, 2)])
def test_strong_theorem_and_paths(n, r, q):
    T = full(n, r, q)
    P = rees_from_full(T)
    sc = strong_components(T)
    rep = check_strong_theorem(T, sc)
    assert {v["value"] for v in rep["values"]} == set(T.codes.tolist())
    rng = np.random.default_rng(0)
    for vid in range(T.nvalues):
        rows, cols = T.occurrences(vid)
        for _ in range(5):
            i, j = rng.integers(0, len(rows), 2)
            p = sc.path((int(rows[i]), int(cols[i])), (int(rows[j]), int(cols[j])))
            assert p is not None and verify_strong_path(T, p)
            assert p.cells[0] == (rows[i], cols[i]) and p.cells[-1] == (rows[j], cols[j])
            if T.ranks[vid] == r:
                assert verify_strong_path(P, p)


def test_verifier_rejects_bad_paths():
    T = full(4, 1, 3)
    I = T.identity_vid
    sc = strong_components(T)
    rows, cols = T.occurrences(1)
    p = next(
        q for q in (sc.path((int(rows[0]), int(cols[0])), (int(rows[j]), int(cols[j]))) for j in range(1, len(rows)))
        if len(q.steps) >= 2
    )
    assert verify_strong_path(T, p)
    (b, a), (b2, a2) = p.cells[0], p.cells[1]
    step = p.steps[0]
    if step.kind == "row":
        bad_w = next(w for w in range(T.nrows) if not (T.cells[w, a] == I and T.cells[w, a2] == I))
    else:
        bad_w = next(w for w in range(T.ncols) if not (T.cells[b, w] == I and T.cells[b2, w] == I))
    broken = StrongPath(p.vid, p.cells, [StrongStep(step.kind, bad_w)] + p.steps[1:])
    assert not verify_strong_path(T, broken)
    wrong_kind = StrongPath(p.vid, p.cells, [StrongStep("diag", step.witness)] + p.steps[1:])
    assert not verify_strong_path(T, wrong_kind)
    short = StrongPath(p.vid, p.cells, p.steps[:-1])
    assert not verify_strong_path(T, short)
    other = int(np.flatnonzero(T.cells[b] != T.cells[b, a])[0])
    mixed = StrongPath(p.vid, [(b, a), (b, other)], [StrongStep("row", step.witness)])
    assert not verify_strong_path(T, mixed)


def test_split_value_raises():
    # T_{1,1} over F_3: invertible values are not strongly connected
    t = build_T_mk(1, 1, field(3))
    with pytest.raises(TheoremViolation):
        check_strong_theorem(t)


def test_absent_values_reported():
    rep = check_strong_theorem(full(4, 1, 3))
    assert rep["absent"] == []
    t = build_T_mk(2, 2, field(2))
    with pytest.raises(ValueError):
        lambda_components(t, t.nvalues)


@pytest.mark.parametrize("n,r,q", [(4, 1, 2), (4, 1, 3), (5, 2, 2), (3, 1, 3)])
def test_strong_refines_lambda(n, r, q):
    T = full(n, r, q)
    sc = strong_components(T)
    for vid in range(T.nvalues):
        lam = lambda_components(T, vid)
        strong = sc.labels[lam.rows, lam.cols]
        # each strong component sits inside one lambda component
        pairs = np.unique(np.stack([strong, lam.labels]), axis=1)
        assert len(np.unique(pairs[0])) == pairs.shape[1]


@pytest.mark.parametrize("k,m", [(1, 1), (1, 2), (1, 3), (2, 2), (2, 3)])
@pytest.mark.parametrize("q", [2, 3])
def test_lambda_sweep(k, m, q):
    assert q ** (k * m) <= 4096
    rep = check_lambda_theorem(m, k, field(q))
    assert rep["ok"]
    for v in rep["values"]:
        assert v["required"] == (k < m or v["rank"] < k)


def test_three_step_strong_path():
    # some value at (7,2,2) has two cells joined by exactly three strong steps
    T = full(7, 2, 2)
    sc = strong_components(T)
    vid = int(np.flatnonzero(T.ranks == 2)[0])
    nodes, g, *_ = sc._value_graph(vid)
    dist = shortest_path(g, unweighted=True, directed=False, indices=0)
    far = np.flatnonzero(dist == 3)
    assert len(far)
    C = T.ncols
    p = sc.path(divmod(int(nodes[0]), C), divmod(int(nodes[far[0]]), C))
    assert len(p.steps) == 3 and len(set(p.cells)) == 4
    assert verify_strong_path(T, p)
