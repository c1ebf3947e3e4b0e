"""End-to-end certification of the maximal subgroup at one (n, r, q)."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

from .certify import replay_certificate, write_certificate
from .connectivity import strong_components
from .counts import gaussian_binomial, idempotent_count
from .deltagraph import build_delta, build_spanning_tree, color_closure
from .enumeration import enumerate_Y
from .errors import TheoremViolation
from .gf import make_field
from .presentation import (
    Presentation,
    build_chain,
    check_soundness,
    run_stage1,
    run_stage2,
    run_stage3,
    stage2_evidence,
)
from .tables import build_T_full, rees_from_full

log = logging.getLogger(__name__)


@dataclass
class VerifyResult:
    n: int
    r: int
    q: int
    mode: str
    passed: bool = False
    failed_stage: str | None = None
    message: str = ""
    summary: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)
    chain: object = field(default=None, repr=False)
    presentation: object = field(default=None, repr=False)


def in_theorem_range(n: int, r: int) -> bool:
    return 1 <= r and 3 * r < n


def verify_theorem(n: int, r: int, q: int, out_dir=None, exploratory: bool = False, budget: int | None = None,
                   seed: int = 0, samples: int = 10_000, jobs: int = 1, backend: str | None = None,
                   irreducible_poly=None) -> VerifyResult:
    """Build the tables, run the three stages, check soundness and replay.

    Outside r < n/3 this needs ``exploratory=True``; the stages then run as
    far as they go and the result records where they stop, asserting nothing.
    """
    if not in_theorem_range(n, r) and not exploratory:
        raise ValueError(f"r < n/3 is required (n={n}, r={r}); pass exploratory=True to run anyway")
    mode = "theorem" if in_theorem_range(n, r) else "exploratory"
    res = VerifyResult(n, r, q, mode)
    ctx = make_field(q, irreducible_poly)
    stage = "tables"
    clock = time.perf_counter()

    def tick(name):
        nonlocal clock
        now = time.perf_counter()
        res.timings[name] = round(now - clock, 3)
        log.info("%s done in %.2fs", name, now - clock)
        clock = now

    try:
        enum = enumerate_Y(n, r, ctx)
        T = build_T_full(n, r, ctx, budget=budget, enum=enum)
        P = rees_from_full(T)
        tick("tables")
        stage = "graph"
        delta = build_delta(P)
        tree = build_spanning_tree(delta)
        pres = Presentation(P, delta, tree)
        res.presentation = pres
        tick("graph")
        stage = "stage1"
        state = color_closure(delta, tree, backend=backend, check=False)
        cm = run_stage1(pres, state)
        tick("stage1")
        stage = "stage2"
        sc = strong_components(T, jobs=jobs, backend=backend)
        ev = stage2_evidence(T, sc)
        value_class = run_stage2(pres, cm, ev)
        tick("stage2")
        stage = "stage3"
        rels = run_stage3(pres, cm, value_class) if 3 * r < n else []
        tick("stage3")
        stage = "soundness"
        chain = build_chain(pres, state, cm, value_class, ev, rels, mode)
        res.chain = chain
        sound = check_soundness(pres, chain, samples=samples, seed=seed)
        tick("soundness")
        stage = "counts"
        counts_ok = (
            len(enum) == gaussian_binomial(n, r, q)
            and pres.ngens == idempotent_count(n, r, q)
            and len(tree) == 2 * len(enum) - 1
        )
        res.summary = {
            "schema": 1,
            "n": n,
            "r": r,
            "q": q,
            "mode": mode,
            "rows": len(enum),
            "generators": pres.ngens,
            "graph_edges": delta.nedges,
            "tree_relations": len(tree),
            "closure_steps": state.steps,
            "closure_rounds": state.nrounds,
            "strong_edges": len(ev),
            "stage3_pairs": len(rels),
            "classes": chain.nclasses,
            "group_order": chain.group_order,
            "counts_consistent": counts_ok,
            "soundness": sound,
        }
        if not sound["ok"]:
            raise TheoremViolation(f"soundness check failed: {sound}")
        if not counts_ok:
            raise TheoremViolation("enumeration or generator count disagrees with the closed forms")
        if out_dir is not None:
            stage = "certificate"
            write_certificate(chain, sound, out_dir)
            rep = replay_certificate(out_dir)
            res.summary["replay"] = rep.to_dict()
            tick("replay")
            if not rep.ok:
                raise TheoremViolation(f"independent replay failed: {rep.failures[:3]}")
        res.passed = mode == "theorem"
        if mode == "exploratory":
            res.message = f"all stages ran; {chain.nclasses} classes (nothing asserted outside r < n/3)"
    except TheoremViolation as exc:
        res.failed_stage = stage
        res.message = str(exc)
        if mode == "theorem":
            return res
        log.info("exploratory run stopped at %s: %s", stage, exc)
    return res


def summary_text(res: VerifyResult) -> str:
    s = res.summary
    verdict = "PASS" if res.passed else ("EXPLORATORY" if res.mode == "exploratory" and not res.failed_stage else "FAIL")
    lines = [f"maximal subgroup check at n={res.n}, r={res.r}, q={res.q}: {verdict}"]
    if res.failed_stage:
        lines.append(f"stopped at {res.failed_stage}: {res.message}")
    for key in ("rows", "generators", "graph_edges", "tree_relations", "closure_steps", "closure_rounds",
                "strong_edges", "stage3_pairs", "classes", "group_order"):
        if key in s:
            lines.append(f"  {key:16s} {s[key]}")
    if res.passed:
        lines.append(f"  classes = |GL_{res.r}(F_{res.q})| = {s['group_order']}")
    return "\n".join(lines) + "\n"
