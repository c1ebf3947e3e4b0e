"""Compiled kernels against the numpy fallback.

Runs the closure and strong-row kernels on a few instances with each
available backend, checks the outputs agree, and prints wall times.

    python3 benchmarks/bench_kernels.py [--sizes 5,2,2 7,2,2] [--repeat 3]
"""

import argparse
import time

import numpy as np

from iglin import _backend
from iglin.deltagraph import build_delta, build_spanning_tree
from iglin.gf import make_field
from iglin.tables import build_T_full, rees_from_full


def best_of(fn, repeat):
    out, best = None, float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return out, best


def same(a, b):
    return all(np.array_equal(x, y) for x, y in zip(a, b))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", nargs="+", default=["4,1,3", "5,2,2", "6,2,2", "7,2,2"])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--jobs", type=int, default=1)
    args = ap.parse_args(argv)
    backends = _backend.available()
    print(f"backends: {', '.join(backends)}")
    if "compiled" not in backends:
        print("compiled kernels are not built; only the fallback is timed")
    print(f"{'instance':>10} {'kernel':>14} " + " ".join(f"{b:>10}" for b in backends) + f" {'speedup':>8} agree")
    for spec in args.sizes:
        n, r, q = (int(t) for t in spec.split(","))
        T = build_T_full(n, r, make_field(q))
        delta = build_delta(rees_from_full(T))
        tree = build_spanning_tree(delta)
        blue0 = tree.mask(delta.nedges)
        cells = np.ascontiguousarray(T.cells, dtype=np.int32)
        kernels = {
            "closure_rounds": lambda b: _backend.closure_rounds(delta.nx, delta.ny, delta.ex, delta.ey, blue0, backend=b),
            "strong_rows": lambda b: _backend.strong_rows(cells, T.identity_vid, jobs=args.jobs, backend=b),
        }
        for name, fn in kernels.items():
            results = {b: best_of(lambda: fn(b), args.repeat) for b in backends}
            times = " ".join(f"{results[b][1]:>9.3f}s" for b in backends)
            if len(backends) == 2:
                speed = f"{results['python'][1] / results['compiled'][1]:>7.1f}x"
                agree = same(results["python"][0], results["compiled"][0])
            else:
                speed, agree = f"{'-':>8}", True
            print(f"{spec:>10} {name:>14} {times} {speed} {'yes' if agree else 'NO'}")


if __name__ == "__main__":
    main()
