"""Time the compiled kernels against the pure-Python fallback.

    python3 benchmarks/bench_kernels.py [--repeat 3] [--json]

Each workload runs once per backend on identical inputs; results are checked
for agreement before timings are reported.
"""

import argparse
import json
import sys
import timeit

import numpy as np

from ometric import _kernels_py
from ometric.contraction import mixed_tree
from ometric.patterns import enumerate_trees

try:
    from ometric import _kernels as _kernels_c
except ImportError:  # extension not built
    _kernels_c = None


def _workloads():
    trees = enumerate_trees(11)
    progs = np.stack([t.postfix() for t in trees])
    leaf_vals = np.linspace(0.5, 2.0, 11)
    window_prog = mixed_tree(3, 300).postfix()
    terms = 0.9 ** np.arange(700, dtype=np.float64)
    long_terms = np.random.default_rng(0).uniform(0, 1, 200_000)

    return {
        "all 11-leaf trees (16796 programs)": lambda k: k.eval_postfix_many(progs, leaf_vals, 0, 2.0, 2.0),
        "300 windows of a 301-leaf mixed tree": lambda k: k.eval_windows(window_prog, terms, 1, 300, 0, 2.0, 2.0),
        "binary split, n = 2..20000": lambda k: [k.binary_split_seq(n) for n in range(2, 20_001)],
        "lifo closed form, 200k terms": lambda k: k.lifo_sum(1.000001, long_terms),
        "pow2 exact sum, 200k terms": lambda k: k.pow2_exact_sum(1.000001, long_terms),
    }


def _same(a, b):
    if isinstance(a, list) and a and isinstance(a[0], tuple):
        # binary splits: compare the integer sequences exactly
        return [[list(map(int, part)) for part in x] for x in a] == [[list(map(int, part)) for part in x] for x in b]
    return np.allclose(np.asarray(a, dtype=float), np.asarray(b, dtype=float), rtol=1e-12)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--json", action="store_true", help="print machine-readable results")
    args = ap.parse_args(argv)
    if _kernels_c is None:
        print("compiled extension not available; build with `pip install -e . --no-build-isolation`", file=sys.stderr)
        return 1

    rows = []
    for name, work in _workloads().items():
        ref = work(_kernels_py)
        got = work(_kernels_c)
        if not _same(got, ref):
            print(f"{name}: backends disagree", file=sys.stderr)
            return 1
        t_py = min(timeit.repeat(lambda: work(_kernels_py), number=1, repeat=args.repeat))
        t_c = min(timeit.repeat(lambda: work(_kernels_c), number=1, repeat=args.repeat))
        rows.append({"workload": name, "python_s": t_py, "cython_s": t_c, "speedup": t_py / t_c})

    if args.json:
        print(json.dumps(rows, indent=2))
        return 0
    width = max(len(r["workload"]) for r in rows)
    print(f"{'workload':<{width}}  {'python':>9}  {'cython':>9}  {'speedup':>8}")
    for r in rows:
        print(f"{r['workload']:<{width}}  {r['python_s']:>8.4f}s  {r['cython_s']:>8.4f}s  {r['speedup']:>7.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
