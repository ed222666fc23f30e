"""Compare the numba and numpy kernel backends.

Times one query against a packed baseline (the attribution hot path) for
common-subsequence counting and LCS, checks that both backends agree, and
prints a small table. Run with ``python3 benchmarks/bench_kernels.py``.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from ttp_attribution import _kernels
from ttp_attribution.attribution import PackedSequences
from ttp_attribution.evaluation import SynthSpec, synth_campaigns


def _best_of(fn, repeat: int) -> float:
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--baseline-size", type=int, default=435)
    ap.add_argument("--queries", type=int, default=20)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    camps = synth_campaigns(SynthSpec(), seed=args.seed)
    rng = np.random.default_rng(args.seed)
    pick = rng.choice(len(camps), size=args.baseline_size, replace=len(camps) < args.baseline_size)
    packed = PackedSequences([camps[i].sequence for i in pick.tolist()])
    queries = [packed.encode(camps[i].sequence) for i in rng.choice(len(camps), args.queries).tolist()]

    if not _kernels.HAVE_NUMBA:
        print("numba is not installed; only the numpy backend is timed")
    backends = ["numba", "numpy"] if _kernels.HAVE_NUMBA else ["numpy"]

    kernels = {
        "css": lambda q, b: _kernels.css_counts_batch(q, packed.flat, packed.offsets, backend=b),
        "lcs": lambda q, b: _kernels.lcs_batch(q, packed.flat, packed.offsets, backend=b),
    }
    print(f"baseline {len(packed)} sequences, {len(queries)} queries, best of {args.repeat}")
    print(f"{'kernel':<6} {'backend':<7} {'total s':>9} {'per query ms':>13}")
    for name, kernel in kernels.items():
        reference = None
        timings = {}
        for b in backends:
            kernel(queries[0], b)  # warm-up (JIT compile or cache load)
            timings[b] = _best_of(lambda: [kernel(q, b) for q in queries], args.repeat)
            out = [np.asarray(kernel(q, b)) for q in queries]
            if reference is None:
                reference = out
            elif not all(np.array_equal(x, y) for x, y in zip(reference, out)):
                raise SystemExit(f"{name}: backends disagree")
            print(f"{name:<6} {b:<7} {timings[b]:9.4f} {1e3 * timings[b] / len(queries):13.3f}")
        if len(timings) == 2:
            print(f"{name:<6} speedup {timings['numpy'] / timings['numba']:8.1f}x")


if __name__ == "__main__":
    main()
