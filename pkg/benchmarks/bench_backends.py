"""Time the numba and numpy search kernels on the same workloads.

    python3 benchmarks/bench_backends.py            # n=2, 4 search, n=4 oracle
    python3 benchmarks/bench_backends.py --full     # adds n=6 (numpy takes about a minute)
"""
from __future__ import annotations

import argparse
import time

from otundo import csp
from otundo._accel import HAS_NUMBA


def timed(fn):
    t0 = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - t0


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--full", action="store_true", help="include the order-6 search")
    ap.add_argument("--repeat", type=int, default=1)
    args = ap.parse_args()

    backends = ["numba", "numpy"] if HAS_NUMBA else ["numpy"]
    if HAS_NUMBA:
        # compile (or load cached) kernels outside the timed region
        csp.enumerate_tables(2, backend="numba")
        csp.brute_force_oracle(2, backend="numba")

    jobs = [("search n=2", lambda b: csp.enumerate_tables(2, backend=b)),
            ("search n=4", lambda b: csp.enumerate_tables(4, backend=b)),
            ("oracle n=4", lambda b: csp.brute_force_oracle(4, backend=b))]
    if args.full:
        jobs.append(("search n=6", lambda b: csp.enumerate_tables(6, backend=b)))

    print(f"{'workload':<12} {'backend':<7} {'seconds':>9} {'solutions':>9}")
    for name, job in jobs:
        counts = set()
        for b in backends:
            best = float("inf")
            for _ in range(args.repeat):
                sols, dt = timed(lambda: job(b))
                best = min(best, dt)
            counts.add(tuple(t.flat() for t in sols.raw_solutions))
            print(f"{name:<12} {b:<7} {best:>9.3f} {len(sols.raw_solutions):>9}")
        if len(counts) != 1:
            raise SystemExit(f"{name}: backends disagree")


if __name__ == "__main__":
    main()
