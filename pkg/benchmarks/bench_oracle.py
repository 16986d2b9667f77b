#!/usr/bin/env python3
"""Time the bounded-model oracle under the numba and numpy kernels.

Each workload packs a constraint set once, then checks every local layout
of a fixed global instance. Both backends must agree on every instance.

Usage:
    python benchmarks/bench_oracle.py [--repeat R] [--nodes K]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from distcheck.core.instance import Fact
from distcheck.parser import parse_constraints
from distcheck.verify import _kernels
from distcheck.verify.oracle import local_batches, pack_constraints

WORKLOADS = {
    "range": (
        """Range(l,u) -> Range(l,u)@k.
        Message(s,r) -> Message(s,r)@k.
        Message(s,r)@k, Range(l,u)@m, l <= s, s <= u -> Message(s,r)@m.""",
        [Fact.of("Range", 0, 1), Fact.of("Message", 0, 0), Fact.of("Message", 1, 0),
         Fact.of("Message", 2, 1), Fact.of("Range", 2, 2)],
    ),
    "hash": (
        """Emp(n,d) -> Emp(n,d)@k.
        Emp(n,d)@k, Emp(m,d) -> Emp(m,d)@k.""",
        [Fact.of("Emp", 0, 0), Fact.of("Emp", 1, 0), Fact.of("Emp", 2, 1), Fact.of("Emp", 3, 1),
         Fact.of("Emp", 4, 2)],
    ),
}


def run(name: str, nodes: int, repeat: int) -> None:
    text, facts = WORKLOADS[name]
    sigma = parse_constraints(text)
    universe = sorted(facts, key=lambda f: (f.rel, f.args))
    values = sorted({v for f in facts for v in f.args})
    pack = pack_constraints(list(sigma), universe, values)
    g = (1 << len(universe)) - 1
    batches = list(local_batches(g, nodes))
    total = sum(len(b) for b in batches)
    # warm-up compiles the numba kernel outside the timed region
    _kernels.satisfied(g, batches[0], pack, "numba")
    times, results = {}, {}
    for backend in ("numba", "numpy"):
        best = float("inf")
        for _ in range(repeat):
            t0 = time.perf_counter()
            out = np.concatenate([_kernels.satisfied(g, b, pack, backend) for b in batches])
            best = min(best, time.perf_counter() - t0)
        times[backend], results[backend] = best, out
    agree = np.array_equal(results["numba"], results["numpy"])
    print(f"{name:6s} instances={total:8d} models={int(results['numba'].sum()):7d} "
          f"numba={times['numba']:.3f}s numpy={times['numpy']:.3f}s "
          f"speedup={times['numpy'] / times['numba']:.1f}x agree={agree}")


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--nodes", type=int, default=3)
    a = ap.parse_args()
    for name in WORKLOADS:
        run(name, a.nodes, a.repeat)


if __name__ == "__main__":
    main()
