#!/usr/bin/env python3
"""Benchmark the compiled kernel against the pure-Python fallback.

Times the hot operations (field evaluation, trajectory integration with and
without radius events, polar angle integration) on both backends and prints
a comparison table.  Run from the repository root:

    python benchmarks/bench_kernel.py
"""

import math
import time

from qcflow._kernel import pykernel
from qcflow.fields import compile_program, convex_combo, example1, example2, linear, rescaled

try:
    from qcflow._kernel import _core
except ImportError:
    _core = None

FIELDS = {
    "linear(1,2)": compile_program(linear(1.0, 2.0)),
    "example2/2": compile_program(rescaled(example2(), 0.5)),
    "combo": compile_program(
        convex_combo(rescaled(example1(), 0.1), rescaled(example2(), 0.5), 0.3)
    ),
}


def time_call(fn, repeat):
    t0 = time.perf_counter()
    for _ in range(repeat):
        fn()
    return (time.perf_counter() - t0) / repeat


def bench(backend):
    rows = []
    for name, prog in FIELDS.items():
        rows.append((
            f"eval x1000 [{name}]",
            time_call(lambda: [backend.eval_field(prog, 1.1 + 0.4j) for _ in range(1000)], 20),
        ))
        rows.append((
            f"integrate t=1 [{name}]",
            time_call(
                lambda: backend.integrate_time(prog, 1.1 + 0.4j, 0.0, 1.0, 1e-10, 1e-10, 0.1),
                50,
            ),
        ))
        rows.append((
            f"integrate to |x|=0.5 [{name}]",
            time_call(
                lambda: backend.integrate_time(
                    prog, 1.1 + 0.4j, 0.0, -8.0, 1e-10, 1e-10, 0.25, r_low=0.5
                ),
                50,
            ),
        ))
        rows.append((
            f"polar rho 1->2 [{name}]",
            time_call(
                lambda: backend.integrate_polar(prog, 0.3, 1.0, 2.0, 1e-10, 1e-10, 0.1),
                50,
            ),
        ))
    return rows


def main():
    pure = dict(bench(pykernel))
    print(f"{'operation':38s} {'python':>12s} {'compiled':>12s} {'speedup':>9s}")
    if _core is None:
        for op, tp in pure.items():
            print(f"{op:38s} {tp * 1e3:9.3f} ms {'n/a':>12s} {'n/a':>9s}")
        print("\ncompiled kernel not built; only the fallback was timed")
        return
    comp = dict(bench(_core))
    for op in pure:
        tp, tc = pure[op], comp[op]
        print(f"{op:38s} {tp * 1e3:9.3f} ms {tc * 1e3:9.3f} ms {tp / tc:8.1f}x")
    geo = math.exp(
        sum(math.log(pure[op] / comp[op]) for op in pure) / len(pure)
    )
    print(f"\ngeometric-mean speedup: {geo:.1f}x")


if __name__ == "__main__":
    main()
