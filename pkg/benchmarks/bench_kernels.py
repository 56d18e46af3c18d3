"""Time the compiled kernels against the numpy reference.

Per-kernel timings run both implementations in-process on identical inputs.
The end-to-end row re-runs a small visiting solve in a subprocess per
backend, since the backend is chosen once at import.

Usage: python3 benchmarks/bench_kernels.py [--n 81] [--repeat 20] [--skip-e2e]
"""

from __future__ import annotations

import argparse
import statistics
import subprocess
import sys
import time

import numpy as np

from visitsolve._kernels import available_backends, reference

try:
    from visitsolve._kernels import _fast
except ImportError:
    _fast = None


def _time(fn, *args, repeat: int) -> float:
    """Best-of-repeat wall time in milliseconds."""
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best * 1e3


def kernel_rows(n: int, repeat: int):
    rng = np.random.default_rng(7)
    cells = n - 1
    dx = 2.0 / cells
    xs = np.ascontiguousarray(np.linspace(-1.0, 1.0, n))
    X, Y = np.meshgrid(xs, xs, indexing="ij")
    V = np.ascontiguousarray((X - 0.2) ** 2 + 0.5 * (Y + 0.1) ** 2)
    rho = np.ascontiguousarray(np.abs(rng.standard_normal(V.shape)))
    warm0 = np.zeros_like(V)
    warm1 = np.zeros_like(V)
    m = 4 * n * n
    qx = rng.uniform(-1.0, 1.0, m)
    qy = rng.uniform(-1.0, 1.0, m)
    weights = np.ascontiguousarray(np.abs(rng.standard_normal(m)))

    cases = [
        ("interp_2d", lambda b: b.interp_2d(
            V, qx, qy, -1.0, -1.0, dx, cells, cells)),
        ("hjb_quadratic_2d", lambda b: b.hjb_quadratic_2d(
            V, rho, warm0, warm1, xs, xs, -1.0, -1.0, 1.0, 1.0,
            dx, cells, cells, dx / 2.0, 0.0, 4.0, 50, 1e-8)),
        ("scatter_2d", lambda b: b.scatter_2d(
            weights, qx, qy, -1.0, -1.0, dx, cells, cells)),
    ]
    for label, call in cases:
        ref_ms = _time(call, reference, repeat=repeat)
        if _fast is None:
            yield label, ref_ms, None
        else:
            yield label, ref_ms, _time(call, _fast, repeat=repeat)


_E2E_SNIPPET = """
import time, numpy as np
import visitsolve as vs
from visitsolve.scenario import bundled_scenario_path, load_scenario
sc = load_scenario(bundled_scenario_path("test2"))
grid, ss = sc.build_grid(), sc.build_statespace()
cost = sc.build_cost(ss)
t0 = time.perf_counter()
vs.backward_solve(grid, ss, cost)
print(time.perf_counter() - t0)
"""


def e2e_seconds(backend: str, runs: int = 3) -> float:
    samples = []
    for _ in range(runs):
        out = subprocess.run(
            [sys.executable, "-c", _E2E_SNIPPET],
            capture_output=True, text=True, check=True,
            env={"VISITSOLVE_BACKEND": backend, "PATH": "/usr/bin:/bin"},
        )
        samples.append(float(out.stdout.strip()))
    return statistics.median(samples)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=81, help="nodes per axis")
    ap.add_argument("--repeat", type=int, default=20, help="timing repeats")
    ap.add_argument("--skip-e2e", action="store_true",
                    help="skip the subprocess end-to-end solve")
    args = ap.parse_args()

    print(f"backends available: {', '.join(available_backends())}")
    print(f"grid {args.n}x{args.n}, best of {args.repeat}\n")
    print(f"{'kernel':<22}{'reference':>12}{'fast':>12}{'speedup':>10}")
    for label, ref_ms, fast_ms in kernel_rows(args.n, args.repeat):
        if fast_ms is None:
            print(f"{label:<22}{ref_ms:>10.2f}ms{'-':>12}{'-':>10}")
        else:
            print(f"{label:<22}{ref_ms:>10.2f}ms{fast_ms:>10.2f}ms"
                  f"{ref_ms / fast_ms:>9.1f}x")

    if args.skip_e2e or _fast is None:
        return
    print("\nend-to-end (single-disc scenario, median of 3 solves)")
    ref_s = e2e_seconds("reference")
    fast_s = e2e_seconds("fast")
    print(f"{'backward_solve':<22}{ref_s:>11.2f}s{fast_s:>11.2f}s"
          f"{ref_s / fast_s:>9.1f}x")


if __name__ == "__main__":
    main()
