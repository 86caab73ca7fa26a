"""Compare the compiled and numpy pair-sampling kernels.

Times the raw kernel on synthetic batches, then a full simulated run
under each backend (forced through MODEBELL_KERNEL in a subprocess so
the import-time selection is exercised for real).

Usage: python3 benchmarks/benchmark_kernels.py [--sizes 10000,100000,1000000]
"""

import argparse
import math
import os
import subprocess
import sys
import time

import numpy as np

from modebell._kernel import _numpy_impl

try:
    from modebell._kernel import _pairsampler
except ImportError:
    _pairsampler = None

_RUN_SNIPPET = """
import time
from modebell.montecarlo import RunConfig, simulate_run
import modebell._kernel as kernel

config = RunConfig(pair_rate=5000.0, windows_per_setting=30, seed=0)
start = time.perf_counter()
records = simulate_run(config)
elapsed = time.perf_counter() - start
print(f"{kernel.active_backend()} {elapsed:.4f} {len(records)}")
"""


def make_inputs(n, seed=0):
    rng = np.random.default_rng(seed)
    cos_phi = np.cos(rng.uniform(-math.pi, math.pi, size=n))
    uniforms = rng.random((n, 5))
    eta = np.array([0.95, 0.8, 0.9, 0.85])
    return cos_phi, uniforms, eta


def best_of(fn, repeats):
    times = []
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return min(times)


def bench_kernel(sizes, repeats):
    print(f"{'pairs':>10} {'numpy (ms)':>12} {'compiled (ms)':>14} {'speedup':>8}")
    for n in sizes:
        cos_phi, uniforms, eta = make_inputs(n)
        args = (0.952, cos_phi, uniforms, eta, 2, 0.5)
        t_numpy = best_of(lambda: _numpy_impl.sample_pairs(*args), repeats)
        if _pairsampler is None:
            print(f"{n:>10} {1e3 * t_numpy:>12.3f} {'not built':>14} {'-':>8}")
            continue
        t_compiled = best_of(lambda: _pairsampler.sample_pairs(*args), repeats)
        print(
            f"{n:>10} {1e3 * t_numpy:>12.3f} {1e3 * t_compiled:>14.3f} "
            f"{t_numpy / t_compiled:>7.2f}x"
        )


def bench_run():
    print("\nfull simulated run (600k expected pairs), per backend:")
    for backend in ("python", "compiled"):
        env = dict(os.environ, MODEBELL_KERNEL=backend)
        probe = subprocess.run(
            [sys.executable, "-c", _RUN_SNIPPET],
            capture_output=True,
            text=True,
            env=env,
        )
        if probe.returncode != 0:
            print(f"  {backend}: failed ({probe.stderr.strip()})")
            continue
        name, elapsed, count = probe.stdout.split()
        print(f"  {name:>8}: {float(elapsed) * 1e3:8.1f} ms for {count} records")


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument(
        "--sizes",
        default="10000,100000,1000000",
        help="comma-separated batch sizes for the raw kernel timing",
    )
    parser.add_argument("--repeats", type=int, default=5)
    parser.add_argument(
        "--skip-run", action="store_true", help="only time the raw kernel"
    )
    args = parser.parse_args()
    sizes = [int(s) for s in args.sizes.split(",")]
    bench_kernel(sizes, args.repeats)
    if not args.skip_run:
        bench_run()


if __name__ == "__main__":
    main()
