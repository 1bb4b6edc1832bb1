"""Compare the numba kernels with their numpy fallbacks.

Kernel timings call each backend explicitly in one process.  The end-to-end
timing runs one Lippmann-Schwinger solve in two subprocesses, one of them
with ``ELSCAT_DISABLE_NUMBA=1``, so the switch is exercised as users see it.

    python benchmarks/bench_kernels.py [--N 64] [--repeat 5]
"""

from __future__ import annotations

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from elscat.forward import pointwise_matvec
from elscat.grid import make_grid, nuft_eval
from elscat.special import bessel_jy01

SOLVE_SNIPPET = """
import time
from elscat import LameParams, PlaneWave, make_grid, make_load, solve_lippmann_schwinger
from elscat.experiments import LoadSpec
from elscat._accel import backend_name
grid = make_grid(2.0, {N})
Q = make_load(LoadSpec("pot2", amplitude=0.5), grid)
lame = LameParams(2.0, 1.0)
wave = PlaneWave.p_wave((1.0, 0.0), 3.0)
solve_lippmann_schwinger(Q, wave, 6.0, lame, grid, 1.0)
t0 = time.perf_counter()
for _ in range({repeat}):
    solve_lippmann_schwinger(Q, wave, 6.0, lame, grid, 1.0)
print(backend_name(), (time.perf_counter() - t0) / {repeat})
"""


def best(fn, repeat: int) -> float:
    fn()  # warm-up, includes compilation
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def kernel_rows(N: int, repeat: int):
    rng = np.random.default_rng(0)
    grid = make_grid(2.0, N)
    x = rng.uniform(0.01, 80.0, N * N)
    a = rng.standard_normal((2, 2, N, N)) + 1j * rng.standard_normal((2, 2, N, N))
    v = rng.standard_normal((2, N, N)) + 1j * rng.standard_normal((2, N, N))
    xi = rng.uniform(-10, 10, (64, 2))
    cases = {
        f"bessel_jy01 ({N * N} args)": lambda b: bessel_jy01(x, backend=b),
        f"pointwise_matvec ({N}x{N})": lambda b: pointwise_matvec(a, v, backend=b),
        f"nuft_eval ({N}x{N}, 1 freq)": lambda b: nuft_eval(v, grid, xi[0], backend=b),
        f"nuft_eval ({N}x{N}, 64 freqs)": lambda b: nuft_eval(v, grid, xi, backend=b),
    }
    for name, call in cases.items():
        tn = best(lambda: call("numba"), repeat)
        tp = best(lambda: call("numpy"), repeat)
        yield name, tn, tp


def solve_times(N: int, repeat: int):
    out = {}
    for disable in ("0", "1"):
        env = dict(os.environ, ELSCAT_DISABLE_NUMBA=disable)
        res = subprocess.run([sys.executable, "-c", SOLVE_SNIPPET.format(N=N, repeat=repeat)],
                             env=env, capture_output=True, text=True, check=True)
        name, t = res.stdout.split()
        out[name] = float(t)
    return out


def main(argv=None) -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--N", type=int, default=64)
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args(argv)

    print(f"{'kernel':<34}{'numba [ms]':>12}{'numpy [ms]':>12}{'speedup':>10}")
    for name, tn, tp in kernel_rows(args.N, args.repeat):
        print(f"{name:<34}{1e3 * tn:>12.3f}{1e3 * tp:>12.3f}{tp / tn:>10.2f}")
    t = solve_times(args.N, max(1, args.repeat // 2))
    print(f"{'LS solve (end to end)':<34}{1e3 * t['numba']:>12.3f}{1e3 * t['numpy']:>12.3f}"
          f"{t['numpy'] / t['numba']:>10.2f}")


if __name__ == "__main__":
    main()
