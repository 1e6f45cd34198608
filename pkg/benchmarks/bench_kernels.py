"""Compare the compiled and numpy ZF-gain kernels.

    python3 benchmarks/bench_kernels.py [--trials 100000] [--repeat 5]

Times the kernel alone on the desk and full-scale shapes, then a full
Monte Carlo block sweep through each backend.
"""

import argparse
import dataclasses
import time

import numpy as np

from mimonoma import kernels
from mimonoma.config import preset
from mimonoma.simulator import build_system, monte_carlo_counts


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return min(times)


def bench_kernel(trials, repeat, N, r, Me):
    rng = np.random.default_rng(0)
    G = (rng.standard_normal((trials, N, r)) + 1j * rng.standard_normal((trials, N, r))) / np.sqrt(2)
    B = rng.standard_normal((r, Me)) + 1j * rng.standard_normal((r, Me))
    out = {}
    for name in kernels.available_backends():
        mod = kernels.load_backend(name)
        out[name] = best_of(lambda: mod.zf_gains(G, B), repeat)
    return out


def bench_sweep(trials, repeat):
    cfg = dataclasses.replace(preset("fig2"), trials=trials)
    system = build_system(cfg)
    return {
        name: best_of(lambda: monte_carlo_counts(system, cfg, backend=name), repeat)
        for name in kernels.available_backends()
    }


def show(title, timings, trials):
    print(title)
    base = timings.get("python")
    for name, t in timings.items():
        rel = f"  x{base / t:.1f}" if base and name != "python" else ""
        print(f"  {name:7s} {t * 1e3:9.1f} ms  {trials / t:12,.0f} trials/s{rel}")


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--trials", type=lambda s: int(float(s)), default=100_000)
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()
    print(f"backends available: {', '.join(kernels.available_backends())} (default {kernels.BACKEND})")
    for label, (N, r, Me) in {"desk N=2 r=3 M_eff=2": (2, 3, 2),
                              "full N=2 r=16 M_eff=2": (2, 16, 2),
                              "wide N=8 r=16 M_eff=6": (8, 16, 6)}.items():
        show(f"kernel, {label}, {args.trials} draws", bench_kernel(args.trials, args.repeat, N, r, Me), args.trials)
    show(f"fig2 sweep (21 SNR points, K=4, Q=2, P=3), {args.trials} trials",
         bench_sweep(args.trials, max(1, args.repeat // 2)), args.trials)


if __name__ == "__main__":
    main()
