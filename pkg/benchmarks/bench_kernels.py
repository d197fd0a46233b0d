"""Compiled core against the numpy fallback on the hot kernels.

    python benchmarks/bench_kernels.py [--repeat 3] [--scale 1.0]
"""
import argparse
import time

import numpy as np

from kpzlab import _backend
from kpzlab.growth import evolve_interface, polymer_psi, quadratic_psi
from kpzlab.kernels import local_time_scan
from kpzlab.noise import ModelParams, NoiseField, NoiseSpec
from kpzlab.polymer import evolve_partition, ky_fields


def cases(scale):
    T = int(1024 * scale)
    X = int(64 * scale)
    p = ModelParams(N=4096, beta=1.0, A=1.0)
    rad, gau = NoiseSpec("rademacher"), NoiseSpec("gaussian")
    return {
        "noise_block": lambda: NoiseField(gau, 1).block(0, X + T, 0, T),
        "partition(rademacher)": lambda: evolve_partition(NoiseField(rad, 1), p, 1.0, T, X),
        "partition(gaussian)": lambda: evolve_partition(NoiseField(gau, 1), p, 1.0, T, X),
        "interface(quadratic)": lambda: evolve_interface(quadratic_psi(0.25), NoiseField(gau, 1), p, 1.0, T, X),
        "interface(polymer)": lambda: evolve_interface(polymer_psi(1.0), NoiseField(gau, 1), p, 1.0, T, X),
        "ky(eps=0.25)": lambda: ky_fields(NoiseField(rad, 1), p, 1 / 12, T // 2, X, epsilon=0.25),
        "local_time(N=1e4)": lambda: local_time_scan(10**4, 1.0, 1.0, 1.0, 6, 12, 10.0),
    }


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--scale", type=float, default=1.0)
    args = ap.parse_args()
    backends = _backend.available()
    if "cython" not in backends:
        print("compiled extension not built; only the numpy fallback is available")
    names = sorted(backends)
    print(f"{'kernel':<24}" + "".join(f"{n:>12}" for n in names) + f"{'speedup':>10}")
    for label, fn in cases(args.scale).items():
        row = {}
        for name in names:
            _backend.use(name)
            fn()  # warm up
            row[name] = best_of(fn, args.repeat)
        speed = row["python"] / row["cython"] if "cython" in row else np.nan
        print(f"{label:<24}" + "".join(f"{row[n]:>11.4f}s" for n in names) + f"{speed:>9.1f}x")


if __name__ == "__main__":
    main()
