"""Time the numba kernels against the pure-numpy fallback and check they agree.

Run with ``python3 benchmarks/bench_kernels.py [--repeat N] [--scale S]``.
The first numba call per kernel is reported separately as compile/cache-load time.
"""

import argparse
import time

import numpy as np

from dfdl.kernels import _numba, _numpy


def _unit(rng, d, k):
    D = rng.standard_normal((d, k))
    return np.asfortranarray(D / np.linalg.norm(D, axis=0))


def _best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def cases(scale, rng):
    n = int(2000 * scale)
    D = _unit(rng, 100, 64)
    Y = rng.standard_normal((100, n))
    Dl = _unit(rng, 100, 128)
    Yl = rng.standard_normal((100, max(n // 10, 1)))
    S = rng.standard_normal((64, n)) * (rng.uniform(size=(64, n)) < 0.05)
    E = Y @ S.T / n
    F = S @ S.T / n
    return {
        "omp (d=100, k=64, L=10)": (lambda m: m.omp_batch(D, Y, 10, 1e-10)[0]),
        "lasso (d=100, k=128, lam=0.1)": (lambda m: m.lasso_batch(Dl, Yl, 0.1, 1e-7, 10000)[0]),
        "bcd sweep (d=100, k=64)": (lambda m: m.bcd_sweep(D.copy(order="F"), E, F, 1e-10)[0]),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--scale", type=float, default=1.0, help="multiplies the number of samples")
    args = ap.parse_args(argv)
    rng = np.random.default_rng(0)
    print(f"{'kernel':32s} {'numpy s':>9s} {'numba s':>9s} {'speedup':>8s} {'first call s':>12s} {'max |diff|':>10s}")
    for name, run in cases(args.scale, rng).items():
        t0 = time.perf_counter()
        run(_numba)
        first = time.perf_counter() - t0
        t_np, out_np = _best_of(lambda: run(_numpy), args.repeat)
        t_nb, out_nb = _best_of(lambda: run(_numba), args.repeat)
        diff = float(np.max(np.abs(out_np - out_nb)))
        print(f"{name:32s} {t_np:9.4f} {t_nb:9.4f} {t_np / t_nb:8.2f} {first:12.3f} {diff:10.2e}")


if __name__ == "__main__":
    main()
