"""Compiled vs numpy recurrent kernels: forward + backward wall time.

    python3 benchmarks/bench_kernels.py [--repeat 20]

Shapes follow the session detectors: batch 8, hidden 64, sessions of up to
``steps`` utterances.
"""

import argparse
import time

import numpy as np

from emodep.tensor import kernels


def bench(mod, cell, xp, w_hh, lengths, repeat):
    fwd = getattr(mod, f"{cell}_forward")
    bwd = getattr(mod, f"{cell}_backward")
    g = np.ones((xp.shape[0], w_hh.shape[0]), dtype=xp.dtype)
    fwd(xp, w_hh, lengths, False)  # warm up
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        h, cache = fwd(xp, w_hh, lengths, False)
        bwd(cache, w_hh, g)
        best = min(best, time.perf_counter() - t0)
    return best, h


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=20)
    ap.add_argument("--batch", type=int, default=8)
    ap.add_argument("--hidden", type=int, default=64)
    ap.add_argument("--steps", type=int, nargs="+", default=[8, 64, 256])
    args = ap.parse_args()
    if kernels.compiled_backend is None:
        print("compiled extension not built; only the numpy backend is available")
    rng = np.random.default_rng(0)
    print(f"{'cell':5s} {'dtype':8s} {'steps':>5s} {'numpy ms':>9s} {'cython ms':>9s} {'speedup':>7s} {'max |dh|':>9s}")
    for cell, gates in (("lstm", 4), ("gru", 3)):
        for dtype in (np.float32, np.float64):
            for steps in args.steps:
                xp = rng.normal(size=(args.batch, steps, gates * args.hidden)).astype(dtype)
                w_hh = (0.1 * rng.normal(size=(args.hidden, gates * args.hidden))).astype(dtype)
                lengths = rng.integers(1, steps + 1, size=args.batch)
                t_py, h_py = bench(kernels.python_backend, cell, xp, w_hh, lengths, args.repeat)
                if kernels.compiled_backend is None:
                    print(f"{cell:5s} {np.dtype(dtype).name:8s} {steps:5d} {1e3 * t_py:9.3f} {'-':>9s}")
                    continue
                t_c, h_c = bench(kernels.compiled_backend, cell, xp, w_hh, lengths, args.repeat)
                diff = float(np.max(np.abs(h_py - h_c)))
                print(f"{cell:5s} {np.dtype(dtype).name:8s} {steps:5d} {1e3 * t_py:9.3f} {1e3 * t_c:9.3f} {t_py / t_c:7.2f} {diff:9.2e}")


if __name__ == "__main__":
    main()
