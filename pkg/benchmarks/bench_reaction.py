"""Time the compiled reaction sweep against the numpy fallback.

    python3 benchmarks/bench_reaction.py --n 1048576 --repeat 5
"""
import argparse
import time

import numpy as np

from fracspread import kernels
from fracspread.evolve import diffuse
from fracspread.model import preset_model
from fracspread.spectral import Grid


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=2**20)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    model = preset_model()
    rng = np.random.default_rng(args.seed)
    u = rng.uniform(0.0, model.lambda_big, size=(model.m, args.n))
    coeffs = (model.K_array, model.r_array, model.q_array, model.delta, model.lambda_big, 0.005)

    t_np = best_of(lambda: kernels.numpy_reaction_rk4(u, *coeffs), args.repeat)
    print(f"numpy  reaction RK4, n={args.n}: {1e3 * t_np:8.2f} ms")
    if kernels.HAVE_EXTENSION:
        t_cy = best_of(lambda: kernels.cython_reaction_rk4(u, *coeffs), args.repeat)
        diff = np.max(np.abs(kernels.cython_reaction_rk4(u, *coeffs) - kernels.numpy_reaction_rk4(u, *coeffs)))
        print(f"cython reaction RK4, n={args.n}: {1e3 * t_cy:8.2f} ms  (speedup {t_np / t_cy:.1f}x, max diff {diff:.1e})")
    else:
        print("compiled extension not built; only the numpy fallback was timed")

    grid = Grid(args.n, float(args.n) / 8)
    t_fft = best_of(lambda: diffuse(u, model.alpha, 0.01, grid), args.repeat)
    print(f"spectral diffusion step, n={args.n}: {1e3 * t_fft:8.2f} ms")


if __name__ == "__main__":
    main()
