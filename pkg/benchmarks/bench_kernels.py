"""Time the numba kernels against their pure-numpy fallbacks.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Each pair is run on identical inputs; results are checked for agreement
before timing. The first numba call (compilation or cache load) is excluded.
"""
import argparse
import time

import numpy as np

from conehull import kernels
from conehull._accel import HAVE_NUMBA


def _inputs(rng):
    groups = rng.standard_normal((20000, 8, 8))
    vectors = rng.standard_normal((24, 5))
    a = np.abs(rng.standard_normal(200_000))
    n = 6
    A = np.vstack([np.eye(n), rng.standard_normal((10, n))])
    A /= np.linalg.norm(A, axis=1, keepdims=True)
    b = np.ones(A.shape[0])
    steps = 20000
    d = rng.standard_normal((steps, n))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    u = rng.uniform(size=steps)
    amax = a.max()
    return {
        "sign_sum_max (20000 facets, n=8)": ("_sign_sum_max", (groups, kernels.L1)),
        "subset_sign_sum_max (C(24,5) subsets)": ("_subset_sign_sum_max", (vectors, 5, kernels.L2SQ)),
        "orlicz_root (200000 values)": (
            "_orlicz_root",
            (a, 2.0, amax / np.sqrt(np.log(2 * a.size)), amax / np.sqrt(np.log(2.0)), 1e-12, 1e-13, 200),
        ),
        "hit_and_run (20000 steps, n=6)": ("_hit_and_run", (A, b, np.zeros(n), d, u, 600, 36)),
    }


def _best(fn, args, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn(*args)
        times.append(time.perf_counter() - t)
    return min(times), out


def _same(x, y, A=None, b=None):
    if A is not None:
        # chaotic trajectories: compare containment, not coordinates
        return bool(np.all(np.abs(x @ A.T) <= b * (1 + 1e-9)) and np.all(np.abs(y @ A.T) <= b * (1 + 1e-9)))
    if isinstance(x, tuple):
        return np.allclose(x[0], y[0], rtol=1e-9)
    return np.allclose(x, y, rtol=1e-9)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    if not HAVE_NUMBA:
        print("numba unavailable (or CONEHULL_NO_NUMBA set); only the numpy path can run")
    rng = np.random.default_rng(args.seed)
    print(f"{'kernel':40s} {'numpy [s]':>10s} {'numba [s]':>10s} {'speedup':>8s}")
    for label, (stem, fargs) in _inputs(rng).items():
        t_np, r_np = _best(getattr(kernels, stem + "_np"), fargs, args.repeat)
        if HAVE_NUMBA:
            nb = getattr(kernels, stem + "_nb")
            nb(*fargs)  # compile / load cache
            t_nb, r_nb = _best(nb, fargs, args.repeat)
            hr = fargs[:2] if stem == "_hit_and_run" else (None, None)
            if not _same(r_np, r_nb, *hr):
                raise SystemExit(f"{label}: backends disagree")
            print(f"{label:40s} {t_np:10.4f} {t_nb:10.4f} {t_np / t_nb:8.1f}x")
        else:
            print(f"{label:40s} {t_np:10.4f} {'-':>10s} {'-':>8s}")


if __name__ == "__main__":
    main()
