"""Timings of the compiled kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Each case checks that both backends agree before timing them.
"""

import argparse
import timeit

import numpy as np

from qdeepcluster import _fallback

try:
    from qdeepcluster import _core
except ImportError:
    _core = None


def cases(rng):
    d_small = rng.uniform(0, 5, (60, 3))
    d_large = rng.uniform(0, 5, (500, 8))
    x_vec = rng.normal(size=(60, 1, 1, 64))
    w_vec = rng.normal(size=(4, 1, 1, 3))
    x_img = rng.normal(size=(16, 3, 28, 28))
    w_img = rng.normal(size=(8, 3, 3, 3))
    g_vec = rng.normal(size=(60, 4, 1, 64))
    g_img = rng.normal(size=(16, 8, 28, 28))
    return [
        ("anneal 60x3, 400 steps", "anneal_probabilities", (d_small, 50.0, 400)),
        ("anneal 500x8, 400 steps", "anneal_probabilities", (d_large, 50.0, 400)),
        ("conv fwd 60x1x1x64, 1x3", "conv2d_forward", (x_vec, w_vec)),
        ("conv fwd 16x3x28x28, 3x3", "conv2d_forward", (x_img, w_img)),
        ("conv bwd 60x1x1x64, 1x3", "conv2d_backward", (x_vec, w_vec, g_vec)),
        ("conv bwd 16x3x28x28, 3x3", "conv2d_backward", (x_img, w_img, g_img)),
    ]


def best_time(fn, args, repeat):
    number = 1
    while timeit.timeit(lambda: fn(*args), number=number) < 0.2 and number < 10 ** 5:
        number *= 2
    return min(timeit.repeat(lambda: fn(*args), number=number, repeat=repeat)) / number


def agree(a, b):
    if isinstance(a, tuple):
        return all(np.allclose(x, y, atol=1e-10) for x, y in zip(a, b))
    return np.allclose(a, b, atol=1e-10)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    rng = np.random.default_rng(args.seed)
    print(f"{'case':<28}{'python ms':>12}{'cython ms':>12}{'speedup':>10}")
    for name, fn, fargs in cases(rng):
        py = best_time(getattr(_fallback, fn), fargs, args.repeat)
        if _core is None:
            print(f"{name:<28}{py * 1e3:>12.3f}{'n/a':>12}{'n/a':>10}")
            continue
        if not agree(getattr(_core, fn)(*fargs), getattr(_fallback, fn)(*fargs)):
            raise SystemExit(f"backends disagree on {name}")
        cy = best_time(getattr(_core, fn), fargs, args.repeat)
        print(f"{name:<28}{py * 1e3:>12.3f}{cy * 1e3:>12.3f}{py / cy:>9.1f}x")


if __name__ == "__main__":
    main()
