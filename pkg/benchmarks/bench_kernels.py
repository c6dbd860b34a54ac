"""Compiled vs numpy kernels on representative batch sizes.

    python benchmarks/bench_kernels.py [--repeat 5]
"""

import argparse
import timeit

import numpy as np

from weingarten import _pykernels

try:
    from weingarten import _ckernels
except ImportError:  # extension not built
    _ckernels = None


def cases(rng):
    kap = rng.uniform(0.1, 2.0, size=(20_000, 4))
    grad = rng.normal(size=(4096, 2)) * 0.2
    hess = rng.normal(size=(4096, 2, 2))
    hess = hess + np.transpose(hess, (0, 2, 1))
    h = rng.uniform(0.5, 1.0, 4096)
    hp = rng.uniform(0.1, 1.0, 4096)
    return {
        "esym N=20000 n=4 k=3": lambda m: m.esym(kap, 3),
        "esym_grad N=20000 n=4 k=2": lambda m: m.esym_grad(kap, 2),
        "esym_hess N=20000 n=4 k=3": lambda m: m.esym_hess(kap, 3),
        "shape_eigs N=4096 n=2 (64x64 grid)": lambda m: m.shape_eigs(h, hp, grad, hess),
    }


def main(argv=None):
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    rng = np.random.default_rng(0)
    print(f"{'kernel':40s} {'python ms':>10s} {'cython ms':>10s} {'speedup':>8s}")
    for name, fn in cases(rng).items():
        tp = min(timeit.repeat(lambda: fn(_pykernels), number=1, repeat=args.repeat)) * 1e3
        if _ckernels is None:
            print(f"{name:40s} {tp:10.2f} {'n/a':>10s}")
            continue
        tc = min(timeit.repeat(lambda: fn(_ckernels), number=1, repeat=args.repeat)) * 1e3
        print(f"{name:40s} {tp:10.2f} {tc:10.2f} {tp / tc:7.1f}x")


if __name__ == "__main__":
    main()
