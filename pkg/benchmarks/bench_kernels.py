"""Time the Cython kernels against the numpy fallback.

Run from the repository root after an editable install::

    python3 benchmarks/bench_kernels.py [--repeat 5]
"""

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from anmm import _pykernels
from anmm.matching import BinConfig
from anmm.model import init_params

try:
    from anmm import _ckernels
except ImportError:  # extension not built
    _ckernels = None


def cases(rng):
    bins = BinConfig(600)
    P = rng.uniform(-1, 1, size=(12, 40))
    P[rng.random(P.shape) < 0.05] = 1.0
    Q = rng.normal(size=(12, 300))
    A = rng.normal(size=(40, 300))
    Q /= np.linalg.norm(Q, axis=1, keepdims=True)
    A /= np.linalg.norm(A, axis=1, keepdims=True)
    qids = np.arange(12, dtype=np.int64)
    aids = np.arange(100, 140, dtype=np.int64)
    X = rng.uniform(0, 2, size=(12, 600))
    Xn = rng.uniform(0, 2, size=(12, 600))
    g = np.full(12, 1 / 12)
    p1 = init_params("anmm1", 600, 300, seed=1)
    p2 = init_params("anmm2", 600, 300, hidden=4, seed=1)

    def triple1(k):
        dw, dv = np.zeros_like(p1.w), np.zeros_like(p1.v)
        return lambda: k.anmm1_triple(X, Xn, Q, p1.w, p1.v, dw, dv)

    def triple2(k):
        dW, dr, dv = np.zeros_like(p2.w), np.zeros_like(p2.r), np.zeros_like(p2.v)
        return lambda: k.anmm2_triple(X, Xn, Q, p2.w, p2.r, p2.v, dW, dr, dv)

    return {
        "match_matrix 12x40 d=300": lambda k: (lambda: k.match_matrix(Q, A, qids, aids)),
        "bin_rows 12x40 B=600": lambda k: (lambda: k.bin_rows(P, bins.bin_count, bins.lo)),
        "anmm1_forward B=600": lambda k: (lambda: k.anmm1_forward(X, g, p1.w)),
        "anmm2_forward B=600 T=4": lambda k: (lambda: k.anmm2_forward(X, g, p2.w, p2.r)),
        "anmm1_triple grad": triple1,
        "anmm2_triple grad": triple2,
    }


def time_call(fn, repeat):
    n, _ = timeit.Timer(fn).autorange()
    return min(timeit.repeat(fn, number=n, repeat=repeat)) / n


def epoch_time(backend):
    """One training epoch on the planted fixture, in a fresh interpreter."""
    code = (
        "import time; from anmm.synthetic import planted_fixture;"
        "from anmm.training import TrainConfig, train;"
        "fx = planted_fixture(seed=7);"
        "cfg = TrainConfig('anmm1', bin_count=600, max_epochs=20, seed=7);"
        "t = time.perf_counter(); train(fx.dataset, None, cfg, fx.store);"
        "print((time.perf_counter() - t) / 20)"
    )
    env = dict(os.environ, ANMM_PURE_PYTHON="1" if backend == "python" else "0")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    return float(out.stdout.strip())


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    if _ckernels is None:
        sys.exit("compiled extension is not built; run `pip install -e . --no-build-isolation`")
    rng = np.random.default_rng(0)
    print(f"{'kernel':28s} {'cython (us)':>12s} {'numpy (us)':>12s} {'speedup':>8s}")
    for name, make in cases(rng).items():
        tc = time_call(make(_ckernels), args.repeat)
        tp = time_call(make(_pykernels), args.repeat)
        print(f"{name:28s} {tc * 1e6:12.1f} {tp * 1e6:12.1f} {tp / tc:7.1f}x")
    tc, tp = epoch_time("cython"), epoch_time("python")
    print(f"{'train epoch (fixture, B=600)':28s} {tc * 1e6:12.1f} {tp * 1e6:12.1f} {tp / tc:7.1f}x")


if __name__ == "__main__":
    main()
