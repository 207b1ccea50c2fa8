"""Compiled vs pure-Python path kernel: wall time per path and bitwise parity.

    python benchmarks/bench_kernel.py [--samples 2000] [--repeat 3]
"""

import argparse
import time
from pathlib import Path

import numpy as np

from levyqueue import _backend, simulator
from levyqueue.levy_model import load_model

MODELS = Path(__file__).resolve().parents[1] / "models"
CASES = [
    ("bm", "exact", 1e-3),
    ("sp", "exact", 1e-3),
    ("two_sided", "exact", 1e-3),
    ("bm", "grid", 1e-2),
    ("two_sided", "grid", 1e-2),
]
FIELDS = ("horizon", "q0", "x_end", "x_min", "g_min", "tau", "overshoot")


def timed(kernel, model, cfg, repeat):
    simulator._kernel = kernel
    best, batch = np.inf, None
    for _ in range(repeat):
        t0 = time.perf_counter()
        batch = simulator.simulate(model, cfg)
        best = min(best, time.perf_counter() - t0)
    return best, batch


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--samples", type=int, default=2000)
    p.add_argument("--repeat", type=int, default=3)
    args = p.parse_args(argv)
    if not _backend.COMPILED:
        raise SystemExit("compiled kernel not built: run `python setup.py build_ext --inplace`")
    print(f"{'model':<10} {'mode':<6} {'step':>7} {'cython us/path':>15} {'python us/path':>15} "
          f"{'speedup':>8} {'identical':>9}")
    for name, mode, step in CASES:
        model = load_model(MODELS / f"{name}.model")
        cfg = simulator.SimConfig(1.0, args.samples, 1, mode, step)
        tc, bc = timed(_backend.kernel, model, cfg, args.repeat)
        tp, bp = timed(_backend.pure_kernel, model, cfg, args.repeat)
        same = all(np.array_equal(getattr(bc, f), getattr(bp, f), equal_nan=True) for f in FIELDS)
        n = args.samples
        print(f"{name:<10} {mode:<6} {step:>7g} {1e6 * tc / n:>15.2f} {1e6 * tp / n:>15.2f} "
              f"{tp / tc:>8.0f}x {str(same):>9}")
    simulator._kernel = _backend.kernel


if __name__ == "__main__":
    main()
