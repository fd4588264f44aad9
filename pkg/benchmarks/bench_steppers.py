"""Throughput comparison of the compiled and numpy stepper kernels.

Usage: python3 benchmarks/bench_steppers.py [--steps N]

Runs each formulation at a few dimensions and reports steps per second
for whichever backends are importable. The compiled kernels mainly pay
off at small dimension where per-call numpy overhead dominates.
"""

import argparse
import time

import numpy as np

from sumopt import _kernels_py

try:
    from sumopt import _kernels
except ImportError:
    _kernels = None

DIMS = (8, 64, 1024, 16384)


def _bench_one(impl, form, dim, steps):
    rng = np.random.default_rng(0)
    x = rng.standard_normal(dim)
    g = rng.standard_normal(dim)
    mu, lam, eta = 0.9, 1.0, 1e-4
    lam_tilde = (1.0 - mu) * lam
    if form == "sum":
        m = np.zeros(dim)
        call = lambda: impl.sum_step(x, m, g, mu, lam, lam_tilde, eta)
    elif form == "zou":
        m_curr, m_prev = np.zeros(dim), np.zeros(dim)
        call = lambda: impl.zou_step(x, m_curr, m_prev, g, mu, lam, eta)
    else:
        y, y_tilde = x.copy(), x.copy()
        call = lambda: impl.yan_step(x, y, y_tilde, g, mu, lam, eta)
    call()   # warm up
    t0 = time.perf_counter()
    for _ in range(steps):
        call()
    return steps / (time.perf_counter() - t0)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--steps", type=int, default=20000)
    args = parser.parse_args()

    backends = [("python", _kernels_py)]
    if _kernels is not None:
        backends.append(("compiled", _kernels))
    else:
        print("compiled extension not built; showing numpy backend only\n")

    header = f"{'formulation':<12}{'dim':>8}" + "".join(
        f"{name + ' steps/s':>20}" for name, _ in backends)
    if len(backends) == 2:
        header += f"{'speedup':>10}"
    print(header)
    print("-" * len(header))
    for form in ("sum", "zou", "yan"):
        for dim in DIMS:
            rates = [_bench_one(impl, form, dim, args.steps)
                     for _, impl in backends]
            row = f"{form:<12}{dim:>8}" + "".join(f"{r:>20,.0f}" for r in rates)
            if len(rates) == 2:
                row += f"{rates[1] / rates[0]:>9.2f}x"
            print(row)


if __name__ == "__main__":
    main()
