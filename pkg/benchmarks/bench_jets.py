#!/usr/bin/env python3
"""Compare the numba and pure-numpy jet kernels.

Run with ``python benchmarks/bench_jets.py [--repeat N]``.  Each case is
timed on both backends after one warm-up call (which also triggers numba
compilation), and the results are checked for agreement.
"""

import argparse
import time

import numpy as np

from finslerkit import jets
from finslerkit.catalog import DomainSampler, MetricSpec, build_metric, sample_points
from finslerkit.geometry import weyl_w1
from finslerkit.jets import Jet, _kernels, use_backend
from finslerkit.jets._tables import num_coeffs


def random_jet(rng, nv, degree, batch):
    coeffs = rng.normal(size=(batch, num_coeffs(nv, degree))) * 0.1
    coeffs[:, 0] = 1.0 + rng.random(batch)
    return Jet(coeffs, nv, degree)


def best_of(fn, repeat):
    fn()  # warm-up
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def kernel_cases(nv=6, degree=5, batch=100):
    rng = np.random.default_rng(0)
    a = random_jet(rng, nv, degree, batch)
    b = random_jet(rng, nv, degree, batch)
    return {
        f"mul  (2n={nv}, deg {degree}, batch {batch})": lambda: a * b,
        f"div  (2n={nv}, deg {degree}, batch {batch})": lambda: a / b,
        f"sqrt (2n={nv}, deg {degree}, batch {batch})": lambda: jets.sqrt(a),
        f"log  (2n={nv}, deg {degree}, batch {batch})": lambda: jets.log(a),
    }


def pipeline_cases(samples=50):
    cases = {}
    for spec in (MetricSpec("funk", 2), MetricSpec("randers_pf", 3)):
        F = build_metric(spec)
        p = sample_points(DomainSampler(spec, seed=1), samples)
        cases[f"W1 {spec.family} n={spec.n} ({samples} pts)"] = lambda F=F, p=p: weyl_w1(F, p)
    return cases


def _coeffs(out):
    return out.coeffs if isinstance(out, Jet) else np.asarray(out)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()
    if _kernels.NUMBA_KERNELS is None:
        print("numba is not installed; only the numpy backend is available")
        return
    previous = _kernels.BACKEND
    cases = {**kernel_cases(), **pipeline_cases()}
    print(f"{'case':<42}{'numpy [ms]':>12}{'numba [ms]':>12}{'speedup':>10}")
    try:
        for name, fn in cases.items():
            use_backend("numpy")
            t_np, out_np = best_of(fn, args.repeat)
            use_backend("numba")
            t_nb, out_nb = best_of(fn, args.repeat)
            agree = np.allclose(_coeffs(out_np), _coeffs(out_nb), rtol=1e-12, atol=1e-12)
            flag = "" if agree else "  MISMATCH"
            print(f"{name:<42}{1e3 * t_np:>12.2f}{1e3 * t_nb:>12.2f}{t_np / t_nb:>9.1f}x{flag}")
    finally:
        use_backend(previous)


if __name__ == "__main__":
    main()
