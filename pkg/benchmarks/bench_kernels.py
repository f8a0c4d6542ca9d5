"""Compare the compiled and numpy kernel backends.

Usage::

    python3 benchmarks/bench_kernels.py [--repeat 5]

Reports the best-of-``repeat`` wall time per workload and the speedup of the
compiled backend.  Both backends are checked for agreement first.
"""

import argparse
import timeit

import numpy as np

from bearing_ssd import kernels
from bearing_ssd.dtree import KFold, TreeParams, evaluate
from bearing_ssd.features import FeatureId, extract_features
from bearing_ssd.signals import GeneratorConfig, generate_population


def workloads():
    rng = np.random.default_rng(0)
    x = rng.standard_normal(8192)
    v = np.sort(rng.standard_normal(400))
    y = rng.integers(0, 4, 400)
    pop = generate_population(GeneratorConfig(signals_per_class=25))
    table = extract_features(pop, [FeatureId.KURTOSIS, FeatureId.STANDARD_ERROR, FeatureId.RANGE])
    return {
        "central_moments (8192 pts)": lambda: kernels.central_moments(x),
        "trend_residual_ss (8192 pts)": lambda: kernels.trend_residual_ss(x),
        "scan_splits (400 rows)": lambda: kernels.scan_splits(v, y, 4, 2, 1e-12),
        "extract_features (100 signals)": lambda: extract_features(pop),
        "10-fold tree CV (100 rows x 3)": lambda: evaluate(table, TreeParams(), KFold(10, 0)),
    }


def check_agreement():
    rng = np.random.default_rng(1)
    py, cy = kernels.get("python"), kernels.get("cython")
    for _ in range(50):
        x = rng.standard_normal(int(rng.integers(2, 3000)))
        np.testing.assert_allclose(py.central_moments(x), cy.central_moments(x), rtol=1e-10)
        np.testing.assert_allclose(py.trend_residual_ss(x), cy.trend_residual_ss(x), rtol=1e-9)
        v = np.sort(rng.integers(0, 30, x.size).astype(float))
        y = rng.integers(0, 4, x.size)
        assert py.scan_splits(v, y, 4, 2, 1e-12)[0] == cy.scan_splits(v, y, 4, 2, 1e-12)[0]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if "cython" not in kernels.BACKENDS:
        raise SystemExit("compiled extension not built; run `pip install -e . --no-build-isolation`")
    check_agreement()
    jobs = workloads()
    times = {}
    for backend in ("python", "cython"):
        kernels.set_backend(backend)
        for name, fn in jobs.items():
            number = max(1, int(0.2 / max(min(timeit.repeat(fn, number=1, repeat=3)), 1e-7)))
            best = min(timeit.repeat(fn, number=number, repeat=args.repeat)) / number
            times[backend, name] = best
    kernels.set_backend("cython")
    width = max(map(len, jobs))
    print(f"{'workload':<{width}}  {'python':>12}  {'cython':>12}  speedup")
    for name in jobs:
        p, c = times["python", name], times["cython", name]
        print(f"{name:<{width}}  {p * 1e6:10.1f}us  {c * 1e6:10.1f}us  {p / c:6.1f}x")


if __name__ == "__main__":
    main()
