"""Benchmark the compiled kernels against the pure-numpy fallback.

Times the numerical hot paths (piecewise-GP likelihood sweep, GP log
marginal likelihood, kernel matrix construction) and one full
coregionalized inference call under both backends.

Usage: python benchmarks/bench_backends.py [--quick]
"""

import argparse
import logging
import time

import numpy as np

logging.getLogger("multitask").setLevel(logging.ERROR)

from multitask import backend
from multitask.domain import CompositionGrid, PhaseLabelSet
from multitask.groundtruth import ChallengeSpec, true_phase, true_property
from multitask.inference import InferenceParams, coregional_infer


def _time(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def build_workloads(quick: bool):
    rng = np.random.default_rng(0)
    n_draws = 500 if quick else 2000
    n_points = 20
    x = np.sort(rng.uniform(0, 100, n_points))
    y = rng.normal(0, 3, n_points)
    cps = np.sort(rng.uniform(0, 100, (n_draws, 2)), axis=1)
    ls = rng.uniform(1, 20, (n_draws, 3))
    ss = rng.uniform(1, 20, (n_draws, 3))
    ns = rng.uniform(0.01, 0.1, n_draws)
    grid = np.linspace(0, 100, 101)

    lml_calls = 100 if quick else 400

    workloads = {
        f"piecewise_rbf_loglik ({n_draws} draws, {n_points} pts)": lambda: backend.piecewise_rbf_loglik(
            cps, ls, ss, ns, x, y, 1e-6
        ),
        f"gp_log_marginal x{lml_calls} (12 pts)": lambda: [
            backend.gp_log_marginal(x[:12], y[:12], 8.0, 3.0, 0.05, 1, 1e-6) for _ in range(lml_calls)
        ],
        "matern52_matrix (101 x 101)": lambda: [
            backend.matern52_matrix(grid, grid, 10.0, 5.0) for _ in range(20)
        ],
    }
    return workloads


def coregional_workload(quick: bool):
    grid = CompositionGrid.default()
    spec = ChallengeSpec.for_challenge(2)
    rng = np.random.default_rng(1)
    xs = np.sort(rng.choice(grid.points, 18, replace=False))
    labels = PhaseLabelSet.one_hot(xs, true_phase(xs, spec))
    xf = np.sort(rng.choice(grid.points, 14, replace=False))
    yf = true_property(xf, spec) + rng.normal(0, 0.05, xf.size)
    params = InferenceParams(n_prior_samples=500 if quick else 2000)

    def run():
        coregional_infer(labels, xf, yf, grid, params, np.random.default_rng(7))

    return "coregional_infer (full call)", run


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--quick", action="store_true", help="smaller workloads, fewer repeats")
    args = parser.parse_args()
    repeats = 2 if args.quick else 3

    try:
        backend.set_backend("native")
        have_native = True
    except ImportError:
        have_native = False
        print("native extension unavailable; only the python backend will run\n")

    workloads = build_workloads(args.quick)
    name, fn = coregional_workload(args.quick)
    workloads[name] = fn

    rows = []
    for label, fn in workloads.items():
        times = {}
        for which in ("python", "native") if have_native else ("python",):
            backend.set_backend(which)
            times[which] = _time(fn, repeats)
        if have_native:
            rows.append((label, times["python"], times["native"], times["python"] / times["native"]))
        else:
            rows.append((label, times["python"], float("nan"), float("nan")))

    width = max(len(r[0]) for r in rows) + 2
    print(f"{'workload':<{width}} {'python':>10} {'native':>10} {'speedup':>8}")
    for label, py, nat, speedup in rows:
        nat_s = f"{nat * 1e3:9.2f}ms" if have_native else "      n/a"
        spd = f"{speedup:7.1f}x" if have_native else "     n/a"
        print(f"{label:<{width}} {py * 1e3:9.2f}ms {nat_s} {spd}")


if __name__ == "__main__":
    main()
