"""Compiled vs pure-Python kernels.

    python benchmarks/bench_core.py [--events N] [--outer M] [--repeat R]

Times the event-simulation kernel, the fast-timescale recursion and one
short optimizer run under each backend, and checks the outputs agree
bit-for-bit.
"""

from __future__ import annotations

import argparse
import statistics
import time

import numpy as np

from qgsf import _backend, _core_py
from qgsf.environments import QueueNetwork, QueueNetworkConfig
from qgsf.qgaussian import QGaussianSpec
from qgsf.two_timescale import OptimizerConfig, run


def backends():
    impls = {"python": _core_py}
    try:
        from qgsf import _core

        impls["cython"] = _core
    except ImportError:
        pass
    return impls


def use(impl):
    _backend.simulate_events = impl.simulate_events
    _backend.fast_recursion = impl.fast_recursion


def best_of(fn, repeat):
    times, out = [], None
    for _ in range(repeat):
        start = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - start)
    return min(times), statistics.median(times), out


def bench_events(n):
    def go():
        rep = QueueNetwork().create_replica(1)
        return rep.run_events(np.full(20, 0.6), n).costs
    return go


def bench_recursion(steps, dim=20):
    rng = np.random.default_rng(0)
    gw, hw = rng.normal(size=dim), rng.normal(size=(dim, dim))
    cp, cm = rng.uniform(0, 5, 100), rng.uniform(0, 5, 100)

    def go():
        z, w = np.zeros(dim), np.zeros((dim, dim))
        for n in range(steps):
            _backend.fast_recursion(z, w, 1 / (n + 1) ** 0.85, 1 / (n + 1) ** 0.65, gw, hw, cp, cm, True)
        return np.concatenate([z, w.ravel()])
    return go


def bench_run(outer):
    cfg = QueueNetworkConfig()
    config = OptimizerConfig("nqsf2", QGaussianSpec(20, 1.0, 0.1), cfg.box, outer_iterations=outer, inner_iterations=100)

    def go():
        return run(config, QueueNetwork(cfg), np.full(20, 0.6), cfg.theta_bar).theta
    return go


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--events", type=int, default=200_000)
    ap.add_argument("--steps", type=int, default=500)
    ap.add_argument("--outer", type=int, default=200)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)

    saved = _backend.simulate_events, _backend.fast_recursion
    cases = [
        (f"simulate_events x{args.events}", bench_events(args.events)),
        (f"fast_recursion x{args.steps} (N=20, L=100)", bench_recursion(args.steps)),
        (f"nqsf2 run M={args.outer} L=100", bench_run(args.outer)),
    ]
    impls = backends()
    print(f"{'case':<40} {'backend':<8} {'best s':>9} {'median s':>9} {'speed-up':>9}")
    try:
        for label, fn in cases:
            results = {}
            for name, impl in impls.items():
                use(impl)
                results[name] = best_of(fn, args.repeat)
            base = results["python"][0]
            for name, (best, med, _) in results.items():
                print(f"{label:<40} {name:<8} {best:9.4f} {med:9.4f} {base / best:8.1f}x")
            if "cython" in results:
                same = results["python"][2].tobytes() == results["cython"][2].tobytes()
                print(f"{'':<40} outputs bit-identical: {same}")
    finally:
        _backend.simulate_events, _backend.fast_recursion = saved
    if len(impls) == 1:
        print("compiled backend not built; only the Python kernels were timed")


if __name__ == "__main__":
    main()
