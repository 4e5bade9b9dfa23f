"""Throughput of the compiled and pure-numpy Langevin kernels.

Integrates the same chunk of trajectories with both backends, checks that
they produce identical tallies, and reports steps per second.

    python3 benchmarks/bench_kernels.py --trajectories 256 --steps 20000
"""

from __future__ import annotations

import argparse
import json
import time

import numpy as np

from chiralkramers.config import load_config
from chiralkramers.forcefield import pack_parameters
from chiralkramers.simulator import KernelGrid, SimulationPlan, initial_positions, integrate_chunk, plan_domain
from chiralkramers.simulator import rng
from chiralkramers.statistics import HysteresisConfig


def _timed(backend, params, starts, keys, n_steps, dt, model, grid, repeats):
    best = np.inf
    tallies = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        tallies = integrate_chunk(params, starts, keys, n_steps, dt, model.drag, model.kT, grid, backend=backend)
        best = min(best, time.perf_counter() - t0)
    return best, tallies


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--config", default="paper-achiral.cfg")
    p.add_argument("--trajectories", type=int, default=256)
    p.add_argument("--steps", type=int, default=20_000)
    p.add_argument("--repeats", type=int, default=3)
    args = p.parse_args(argv)

    cfg = load_config(args.config)
    model = cfg.force_model()
    plan = SimulationPlan(95.4e-12, args.steps, args.trajectories, master_seed=7, regime=cfg.regime)
    domain = plan_domain(plan, model)
    hyst = HysteresisConfig.from_model(model, cfg.regime)
    grid = KernelGrid(domain.z_lo, domain.z_hi, domain.q_max, 200, 32, 0.0, hyst.lower, hyst.upper)
    idx = np.arange(args.trajectories)
    starts = initial_positions(plan, model, "left", idx, domain)
    keys = rng.trajectory_keys(plan.master_seed, idx)
    params = pack_parameters(model)

    t0 = time.perf_counter()
    integrate_chunk(params, starts[:1], keys[:1], 10, plan.time_step, model.drag, model.kT, grid, backend="numba")
    warmup = time.perf_counter() - t0

    report = {"trajectories": args.trajectories, "steps": args.steps, "numba_first_call_s": warmup}
    results = {}
    for backend in ("numba", "numpy"):
        seconds, tallies = _timed(backend, params, starts, keys, args.steps, plan.time_step, model, grid, args.repeats)
        results[backend] = tallies
        report[f"{backend}_s"] = seconds
        report[f"{backend}_steps_per_s"] = args.trajectories * args.steps / seconds
    report["speedup"] = report["numpy_s"] / report["numba_s"]
    a, b = results["numba"], results["numpy"]
    report["identical_histograms"] = bool(np.array_equal(a.hist_z, b.hist_z) and np.array_equal(a.hist_qz, b.hist_qz))
    report["max_final_position_difference_m"] = float(np.max(np.abs(a.final - b.final)))
    print(json.dumps(report, indent=2))


if __name__ == "__main__":
    main()
