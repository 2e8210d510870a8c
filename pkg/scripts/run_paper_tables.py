#!/usr/bin/env python3
"""Sweep the evolution experiments and print deviation tables.

Reproduces the deviation-table studies: for each basis size and encoding,
march with the chosen step sizes and report per-state relative deviations
from the ODE benchmark. The default sweep covers the half-cycle pulse
(omega = 0.06) at dt = 1e-1 and 1e-2; pass --dt values and --omega to vary.

Example:
    python scripts/run_paper_tables.py --cases qee:2 qee:4 jwe:4 --dt 1e-1 1e-2
"""

import argparse
import time

import numpy as np

from vqdyn.ansatz import make_ansatz
from vqdyn.benchmark import benchmark_probabilities, deviation
from vqdyn.measure import EvalBackend
from vqdyn.model import BasisSet, LaserPulse
from vqdyn.varsolver import MarchConfig, march

DEFAULT_CASES = ["jwe:2", "qee:2", "jwe:4", "qee:4", "qee:8"]


def run_case(scheme, n, dt, omega, gpc, stepper):
    basis = BasisSet.preset(f"h{n}")
    spec = make_ansatz(scheme, n)
    config = MarchConfig(dt=dt, t_end=200.0, scheme=stepper, gpc=gpc,
                         backend=EvalBackend(mode="analytic"))
    start = time.time()
    record = march(spec, config, basis, LaserPulse(omega=omega))
    elapsed = time.time() - start
    p_b = np.array(benchmark_probabilities(f"h{n}", omega))
    return deviation(record.final_probabilities, p_b, basis.labels()), elapsed


def main():
    parser = argparse.ArgumentParser(description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--cases", nargs="+", default=DEFAULT_CASES,
                        help="encoding:N pairs, e.g. qee:4")
    parser.add_argument("--dt", nargs="+", type=float, default=[1e-1, 1e-2])
    parser.add_argument("--omega", type=float, default=0.06)
    parser.add_argument("--no-gpc", dest="gpc", action="store_false", default=True)
    parser.add_argument("--marching", choices=("fom", "som"), default="som")
    args = parser.parse_args()

    for case in args.cases:
        scheme, n = case.split(":")
        n = int(n)
        for dt in args.dt:
            report, elapsed = run_case(scheme, n, dt, args.omega, args.gpc, args.marching)
            print(f"\n=== {scheme.upper()} N={n}  dt={dt:g}  omega={args.omega:g}  "
                  f"gpc={args.gpc}  {args.marching.upper()}  [{elapsed:.0f}s] ===")
            print(report.format_table())


if __name__ == "__main__":
    main()
