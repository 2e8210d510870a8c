#!/usr/bin/env python3
"""Sampling and device-noise drift studies on the 4-state system (2-qubit QEE).

Two experiment families, both starting from equal amplitudes (0.5 each),
2000 steps of dt = 0.1, 50,000 shots per measured quantity:

  free   - no laser field; parameters should stay put, so any drift in the
           recorded probabilities is sampling/noise accumulation. Compare
           the Schroedinger representation (static Hamiltonian still has
           Pauli terms to measure -> errors feed back into theta) with the
           interaction representation (zero Hamiltonian -> theta frozen).
  pulsed - omega = 0.222 laser in IR with the device noise model; after the
           pulse dies (t > 100) the probabilities should sit inside the
           sampling bands.

Writes one drift CSV per run (t, per-state deviation, per-state 100-step
moving average) next to --out-dir.
"""

import argparse
import time
from pathlib import Path

import numpy as np

from vqdyn.ansatz import fit_initial_params, make_ansatz
from vqdyn.benchmark import data_dir
from vqdyn.measure import ANALYTIC, CIRCUIT, EvalBackend
from vqdyn.model import IR, SR, BasisSet, LaserPulse
from vqdyn.noise import load_calibration
from vqdyn.varsolver import MarchConfig, march


def moving_average(series, window=100):
    kernel = np.ones(window) / window
    return np.apply_along_axis(lambda c: np.convolve(c, kernel, mode="valid"), 0, series)


def drift_csv(path, labels, times, devs):
    ma = moving_average(devs)
    offset = len(devs) - len(ma)
    header = ["t"] + [f"dev_{l}" for l in labels] + [f"ma_{l}" for l in labels]
    rows = []
    for idx, t in enumerate(times):
        row = [f"{t:.10g}"] + [f"{d:.10e}" for d in devs[idx]]
        row += ([f"{m:.10e}" for m in ma[idx - offset]] if idx >= offset
                else [""] * len(labels))
        rows.append(",".join(row))
    Path(path).write_text(",".join(header) + "\n" + "\n".join(rows) + "\n")


def run(rep, pulse, noise_model, shots, seed, t_end, reference_probs=None):
    spec = make_ansatz("qee", 4)
    basis = BasisSet.preset("h4")
    theta0 = fit_initial_params(spec, np.full(4, 0.5, dtype=complex))
    backend = EvalBackend(mode=CIRCUIT, shots=shots, seed=seed, noise_model=noise_model)
    config = MarchConfig(dt=0.1, t_end=t_end, backend=backend,
                         representation=rep, record_every=1)
    start = time.time()
    record = march(spec, config, basis, pulse, theta0)
    if reference_probs is None:
        reference = march(spec, MarchConfig(dt=0.1, t_end=t_end,
                                            backend=EvalBackend(mode=ANALYTIC),
                                            representation=rep, record_every=1),
                          basis, pulse, theta0)
        reference_probs = reference.probabilities
    devs = record.probabilities - reference_probs
    print(f"  [{time.time() - start:.0f}s] final max |deviation| = "
          f"{np.abs(devs[-1]).max():.3e}; max 100-step MA = "
          f"{np.abs(moving_average(devs)).max():.3e}")
    return record, devs, reference_probs


def main():
    parser = argparse.ArgumentParser(description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--out-dir", type=Path, default=Path("noise_study"))
    parser.add_argument("--shots", type=int, default=50_000)
    parser.add_argument("--seed", type=int, default=2021)
    parser.add_argument("--t-end", type=float, default=200.0,
                        help="shorten for quick smoke runs")
    parser.add_argument("--experiments", nargs="+", default=["free", "pulsed"],
                        choices=("free", "pulsed"))
    args = parser.parse_args()
    args.out_dir.mkdir(parents=True, exist_ok=True)
    model = load_calibration(data_dir() / "ibmq_jakarta_2021-10-10.csv").with_fallback("worst")
    labels = BasisSet.preset("h4").labels()

    if "free" in args.experiments:
        pulse = LaserPulse(e0=0.0)
        for rep in (SR, IR):
            for tag, noise in (("sampling", None), ("noise", model)):
                print(f"free field, {rep.upper()}, {tag}:")
                record, devs, _ = run(rep, pulse, noise, args.shots,
                                      args.seed, args.t_end, reference_probs=0.25)
                drift_csv(args.out_dir / f"free_{rep}_{tag}.csv",
                          labels, record.times, devs)

    if "pulsed" in args.experiments:
        pulse = LaserPulse(omega=0.222)
        reference = None
        for tag, noise in (("sampling", None), ("noise", model)):
            print(f"pulsed omega=0.222, IR, {tag}:")
            record, devs, reference = run(IR, pulse, noise, args.shots,
                                          args.seed + 1, args.t_end,
                                          reference_probs=reference)
            drift_csv(args.out_dir / f"pulsed_ir_{tag}.csv",
                      labels, record.times, devs)


if __name__ == "__main__":
    main()
