"""Experiment runner: bench, evolve, noisy, fourier, compare.

Configuration can come from a TOML file (--config) whose keys mirror the
flag names; command-line flags win. Exit codes: 0 success, 2 configuration
error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from . import benchmark, varsolver
from .ansatz import fit_initial_params, ground_start, make_ansatz
from .benchmark import benchmark_probabilities, deviation, final_probabilities
from .measure import ANALYTIC, CIRCUIT, EvalBackend
from .model import (IR, PRESETS, SR, BasisSet, LaserPulse, field_at, fourier_expand)
from .noise import load_calibration
from .varsolver import MarchConfig, SolverError, march, run_metadata

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

LONG_RUN_EVALUATIONS = 1e7
BUNDLED_CALIBRATION = "ibmq_jakarta_2021-10-10.csv"


class ConfigError(ValueError):
    pass


def _add_common(p):
    p.add_argument("--config", type=Path, help="TOML file with defaults for these flags")
    p.add_argument("--preset", choices=sorted(PRESETS), help="built-in basis set")
    p.add_argument("--basis-file", type=Path, help="basis from a text file of 'n l' pairs")
    p.add_argument("--omega", type=float, default=0.06, help="carrier frequency (a.u.)")
    p.add_argument("--e0", type=float, default=0.25, help="peak field amplitude (a.u.)")
    p.add_argument("--tau", type=float, default=20.5, help="Gaussian width (a.u.)")
    p.add_argument("--t0", type=float, default=50.0, help="envelope center (a.u.)")
    p.add_argument("--t-end", type=float, default=200.0, help="final time (a.u.)")
    p.add_argument("--out", type=Path, help="output CSV path")


def _add_march(p):
    p.add_argument("--encoding", choices=("jwe", "qee"), default="qee")
    p.add_argument("--dt", type=float, default=1e-2, help="marching step (a.u.)")
    p.add_argument("--marching", choices=("fom", "som"), default="som")
    gpc = p.add_mutually_exclusive_group()
    gpc.add_argument("--gpc", dest="gpc", action="store_true", default=True)
    gpc.add_argument("--no-gpc", dest="gpc", action="store_false")
    p.add_argument("--backend", choices=(ANALYTIC, CIRCUIT), default=ANALYTIC)
    p.add_argument("--shots", type=int, default=0)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--noise-calibration", type=Path, help="calibration file for device noise")
    p.add_argument("--representation", choices=(SR, IR), default=SR)
    p.add_argument("--record-every", type=int, default=100)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--allow-long", action="store_true",
                   help="permit runs above ~1e7 entry evaluations")
    p.add_argument("--initial", help="comma-separated initial amplitudes (complex)")


def build_parser():
    parser = argparse.ArgumentParser(prog="vqdyn", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bench", help="classical ODE benchmark probabilities")
    _add_common(p)
    p.add_argument("--representation", choices=(SR, IR), default=SR)
    p.add_argument("--atol", type=float, default=1e-12)
    p.add_argument("--rtol", type=float, default=1e-6)

    p = sub.add_parser("evolve", help="variational evolution + deviation report")
    _add_common(p)
    _add_march(p)

    p = sub.add_parser("noisy", help="sampled/noisy evolution with drift report")
    _add_common(p)
    _add_march(p)
    p.set_defaults(backend=CIRCUIT, record_every=1, dt=1e-1)

    p = sub.add_parser("fourier", help="Fourier coefficients of the pulse")
    _add_common(p)
    p.add_argument("--half-interval", type=float, default=100.0, dest="half_interval")
    p.add_argument("--n-max", type=int, default=8, dest="n_max")
    p.add_argument("--shift-peak", action="store_true", default=True,
                   help="expand with the envelope peak shifted to t = 0")

    p = sub.add_parser("compare", help="diff two run CSVs, emit a deviation table")
    p.add_argument("csv_a", type=Path)
    p.add_argument("csv_b", type=Path, help="reference run (denominator of the relative deviations)")
    return parser


def _apply_config_file(args):
    if getattr(args, "config", None) is None:
        return args
    try:
        data = tomllib.loads(Path(args.config).read_text())
    except Exception as exc:
        raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
    argv_given = {a.lstrip("-").replace("-", "_") for a in sys.argv if a.startswith("--")}
    for key, value in data.items():
        attr = key.replace("-", "_")
        if not hasattr(args, attr):
            raise ConfigError(f"unknown config key {key!r}")
        if attr in argv_given:  # flags win over the file
            continue
        if attr in ("basis_file", "out", "noise_calibration", "config"):
            value = Path(value)
        setattr(args, attr, value)
    return args


def _basis(args) -> BasisSet:
    if getattr(args, "basis_file", None):
        if not Path(args.basis_file).exists():
            raise ConfigError(f"basis file {args.basis_file} does not exist")
        return BasisSet.from_file(args.basis_file)
    if getattr(args, "preset", None):
        return BasisSet.preset(args.preset)
    raise ConfigError(f"one of --preset ({', '.join(sorted(PRESETS))}) or --basis-file is required")


def _pulse(args) -> LaserPulse:
    return LaserPulse(e0=args.e0, tau=args.tau, t0=args.t0, omega=args.omega)


def _backend(args) -> EvalBackend:
    noise_model = None
    if getattr(args, "noise_calibration", None):
        path = Path(args.noise_calibration)
        if not path.exists():
            bundled = benchmark.data_dir() / path.name
            if bundled.exists():
                path = bundled
            else:
                raise ConfigError(f"calibration file {args.noise_calibration} does not exist")
        # jakarta's coupling graph has no triangles; worst-case fallback covers
        # the one ancilla pair no assignment can route (connectivity modeling
        # is out of scope)
        noise_model = load_calibration(path).with_fallback("worst")
        if args.shots <= 0:
            raise ConfigError("--noise-calibration requires --shots > 0")
    if args.backend == ANALYTIC and (args.shots > 0 or noise_model is not None):
        raise ConfigError("sampling and noise require --backend circuit")
    return EvalBackend(mode=args.backend, shots=args.shots, seed=args.seed,
                       noise_model=noise_model)


def _march_pieces(args):
    basis = _basis(args)
    pulse = _pulse(args)
    try:
        spec = make_ansatz(args.encoding, basis.size)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    backend = _backend(args)
    if args.encoding == "qee" and backend.mode == ANALYTIC and spec.n_qubits > 3:
        raise ConfigError(
            "symbolic-analytic QEE beyond 3 qubits is unsupported; pass --backend circuit"
        )
    config = MarchConfig(
        dt=args.dt, t_end=args.t_end, scheme=args.marching, gpc=args.gpc,
        backend=backend, representation=args.representation,
        record_every=args.record_every, threads=args.threads,
    )
    estimated = config.n_steps * spec.n_params ** 2
    if estimated > LONG_RUN_EVALUATIONS and not args.allow_long:
        raise ConfigError(
            f"estimated {estimated:.2g} entry evaluations exceeds {LONG_RUN_EVALUATIONS:.0e}; "
            "rerun with --allow-long"
        )
    if args.initial:
        target = np.array([complex(tok) for tok in args.initial.split(",")])
        theta0 = fit_initial_params(spec, target)
    else:
        theta0 = ground_start(spec)
    return spec, config, basis, pulse, theta0


def cmd_bench(args) -> int:
    basis = _basis(args)
    pulse = _pulse(args)
    probs = final_probabilities(basis, pulse, rep=args.representation,
                                t_end=args.t_end, atol=args.atol, rtol=args.rtol)
    for label, p in zip(basis.labels(), probs):
        print(f"{label} {p:.8f}")
    out = args.out or benchmark.golden_path(args.preset or Path(args.basis_file).stem,
                                            args.omega)
    benchmark.write_golden(out, basis.labels(), probs)
    print(f"golden file written to {out}")
    return EXIT_OK


def cmd_evolve(args) -> int:
    spec, config, basis, pulse, theta0 = _march_pieces(args)
    record = march(spec, config, basis, pulse, theta0)
    p_b = (benchmark_probabilities(args.preset, args.omega) if args.preset
           else final_probabilities(basis, pulse))
    report = deviation(record.final_probabilities, p_b, basis.labels())
    print(report.format_table())
    if args.out:
        record.write(args.out)
        print(f"run record written to {args.out}")
    return EXIT_OK


def _moving_average(series: np.ndarray, window: int = 100) -> np.ndarray:
    if len(series) < window:
        return np.array([series.mean(axis=0)])
    kernel = np.ones(window) / window
    return np.apply_along_axis(lambda col: np.convolve(col, kernel, mode="valid"),
                               0, series)


def cmd_noisy(args) -> int:
    if args.shots <= 0:
        raise ConfigError("noisy runs require --shots > 0")
    args.backend = CIRCUIT
    spec, config, basis, pulse, theta0 = _march_pieces(args)
    # exact-backend reference with the same marching settings
    ref_config = MarchConfig(dt=config.dt, t_end=config.t_end, scheme=config.scheme,
                             gpc=config.gpc, backend=EvalBackend(mode=ANALYTIC),
                             representation=config.representation,
                             record_every=config.record_every, threads=config.threads)
    reference = march(spec, ref_config, basis, pulse, theta0)
    record = march(spec, config, basis, pulse, theta0)
    devs = record.probabilities - reference.probabilities
    ma = _moving_average(devs, window=100)
    header = (["t"] + [f"dev_{lbl}" for lbl in basis.labels()]
              + [f"ma_{lbl}" for lbl in basis.labels()])
    rows = []
    offset = len(devs) - len(ma)
    for idx, t in enumerate(record.times):
        row = [f"{t:.10g}"] + [f"{d:.10e}" for d in devs[idx]]
        ma_idx = idx - offset
        row += [f"{m:.10e}" for m in ma[ma_idx]] if ma_idx >= 0 else [""] * basis.size
        rows.append(",".join(row))
    out = args.out or Path("noisy_drift.csv")
    Path(out).parent.mkdir(parents=True, exist_ok=True)
    Path(out).write_text(",".join(header) + "\n" + "\n".join(rows) + "\n")
    sidecar = Path(str(out) + ".meta.json")
    sidecar.write_text(json.dumps(run_metadata(spec, config, basis, pulse),
                                  indent=2, sort_keys=True) + "\n")
    final_dev = np.abs(devs[-1])
    print(f"final |deviation| per state: "
          + " ".join(f"{lbl}={d:.3e}" for lbl, d in zip(basis.labels(), final_dev)))
    print(f"max 100-step moving-average |deviation|: {np.abs(ma).max():.3e}")
    print(f"drift report written to {out}")
    return EXIT_OK


def cmd_fourier(args) -> int:
    pulse = _pulse(args)
    if args.shift_peak:
        # envelope peak moved to t = 0, carrier phase referenced there too
        shifted = LaserPulse(e0=pulse.e0, tau=pulse.tau, t0=0.0, omega=pulse.omega)
        f = lambda t: field_at(shifted, t)
    else:
        f = lambda t: field_at(pulse, t)
    series = fourier_expand(f, args.half_interval, args.n_max)
    print(f"{'n':>3} {'A_n':>12} {'B_n':>12}")
    print(f"{0:>3} {series.a0:>12.7f} {0.0:>12.7f}")
    for n in range(1, series.order + 1):
        print(f"{n:>3} {series.an[n - 1]:>12.7f} {series.bn[n - 1]:>12.7f}")
    return EXIT_OK


def _read_run_csv(path):
    with open(path) as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = np.array([[float(x) for x in row] for row in reader])
    n_states = len(header) - 2
    return header, rows[:, 0], rows[:, 2:2 + n_states]


def cmd_compare(args) -> int:
    for p in (args.csv_a, args.csv_b):
        if not Path(p).exists():
            raise ConfigError(f"{p} does not exist")
    header_a, t_a, p_a = _read_run_csv(args.csv_a)
    header_b, t_b, p_b = _read_run_csv(args.csv_b)
    if p_a.shape[1] != p_b.shape[1]:
        raise ConfigError("runs have different state counts")
    n = min(len(t_a), len(t_b))
    if not np.allclose(t_a[:n], t_b[:n]):
        raise ConfigError("time grids do not match")
    labels = [h[2:] for h in header_a[2:]]
    report = deviation(p_a[n - 1], np.maximum(p_b[n - 1], 1e-300), labels)
    print(report.format_table())
    print(f"max |P_a - P_b| over {n} common rows: "
          f"{np.abs(p_a[:n] - p_b[:n]).max():.3e}")
    return EXIT_OK


COMMANDS = {
    "bench": cmd_bench,
    "evolve": cmd_evolve,
    "noisy": cmd_noisy,
    "fourier": cmd_fourier,
    "compare": cmd_compare,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args = _apply_config_file(args)
        return COMMANDS[args.command](args)
    except (ConfigError, FileNotFoundError, KeyError, ValueError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SolverError, benchmark.IntegrationError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        partial = getattr(exc, "partial_record", None)
        if partial is not None and getattr(args, "out", None):
            partial.write(args.out)
            print(f"partial record written to {args.out}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
