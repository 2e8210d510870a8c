"""Classical reference solution of the truncated TDSE and the deviation metric.

The coupled amplitude equations c-dot = -i h(t) c are integrated with an
embedded Dormand-Prince pair (DOP853). The requested (atol, rtol) are
accuracy targets: the solver runs with a 1e-4 safety factor on both so the
default (1e-12, 1e-6) request returns values converged well past the last
printed digit (raw step control at rtol = 1e-6 leaves O(1e-7..1e-4) drift in
final probabilities, which would dominate the deviation metric).

Relative deviations are (P - P_B)/P_B * 100 percent, per state, with
max/mean absolute summaries.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.integrate import solve_ivp

from .model import SR, BasisSet, LaserPulse, field_at, hamiltonian_at

_SAFETY = 1e-4


class IntegrationError(RuntimeError):
    pass


def integrate_tdse(basis: BasisSet, pulse: LaserPulse, rep: str = SR,
                   t_end: float = 200.0, atol: float = 1e-12, rtol: float = 1e-6,
                   t_eval=None, c0=None):
    """Amplitude trajectory c(t) from c(0) = (1, 0, ...) unless overridden.

    Returns (times, amplitudes) with amplitudes shaped (len(times), N).
    """
    if atol <= 0 or rtol <= 0:
        raise ValueError("tolerances must be positive")
    n = basis.size
    energies = basis.energies()
    dipoles = basis.dipole_matrix()

    if rep == SR:
        def rhs(t, c):
            return -1j * (energies * c + field_at(pulse, t) * (dipoles @ c))
    else:
        def rhs(t, c):
            h = hamiltonian_at(basis, pulse, t, rep).entries
            return -1j * (h @ c)

    if c0 is None:
        c0 = np.zeros(n, dtype=complex)
        c0[0] = 1.0
    else:
        c0 = np.asarray(c0, dtype=complex)
        if c0.shape != (n,):
            raise ValueError(f"c0 must have length {n}")

    sol = solve_ivp(
        rhs, (0.0, t_end), c0, method="DOP853",
        rtol=max(rtol * _SAFETY, 1e-13), atol=max(atol * _SAFETY, 1e-16),
        t_eval=t_eval, dense_output=False,
    )
    if not sol.success:
        raise IntegrationError(f"ODE integration failed: {sol.message}")
    return sol.t, sol.y.T.copy()


def final_probabilities(basis: BasisSet, pulse: LaserPulse, rep: str = SR,
                        t_end: float = 200.0, **kwargs) -> np.ndarray:
    _, amps = integrate_tdse(basis, pulse, rep, t_end, **kwargs)
    return np.abs(amps[-1]) ** 2


@dataclass
class DeviationReport:
    """Per-state relative deviations from a benchmark, in percent."""

    labels: list
    probabilities: np.ndarray
    benchmark: np.ndarray
    deviations_percent: np.ndarray

    @property
    def max_abs(self) -> float:
        return float(np.abs(self.deviations_percent).max())

    @property
    def mean_abs(self) -> float:
        return float(np.abs(self.deviations_percent).mean())

    def format_table(self) -> str:
        rows = [f"{'state':>6} {'deviation(%)':>14} {'P(T)':>14} {'benchmark':>14}"]
        for label, dev, p, pb in zip(self.labels, self.deviations_percent,
                                     self.probabilities, self.benchmark):
            rows.append(f"{label:>6} {dev:>14.3e} {p:>14.8f} {pb:>14.8f}")
        rows.append(f"max |deviation| = {self.max_abs:.3e} %   "
                    f"mean |deviation| = {self.mean_abs:.3e} %")
        return "\n".join(rows)


def deviation(p_t, p_b, labels=None) -> DeviationReport:
    """(P - P_B)/P_B * 100 percent per state."""
    p_t = np.asarray(p_t, dtype=float)
    p_b = np.asarray(p_b, dtype=float)
    if p_t.shape != p_b.shape:
        raise ValueError("probability vectors must have the same length")
    if np.any(p_b <= 0):
        raise ValueError("benchmark probabilities must be positive")
    devs = (p_t - p_b) / p_b * 100.0
    if labels is None:
        labels = [str(k) for k in range(len(p_t))]
    return DeviationReport(list(labels), p_t, p_b, devs)


def data_dir() -> Path:
    override = os.environ.get("VQDYN_DATA_DIR")
    if override:
        return Path(override)
    return Path(__file__).parent / "data"


def golden_path(preset: str, omega: float) -> Path:
    return data_dir() / "benchmarks" / f"{preset}_omega{omega:g}.csv"


def write_golden(path, labels, probs):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = ["state,P_final"]
    lines += [f"{label},{p:.12e}" for label, p in zip(labels, probs)]
    path.write_text("\n".join(lines) + "\n")
    return path


def read_golden(path):
    labels, probs = [], []
    for line in Path(path).read_text().splitlines()[1:]:
        if not line.strip():
            continue
        label, value = line.split(",")
        labels.append(label)
        probs.append(float(value))
    return labels, np.array(probs)


def benchmark_probabilities(preset: str, omega: float, regenerate: bool = False) -> np.ndarray:
    """Golden final probabilities for a preset; computed on demand and cached."""
    path = golden_path(preset, omega)
    if path.exists() and not regenerate:
        return read_golden(path)[1]
    basis = BasisSet.preset(preset)
    probs = final_probabilities(basis, LaserPulse(omega=omega))
    write_golden(path, basis.labels(), probs)
    return probs
