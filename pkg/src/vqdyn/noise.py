"""Device-noise model built from calibration data; Kraus channels on the
density-matrix backend.

Per touched qubit each gate gets, in order: thermal relaxation (amplitude
damping with p_ad = 1 - exp(-t_gate/T1), then pure dephasing scaling
coherences by exactly 1 - p_pd where p_pd = 1 - exp(-t_gate/T_phi) and
1/T_phi = 1/T2 - 1/(2 T1)), then a depolarizing channel at the calibrated
gate error (the 15-Pauli two-qubit channel for entangling gates). Readout
passes exact probabilities through a symmetric confusion matrix before
sampling.

Calibration file format (comma separated, two sections):

    [qubits]
    id,gate_error,readout_error,t1_us,t2_us
    ...
    [pairs]
    control,target,gate_error,time_ns
    ...

A controlled-rotation counts as two CNOTs of its pair: doubled error and
doubled gate time.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .circuit import DensityMatrix, Gate, _apply_1q_tensor, apply_gate
from .pauli import _P1

DEFAULT_SINGLE_GATE_TIME_NS = 35.0


class CalibrationError(ValueError):
    """Malformed or unphysical calibration data."""


@dataclass(frozen=True)
class QubitCalibration:
    gate_error: float
    readout_error: float
    t1: float  # microseconds
    t2: float  # microseconds

    def __post_init__(self):
        for name in ("gate_error", "readout_error"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise CalibrationError(f"{name} must be a probability, got {p}")
        if self.t1 <= 0 or self.t2 <= 0:
            raise CalibrationError("relaxation times must be positive")
        if self.t2 > 2 * self.t1 + 1e-12:
            raise CalibrationError(f"unphysical T2 > 2*T1 ({self.t2} vs {self.t1})")


@dataclass(frozen=True)
class CouplerCalibration:
    pair: tuple
    gate_error: float
    gate_time: float  # nanoseconds

    def __post_init__(self):
        if not 0.0 <= self.gate_error <= 1.0:
            raise CalibrationError("pair gate_error must be a probability")
        if self.gate_time <= 0:
            raise CalibrationError("pair gate time must be positive")


@dataclass(frozen=True)
class NoiseModel:
    qubits: dict
    pairs: dict
    single_gate_time: float = DEFAULT_SINGLE_GATE_TIME_NS
    pair_fallback: str = "strict"  # or "worst": max listed error/time touching either qubit

    def qubit_params(self, q: int) -> QubitCalibration:
        try:
            return self.qubits[q]
        except KeyError:
            raise KeyError(f"no calibration data for qubit {q}") from None

    def pair_params(self, control: int, target: int) -> CouplerCalibration:
        if (control, target) in self.pairs:
            return self.pairs[(control, target)]
        if (target, control) in self.pairs:
            return self.pairs[(target, control)]
        if self.pair_fallback == "worst":
            touching = [c for p, c in self.pairs.items() if control in p or target in p]
            if touching:
                return CouplerCalibration(
                    (control, target),
                    max(c.gate_error for c in touching),
                    max(c.gate_time for c in touching),
                )
        raise KeyError(f"no calibration data for qubit pair ({control}, {target})")

    def with_fallback(self, policy: str) -> "NoiseModel":
        if policy not in ("strict", "worst"):
            raise ValueError(f"unknown pair fallback policy {policy!r}")
        return replace(self, pair_fallback=policy)


def load_calibration(path, single_gate_time: float = DEFAULT_SINGLE_GATE_TIME_NS) -> NoiseModel:
    """Parse a two-section calibration file into a NoiseModel.

    Only listed qubits/pairs are covered; nothing is defaulted in.
    """
    qubits, pairs = {}, {}
    section = None
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            section = line.strip("[]").lower()
            if section not in ("qubits", "pairs"):
                raise CalibrationError(f"unknown section {line!r} at line {lineno}")
            continue
        fields = [f.strip() for f in line.split(",")]
        lowered = [f.lower() for f in fields]
        if "gate_error" in lowered:  # header row
            continue
        try:
            if section == "qubits":
                if len(fields) != 5:
                    raise ValueError("expected id,gate_error,readout_error,t1_us,t2_us")
                qubits[int(fields[0])] = QubitCalibration(
                    float(fields[1]), float(fields[2]), float(fields[3]), float(fields[4])
                )
            elif section == "pairs":
                if len(fields) != 4:
                    raise ValueError("expected control,target,gate_error,time_ns")
                pair = (int(fields[0]), int(fields[1]))
                pairs[pair] = CouplerCalibration(pair, float(fields[2]), float(fields[3]))
            else:
                raise ValueError("data before any section header")
        except CalibrationError:
            raise
        except ValueError as exc:
            raise CalibrationError(f"{path}:{lineno}: {exc}") from None
    if not qubits:
        raise CalibrationError(f"{path}: no qubit calibration entries")
    return NoiseModel(qubits, pairs, single_gate_time)


def amplitude_damping_kraus(gamma: float):
    return [
        np.array([[1, 0], [0, np.sqrt(1 - gamma)]], dtype=complex),
        np.array([[0, np.sqrt(gamma)], [0, 0]], dtype=complex),
    ]


def dephasing_kraus(p_pd: float):
    """Phase flip with q = p_pd/2, scaling coherences by exactly 1 - p_pd."""
    q = p_pd / 2.0
    return [np.sqrt(1 - q) * _P1["I"], np.sqrt(q) * _P1["Z"]]


def depolarizing_kraus(p: float, n_qubits: int = 1):
    """Uniform n-qubit depolarizing: with probability p replace by I/2^n."""
    dim_sq = 4 ** n_qubits
    words = ["".join(w) for w in itertools.product("IXYZ", repeat=n_qubits)]
    ops = []
    for w in words:
        mat = _P1[w[0]]
        for c in w[1:]:
            mat = np.kron(mat, _P1[c])
        weight = 1 - p * (dim_sq - 1) / dim_sq if w == "I" * n_qubits else p / dim_sq
        ops.append(np.sqrt(weight) * mat)
    return ops


def apply_kraus_1q(rho: DensityMatrix, kraus, q: int):
    """rho' = sum_k K rho K^dagger with each K acting on qubit q."""
    w = rho.width
    total = np.zeros_like(rho.entries)
    for k in kraus:
        work = rho.entries.reshape([2] * (2 * w)).copy()
        _apply_1q_tensor(work, k, q)
        _apply_1q_tensor(work, k.conj(), q + w)
        total += work.reshape(rho.entries.shape)
    rho.entries[:] = total
    return rho


def apply_kraus_2q(rho: DensityMatrix, kraus, q0: int, q1: int):
    """Two-qubit Kraus channel; each K is 4x4 ordered (q0, q1)."""
    w = rho.width
    dim = 2 ** w
    total = np.zeros_like(rho.entries)
    for k in kraus:
        work = rho.entries.reshape([2] * (2 * w)).copy()
        for side, offset in ((k, 0), (k.conj(), w)):
            moved = np.moveaxis(work, (q0 + offset, q1 + offset), (0, 1))
            moved[:] = (side @ moved.reshape(4, -1)).reshape(moved.shape)
        total += work.reshape(dim, dim)
    rho.entries[:] = total
    return rho


def apply_depolarizing(rho: DensityMatrix, p: float, qubits) -> DensityMatrix:
    """Closed form of the uniform depolarizing channel on `qubits`.

    rho' = (1-p) rho + p (I/2^k) (x) tr_qubits(rho); equals applying the
    4^k-operator Kraus set from depolarizing_kraus.
    """
    w = rho.width
    qubits = tuple(qubits)
    k = len(qubits)
    arr = rho.entries.reshape([2] * (2 * w))
    axes = list(qubits) + [q + w for q in qubits]
    moved = np.moveaxis(arr, axes, range(2 * k))
    rest = 2 ** (w - k)
    block = moved.reshape(2 ** k, 2 ** k, rest, rest)
    traced = np.einsum("iijk->jk", block)
    out = (1.0 - p) * block
    scale = p / 2 ** k
    for b in range(2 ** k):
        out[b, b] += scale * traced
    moved[:] = out.reshape(moved.shape)
    return rho


def _thermal_relaxation(rho: DensityMatrix, q: int, cal: QubitCalibration, time_ns: float):
    t_us = time_ns * 1e-3
    p_ad = 1.0 - np.exp(-t_us / cal.t1)
    inv_tphi = 1.0 / cal.t2 - 0.5 / cal.t1
    apply_kraus_1q(rho, amplitude_damping_kraus(p_ad), q)
    if inv_tphi > 0:
        p_pd = 1.0 - np.exp(-t_us * inv_tphi)
        apply_kraus_1q(rho, dephasing_kraus(p_pd), q)
    return rho


def _entangling_pairs(gate: Gate):
    """(control, target, error/time scale) triples for a gate's 2-qubit content.

    CRX counts as two CNOTs of its pair. Ancilla controls attached via
    Gate.controlled() pair the ancilla with every acted-on target.
    """
    pairs = []
    if gate.kind in ("cnot", "crx"):
        scale = 2.0 if gate.kind == "crx" else 1.0
        pairs.append((gate.targets[0], gate.targets[1], scale))
        acted = list(gate.targets[1:])
    elif gate.kind == "cpauli":
        acted = [t for c, t in zip(gate.word, gate.targets[1:]) if c != "I"]
        pairs.extend((gate.targets[0], t, 1.0) for t in acted)
    elif gate.kind == "pauli":
        acted = [t for c, t in zip(gate.word, gate.targets) if c != "I"]
    else:
        acted = list(gate.targets)
    for ctrl, _pol in gate.controls:
        pairs.extend((ctrl, t, 1.0) for t in acted)
    return pairs


def _gate_noise_plan(gate: Gate, model: NoiseModel):
    """(duration_ns, depolarizing ops) for one gate."""
    pairs = _entangling_pairs(gate)
    if pairs:
        duration, plan = 0.0, []
        for control, target, scale in pairs:
            cal = model.pair_params(control, target)
            duration += scale * cal.gate_time
            plan.append(("2q", (control, target), min(1.0, scale * cal.gate_error)))
        return duration, plan
    # purely single-qubit gate (x, h, rx, ry, rz, pauli)
    plan = [("1q", (q,), model.qubit_params(q).gate_error) for q in gate.targets]
    return model.single_gate_time, plan


def apply_noisy_gate(rho: DensityMatrix, gate: Gate, model: NoiseModel) -> DensityMatrix:
    """Ideal unitary followed by thermal relaxation and depolarizing noise."""
    apply_gate(rho, gate)
    duration, plan = _gate_noise_plan(gate, model)
    touched = sorted(set(gate.qubits))
    for q in touched:
        _thermal_relaxation(rho, q, model.qubit_params(q), duration)
    for kind, qubits, p in plan:
        if p > 0:
            apply_depolarizing(rho, p, qubits)
    return rho


def confusion_matrix(epsilon: float) -> np.ndarray:
    return np.array([[1 - epsilon, epsilon], [epsilon, 1 - epsilon]])


def noisy_readout(rho: DensityMatrix, q: int, model: NoiseModel, shots: int = 0, seed=None):
    """Measure qubit q through its symmetric readout confusion matrix."""
    from .circuit import qubit_marginal

    eps = model.qubit_params(q).readout_error
    p0 = min(1.0, max(0.0, qubit_marginal(rho, q)))
    p0_obs = float(confusion_matrix(eps)[0] @ [p0, 1 - p0])
    if shots == 0:
        return (p0_obs, 1.0 - p0_obs)
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    n0 = int(rng.binomial(shots, min(1.0, max(0.0, p0_obs))))
    return (n0, shots - n0)


def readout_confused_probabilities(probs: np.ndarray, model: NoiseModel, width: int) -> np.ndarray:
    """Joint basis distribution after per-qubit confusion matrices."""
    t = np.asarray(probs, dtype=float).reshape([2] * width)
    for q in range(width):
        moved = np.moveaxis(t, q, 0)
        conf = confusion_matrix(model.qubit_params(q).readout_error)
        stacked = conf @ moved.reshape(2, -1)
        t = np.moveaxis(stacked.reshape(moved.shape), 0, q)
    return t.reshape(-1)
