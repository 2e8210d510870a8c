"""Hadamard-test construction and evaluation.

Every quantity in the per-step linear system reduces to real-part Hadamard
tests: the purely imaginary branch factors (-i/2, +-i/4) of the ansatz
derivatives fold into real postprocess coefficients, so no S-gate variant is
needed. A test is a list of (gate, polarity) ops on system + one ancilla
(ancilla = last qubit): polarity None ops run unconditionally, polarity 1
ops only on the ancilla-|1> branch (the "ket" side), polarity 0 only on the
|0> branch (the "bra" side). The measured P(0) - P(1) on the ancilla equals
Re<bra|ket>, and sum coeff * (P(0) - P(1)) over a kind's tests equals the
target quantity.

Evaluation fidelities: analytic (two plain statevector runs and an inner
product - no ancilla, the independent cross-check of the circuit path),
exact circuit (shots = 0), shot-sampled, and noisy (density matrix +
calibrated noise + confused readout).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import circuit as qc
from .ansatz import AnsatzSpec, _instantiate, derivative_branches
from .circuit import DensityMatrix, Gate, StateVector
from .noise import NoiseModel, apply_noisy_gate, noisy_readout
from .pauli import PauliString

ANALYTIC = "analytic"
CIRCUIT = "circuit"


@dataclass(frozen=True)
class EvalBackend:
    """How matrix/vector entries are computed.

    mode "analytic" bypasses circuits entirely. mode "circuit" runs the
    Hadamard-test circuits: exactly when shots == 0, with binomial sampling
    when shots > 0, and on the noisy density-matrix backend when a noise
    model is attached (shots > 0 required then).
    """

    mode: str = ANALYTIC
    shots: int = 0
    seed: int = None
    noise_model: NoiseModel = None

    def __post_init__(self):
        if self.mode not in (ANALYTIC, CIRCUIT):
            raise ValueError(f"unknown backend mode {self.mode!r}")
        if self.shots < 0:
            raise ValueError("shots must be >= 0")
        if self.noise_model is not None and self.shots <= 0:
            raise ValueError("noisy evaluation requires shots > 0")
        if self.noise_model is not None and self.mode != CIRCUIT:
            raise ValueError("noise requires the circuit backend")

    @property
    def exact(self) -> bool:
        return self.shots == 0 and self.noise_model is None


@dataclass
class HadamardTest:
    """One ancilla-interference circuit with its postprocess coefficient."""

    width: int  # system qubits + 1 ancilla
    ops: list   # (Gate, polarity in {None, 0, 1})
    coeff: float
    label: str = ""

    @property
    def ancilla(self) -> int:
        return self.width - 1


def _ansatz_ops(spec: AnsatzSpec, theta):
    return [(g, None) for g in _instantiate(spec, np.asarray(theta, dtype=float))]


def _insertion_ops(spec: AnsatzSpec, theta, i: int, polarity: int):
    """Ansatz ops with the derivative insertion of parameter i at `polarity`.

    Yields one op list per derivative branch, paired with the branch factor.
    """
    base = _ansatz_ops(spec, theta)
    gi, branches = derivative_branches(spec, i)
    out = []
    for coeff, insertions in branches:
        ops = base[: gi + 1] + [(g, polarity) for g in insertions] + base[gi + 1:]
        out.append((coeff, ops))
    return out


def _merge(ops_bra, ops_ket):
    """Interleave a bra-side and ket-side op list sharing the plain ansatz ops."""
    merged = []
    ia = ib = 0
    while ia < len(ops_ket) or ib < len(ops_bra):
        if ib < len(ops_bra) and ops_bra[ib][1] == 0:
            merged.append(ops_bra[ib]); ib += 1
        elif ia < len(ops_ket) and ops_ket[ia][1] == 1:
            merged.append(ops_ket[ia]); ia += 1
        else:
            merged.append(ops_ket[ia]); ia += 1; ib += 1
    return merged


def _hamiltonian_ops(term: PauliString, n_qubits: int):
    if term.is_identity:
        return []
    return [(qc.pauli(term.ops, tuple(range(n_qubits))), 1)]


def build_test(kind: str, spec: AnsatzSpec, theta, i: int = None, j: int = None,
               term: PauliString = None, term_coeff: float = 1.0):
    """Hadamard tests for one target quantity.

    kinds: "a_entry" (i, j) for Re<d_i phi|d_j phi>; "overlap" (i) for
    Im<d_i phi|phi>; "c_entry" (i, term) for the term's contribution to
    Im<d_i phi|H|phi>; "energy" (term) for the term's contribution to
    <phi|H|phi>. Branch factors and `term_coeff` are folded into each test's
    real postprocess coefficient; summing coeff * (P0 - P1) gives the target.
    """
    w = spec.n_qubits + 1
    tests = []
    if kind == "a_entry":
        for cb, ops_bra in _insertion_ops(spec, theta, i, polarity=0):
            for ck, ops_ket in _insertion_ops(spec, theta, j, polarity=1):
                coeff = np.conj(cb) * ck
                assert abs(coeff.imag) < 1e-15
                tests.append(HadamardTest(w, _merge(ops_bra, ops_ket), float(coeff.real),
                                          f"A[{i},{j}]"))
    elif kind == "overlap":
        for cb, ops_bra in _insertion_ops(spec, theta, i, polarity=0):
            coeff = np.conj(cb)  # purely imaginary; Im[conj(c) z] = Im(conj(c)) Re z
            assert abs(coeff.real) < 1e-15
            tests.append(HadamardTest(w, ops_bra, float(coeff.imag), f"g[{i}]"))
    elif kind == "c_entry":
        if term is None:
            raise ValueError("c_entry requires a Hamiltonian term")
        h_ops = _hamiltonian_ops(term, spec.n_qubits)
        for cb, ops_bra in _insertion_ops(spec, theta, i, polarity=0):
            coeff = np.conj(cb) * term_coeff
            assert abs(coeff.real) < 1e-12
            tests.append(HadamardTest(w, ops_bra + h_ops, float(coeff.imag),
                                      f"C[{i}]:{term}"))
    elif kind == "energy":
        if term is None:
            raise ValueError("energy requires a Hamiltonian term")
        if term.is_identity:
            return []  # <phi|phi> = 1 is classical knowledge, nothing to measure
        tests.append(HadamardTest(w, _ansatz_ops(spec, theta) + _hamiltonian_ops(term, spec.n_qubits),
                                  float(term_coeff), f"E:{term}"))
    else:
        raise ValueError(f"unknown test kind {kind!r}")
    return tests


def _side_states(test: HadamardTest):
    """(bra, ket) statevectors for the analytic path (no ancilla)."""
    w = test.width - 1
    bra, ket = StateVector(w), StateVector(w)
    for gate, pol in test.ops:
        if pol != 1:
            qc.apply_gate(bra, gate)
        if pol != 0:
            qc.apply_gate(ket, gate)
    return bra, ket


def _circuit_gates(test: HadamardTest):
    anc = test.ancilla
    yield qc.h(anc)
    for gate, pol in test.ops:
        yield gate if pol is None else gate.controlled(anc, pol)
    yield qc.h(anc)


def evaluate(test: HadamardTest, backend: EvalBackend, rng=None) -> float:
    """coeff * (P(0) - P(1)) estimate of the test's quantity."""
    if backend.mode == ANALYTIC:
        bra, ket = _side_states(test)
        return test.coeff * float(np.real(qc.inner_product(bra, ket)))
    if backend.noise_model is not None:
        rho = DensityMatrix(test.width)
        for gate in _circuit_gates(test):
            apply_noisy_gate(rho, gate, backend.noise_model)
        n0, n1 = noisy_readout(rho, test.ancilla, backend.noise_model,
                               backend.shots, rng if rng is not None else backend.seed)
        return test.coeff * (n0 - n1) / backend.shots
    state = StateVector(test.width)
    for gate in _circuit_gates(test):
        qc.apply_gate(state, gate)
    if backend.shots == 0:
        p0, p1 = qc.measure_qubit(state, test.ancilla, shots=0)
        return test.coeff * (p0 - p1)
    n0, n1 = qc.measure_qubit(state, test.ancilla, backend.shots,
                              rng if rng is not None else backend.seed)
    return test.coeff * (n0 - n1) / backend.shots


def evaluate_sum(tests, backend: EvalBackend, rng=None) -> float:
    return sum(evaluate(t, backend, rng) for t in tests)
