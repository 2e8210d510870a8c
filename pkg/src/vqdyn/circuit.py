"""Gate-level simulation on dense statevectors and density matrices.

Amplitude layout: the register is read as a binary number with qubit 0 as the
most significant bit, so basis index b has qubit q in state (b >> (w-1-q)) & 1.
Gate application mutates the state in place; a state value is owned by one
evolution at a time.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .pauli import PauliSum, _P1

_I2 = _P1["I"]
_X = _P1["X"]
_Y = _P1["Y"]
_Z = _P1["Z"]
_H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)


def rx_matrix(theta: float) -> np.ndarray:
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([[c, -1j * s], [-1j * s, c]])


def ry_matrix(theta: float) -> np.ndarray:
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def rz_matrix(theta: float) -> np.ndarray:
    return np.array([[np.exp(-1j * theta / 2), 0], [0, np.exp(1j * theta / 2)]])


_FIXED = {"x": _X, "h": _H}
_ROTATIONS = {"rx": rx_matrix, "ry": ry_matrix, "rz": rz_matrix, "crx": rx_matrix}


@dataclass(frozen=True)
class Gate:
    """One circuit operation.

    kinds: x, h, rx, ry, rz (targets[0]); cnot, crx (targets = (control,
    target)); pauli (word over targets); cpauli (targets[0] controls a word
    over targets[1:]). `controls` holds extra (qubit, polarity) conditions,
    used for the Hadamard-test ancilla; polarity 0 conditions on |0>.
    """

    kind: str
    targets: tuple
    angle: float = None
    word: str = None
    controls: tuple = ()

    def __post_init__(self):
        qubits = self.qubits
        if len(set(qubits)) != len(qubits):
            raise ValueError(f"duplicate qubits in {self}")

    @property
    def qubits(self) -> tuple:
        return tuple(self.targets) + tuple(q for q, _ in self.controls)

    def controlled(self, qubit: int, polarity: int = 1) -> "Gate":
        return Gate(self.kind, self.targets, self.angle, self.word,
                    self.controls + ((qubit, polarity),))


def x(q): return Gate("x", (q,))
def h(q): return Gate("h", (q,))
def rx(theta, q): return Gate("rx", (q,), angle=theta)
def ry(theta, q): return Gate("ry", (q,), angle=theta)
def rz(theta, q): return Gate("rz", (q,), angle=theta)
def cnot(control, target): return Gate("cnot", (control, target))
def crx(theta, control, target): return Gate("crx", (control, target), angle=theta)


def pauli(word, targets):
    word = str(word)
    if len(word) != len(targets):
        raise ValueError("Pauli word length must match target count")
    return Gate("pauli", tuple(targets), word=word)


def cpauli(control, word, targets):
    word = str(word)
    if len(word) != len(targets):
        raise ValueError("Pauli word length must match target count")
    return Gate("cpauli", (control,) + tuple(targets), word=word)


class StateVector:
    def __init__(self, width: int, amplitudes: np.ndarray = None):
        self.width = width
        if amplitudes is None:
            self.amplitudes = np.zeros(2 ** width, dtype=complex)
            self.amplitudes[0] = 1.0
        else:
            amplitudes = np.asarray(amplitudes, dtype=complex)
            if amplitudes.shape != (2 ** width,):
                raise ValueError("amplitude vector has wrong length")
            self.amplitudes = amplitudes.copy()

    def copy(self) -> "StateVector":
        return StateVector(self.width, self.amplitudes)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2


class DensityMatrix:
    def __init__(self, width: int, entries: np.ndarray = None):
        self.width = width
        dim = 2 ** width
        if entries is None:
            self.entries = np.zeros((dim, dim), dtype=complex)
            self.entries[0, 0] = 1.0
        else:
            entries = np.asarray(entries, dtype=complex)
            if entries.shape != (dim, dim):
                raise ValueError("density matrix has wrong shape")
            self.entries = entries.copy()

    @classmethod
    def from_statevector(cls, state: StateVector) -> "DensityMatrix":
        return cls(state.width, np.outer(state.amplitudes, state.amplitudes.conj()))

    def copy(self) -> "DensityMatrix":
        return DensityMatrix(self.width, self.entries)

    def trace(self) -> float:
        return float(np.trace(self.entries).real)

    def purity(self) -> float:
        return float(np.trace(self.entries @ self.entries).real)

    def probabilities(self) -> np.ndarray:
        return np.diagonal(self.entries).real.copy()


def _apply_1q_tensor(arr: np.ndarray, mat: np.ndarray, axis: int, controls=()):
    """Apply a 2x2 matrix to one tensor axis, restricted to control slices.

    `controls` is a sequence of (axis, polarity); basic integer indexing on
    those axes yields a view, so the update happens in place.
    """
    if controls:
        idx = [slice(None)] * arr.ndim
        for c_axis, pol in controls:
            idx[c_axis] = pol
        sub = arr[tuple(idx)]
        axis = axis - sum(1 for c_axis, _ in controls if c_axis < axis)
    else:
        sub = arr
    moved = np.moveaxis(sub, axis, 0)
    a = moved[0].copy()
    b = moved[1]
    moved[0] = mat[0, 0] * a + mat[0, 1] * b
    moved[1] = mat[1, 0] * a + mat[1, 1] * b


def _elementary_ops(gate: Gate):
    """Expand a gate into (2x2 matrix, target, control list) triples."""
    extra = list(gate.controls)
    if gate.kind in _FIXED:
        return [(_FIXED[gate.kind], gate.targets[0], extra)]
    if gate.kind in ("rx", "ry", "rz"):
        return [(_ROTATIONS[gate.kind](gate.angle), gate.targets[0], extra)]
    if gate.kind == "cnot":
        return [(_X, gate.targets[1], [(gate.targets[0], 1)] + extra)]
    if gate.kind == "crx":
        return [(rx_matrix(gate.angle), gate.targets[1], [(gate.targets[0], 1)] + extra)]
    if gate.kind == "pauli":
        return [(_P1[c], q, extra) for c, q in zip(gate.word, gate.targets) if c != "I"]
    if gate.kind == "cpauli":
        ctrl = [(gate.targets[0], 1)] + extra
        return [(_P1[c], q, ctrl) for c, q in zip(gate.word, gate.targets[1:]) if c != "I"]
    raise ValueError(f"unknown gate kind {gate.kind!r}")


def apply_gate(state, gate: Gate):
    """Apply a gate in place to a StateVector or DensityMatrix."""
    w = state.width
    for q in gate.qubits:
        if not 0 <= q < w:
            raise IndexError(f"qubit {q} out of range for width {w}")
    ops = _elementary_ops(gate)
    if isinstance(state, StateVector):
        arr = state.amplitudes.reshape([2] * w)
        for mat, q, ctr in ops:
            _apply_1q_tensor(arr, mat, q, ctr)
    elif isinstance(state, DensityMatrix):
        arr = state.entries.reshape([2] * (2 * w))
        for mat, q, ctr in ops:
            _apply_1q_tensor(arr, mat, q, ctr)
            col_ctr = [(c + w, pol) for c, pol in ctr]
            _apply_1q_tensor(arr, mat.conj(), q + w, col_ctr)
    else:
        raise TypeError(f"unsupported state type {type(state).__name__}")
    return state


def apply_circuit(state, gates):
    for g in gates:
        apply_gate(state, g)
    return state


def inner_product(a: StateVector, b: StateVector) -> complex:
    """<a|b>."""
    if a.width != b.width:
        raise ValueError("width mismatch")
    return complex(np.vdot(a.amplitudes, b.amplitudes))


def apply_pauli_sum(psum: PauliSum, state: StateVector) -> StateVector:
    """H|s> for a Pauli-sum H (returns a new state; not normalized)."""
    if psum.width != state.width:
        raise ValueError("width mismatch")
    out = np.zeros_like(state.amplitudes)
    scratch = StateVector(state.width, state.amplitudes)
    for coeff, string in psum.terms:
        if string.is_identity:
            out += coeff * state.amplitudes
            continue
        scratch.amplitudes[:] = state.amplitudes
        apply_gate(scratch, pauli(string.ops, tuple(range(state.width))))
        out += coeff * scratch.amplitudes
    return StateVector(state.width, out)


def expectation(state, psum: PauliSum) -> float:
    """<state| H |state> (or tr(rho H)) for a Hermitian Pauli sum."""
    if not psum.is_hermitian:
        raise ValueError("non-Hermitian Pauli sum")
    if isinstance(state, StateVector):
        val = complex(np.vdot(state.amplitudes, apply_pauli_sum(psum, state).amplitudes))
    else:
        val = 0.0 + 0.0j
        for coeff, string in psum.terms:
            if string.is_identity:
                val += coeff * np.trace(state.entries)
                continue
            scratch = state.copy()
            # left-multiply rho by the Pauli word (row side only), then trace
            arr = scratch.entries.reshape([2] * (2 * state.width))
            for c, q in zip(string.ops, range(state.width)):
                if c != "I":
                    _apply_1q_tensor(arr, _P1[c], q)
            val += coeff * np.trace(scratch.entries)
    assert abs(val.imag) < 1e-10, f"imaginary residue {val.imag:.2e} in expectation"
    return float(val.real)


def qubit_marginal(state, q: int) -> float:
    """Probability of measuring |0> on qubit q."""
    if not 0 <= q < state.width:
        raise IndexError(f"qubit {q} out of range")
    probs = state.probabilities().reshape([2] * state.width)
    return float(np.moveaxis(probs, q, 0)[0].sum())


def measure_qubit(state, q: int, shots: int = 0, seed=None):
    """Measure qubit q; shots = 0 returns the exact (p0, p1) pair.

    With shots > 0 returns integer counts (n0, n1) from a binomial draw;
    identical seeds give identical counts.
    """
    p0 = min(1.0, max(0.0, qubit_marginal(state, q)))
    if shots == 0:
        return (p0, 1.0 - p0)
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    n0 = int(rng.binomial(shots, p0))
    return (n0, shots - n0)


def sample_basis_counts(probs: np.ndarray, shots: int, rng) -> np.ndarray:
    """Multinomial counts over the computational basis."""
    p = np.clip(np.asarray(probs, dtype=float), 0.0, None)
    p = p / p.sum()
    return rng.multinomial(shots, p)
