"""Variational ansatz circuits for both encodings, plus derivative machinery.

JWE (N qubits, 2(N-1) params): an excitation cascade. X on qubit 0 prepares
the occupied ground configuration; stage j moves amplitude up one qubit with
a (controlled) X rotation and a CNOT, and an interleaved RZ applied while
qubit j still tags the whole "excitation reached stage j" branch realizes
the threshold phase pattern of the closed form. The cascade's -i factors
per stage give the (-i)^k basis-state prefactors.

QEE (log2 N qubits, 2(N-1) params): an RY amplitude tree entangled with
CNOTs followed by an RZ phase block whose CNOT conjugations address
independent parity characters. The 2-qubit instance matches the closed-form
amplitude formula exactly; wider registers are validated by the full-rank
ray-Jacobian property instead of a symbolic form.

Parameters are 1-indexed (theta_1 .. theta_L) to match the formulas; vector
arguments use plain 0-based numpy arrays of length L.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import least_squares

from . import circuit as qc
from .circuit import Gate, StateVector
from .pauli import config_map

_DERIV_PAULI = {"rx": "X", "ry": "Y", "rz": "Z", "crx": "X"}


@dataclass(frozen=True)
class AnsatzSpec:
    scheme: str
    n_states: int
    n_qubits: int
    n_params: int
    gates: tuple  # (kind, targets, param_index or None)

    @property
    def param_gate_indices(self):
        return {p: gi for gi, (_, _, p) in enumerate(self.gates) if p is not None}

    def gate_census(self):
        counts = {}
        for kind, _, _ in self.gates:
            counts[kind] = counts.get(kind, 0) + 1
        return counts


def _jwe_gates(n: int):
    gates = [("x", (0,), None)]
    gates.append(("rx", (1,), n - 1))
    gates.append(("cnot", (1, 0), None))
    gates.append(("rz", (1,), 2 * n - 2))
    for j in range(2, n):
        gates.append(("crx", (j - 1, j), n - j))
        gates.append(("cnot", (j, j - 1), None))
        gates.append(("rz", (j,), 2 * n - 1 - j))
    return tuple(gates)


def _gray_transitions(bits: int):
    """Changed-bit index per step of the reflected Gray walk over `bits` bits."""
    out = []
    prev = 0
    for k in range(1, 2 ** bits):
        code = k ^ (k >> 1)
        out.append((prev ^ code).bit_length() - 1)
        prev = code
    return out


def _qee_gates_general(n_q: int):
    """QEE layout for any register width, matching the frozen census totals.

    Amplitude: per qubit q an open uniformly-controlled RY tree (2^q
    rotations, 2^q - 1 CNOTs walking a Gray code over the lower qubits).
    Phase: per qubit q, RZ rotations swept through every parity character
    whose highest bit is q by the same Gray walk. Totals: 2(N-1) rotations
    and 2(N-1-log2 N) CNOTs.
    """
    gates = []
    p = 1
    for q in range(n_q):
        gates.append(("ry", (q,), p)); p += 1
        for ctrl in _gray_transitions(q):
            gates.append(("cnot", (ctrl, q), None))
            gates.append(("ry", (q,), p)); p += 1
    for q in range(n_q - 1, -1, -1):
        gates.append(("rz", (q,), p)); p += 1
        for ctrl in _gray_transitions(q):
            gates.append(("cnot", (ctrl, q), None))
            gates.append(("rz", (q,), p)); p += 1
    return tuple(gates)


def _qee_gates(n_q: int):
    if n_q == 1:
        return (("ry", (0,), 1), ("rz", (0,), 2))
    if n_q == 2:
        return (
            ("ry", (0,), 1),
            ("ry", (1,), 2),
            ("cnot", (0, 1), None),
            ("ry", (1,), 3),
            ("rz", (1,), 5),
            ("cnot", (0, 1), None),
            ("rz", (0,), 4),
            ("rz", (1,), 6),
        )
    if n_q == 3:
        return (
            ("ry", (0,), 1),
            ("ry", (1,), 2),
            ("cnot", (0, 1), None),
            ("ry", (1,), 3),
            ("ry", (2,), 4),
            ("cnot", (1, 2), None),
            ("ry", (2,), 5),
            ("cnot", (0, 2), None),
            ("ry", (2,), 6),
            ("cnot", (1, 2), None),
            ("ry", (2,), 7),
            ("rz", (0,), 8),
            ("rz", (1,), 9),
            ("rz", (2,), 10),
            ("cnot", (1, 2), None),
            ("rz", (2,), 11),
            ("cnot", (0, 2), None),
            ("rz", (2,), 12),
            ("cnot", (1, 2), None),
            ("rz", (2,), 13),
            ("cnot", (0, 1), None),
            ("rz", (1,), 14),
        )
    return _qee_gates_general(n_q)


def make_ansatz(scheme: str, n_states: int) -> AnsatzSpec:
    if n_states < 2:
        raise ValueError("need at least 2 states")
    cmap = config_map(scheme, n_states)
    if scheme == "jwe":
        gates = _jwe_gates(n_states)
    elif scheme == "qee":
        if 2 ** cmap.n_qubits != n_states:
            raise ValueError(
                "QEE ansatz requires a power-of-2 state count; pad the model with null states"
            )
        gates = _qee_gates(cmap.n_qubits)
    else:
        raise ValueError(f"unknown scheme {scheme!r}")
    return AnsatzSpec(scheme, n_states, cmap.n_qubits, 2 * (n_states - 1), gates)


def _check_theta(spec: AnsatzSpec, theta) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (spec.n_params,):
        raise ValueError(f"expected {spec.n_params} parameters, got shape {theta.shape}")
    if not np.all(np.isfinite(theta)):
        raise ValueError("non-finite ansatz parameters")
    return theta


def _instantiate(spec: AnsatzSpec, theta: np.ndarray):
    gates = []
    for kind, targets, p in spec.gates:
        if p is None:
            gates.append(Gate(kind, targets))
        else:
            gates.append(Gate(kind, targets, angle=theta[p - 1]))
    return gates


def build_state(spec: AnsatzSpec, theta) -> StateVector:
    """|phi(theta)> on the spec's register."""
    theta = _check_theta(spec, theta)
    state = StateVector(spec.n_qubits)
    qc.apply_circuit(state, _instantiate(spec, theta))
    return state


def _run_with_checkpoints(spec: AnsatzSpec, theta: np.ndarray):
    """States after each gate; checkpoint[g] is the state after gate g-1."""
    gates = _instantiate(spec, theta)
    state = StateVector(spec.n_qubits)
    checkpoints = [state.copy()]
    for g in gates:
        qc.apply_gate(state, g)
        checkpoints.append(state.copy())
    return gates, checkpoints


def derivative_branches(spec: AnsatzSpec, i: int):
    """Branch descriptors for d/d theta_i: (coefficient, insertion gates).

    A single-qubit rotation parameter has one branch with coefficient -i/2
    (its generator inserted after the gate). A controlled-rotation parameter
    splits the |1><1| projector into two unitary branches, -i/4 X_target and
    +i/4 Z_control X_target.
    """
    if not 1 <= i <= spec.n_params:
        raise IndexError(f"parameter index {i} out of range 1..{spec.n_params}")
    gi = spec.param_gate_indices[i]
    kind, targets, _ = spec.gates[gi]
    p = _DERIV_PAULI[kind]
    if kind == "crx":
        control, target = targets
        return gi, [
            (-0.25j, (qc.pauli(p, (target,)),)),
            (+0.25j, (qc.pauli(p + "Z", (target, control)),)),
        ]
    return gi, [(-0.5j, (qc.pauli(p, (targets[0],)),))]


@dataclass
class DerivativeState:
    """d|phi>/d theta_i as a weighted sum of unitary branch states."""

    index: int
    branches: list  # (complex coefficient, StateVector)

    def combined(self) -> np.ndarray:
        acc = np.zeros_like(self.branches[0][1].amplitudes)
        for coeff, state in self.branches:
            acc += coeff * state.amplitudes
        return acc


def derivative_state(spec: AnsatzSpec, theta, i: int) -> DerivativeState:
    theta = _check_theta(spec, theta)
    gates, checkpoints = _run_with_checkpoints(spec, theta)
    return _derivative_from_checkpoints(spec, gates, checkpoints, i)


def _derivative_from_checkpoints(spec, gates, checkpoints, i) -> DerivativeState:
    gi, branches = derivative_branches(spec, i)
    out = []
    for coeff, insertions in branches:
        state = checkpoints[gi + 1].copy()
        for ins in insertions:
            qc.apply_gate(state, ins)
        for g in gates[gi + 1:]:
            qc.apply_gate(state, g)
        out.append((coeff, state))
    return DerivativeState(i, out)


def state_and_derivatives(spec: AnsatzSpec, theta):
    """(|phi>, D) with D[i-1] = d|phi>/d theta_i combined, sharing one forward pass."""
    theta = _check_theta(spec, theta)
    gates, checkpoints = _run_with_checkpoints(spec, theta)
    phi = checkpoints[-1]
    d = np.empty((spec.n_params, 2 ** spec.n_qubits), dtype=complex)
    for i in range(1, spec.n_params + 1):
        d[i - 1] = _derivative_from_checkpoints(spec, gates, checkpoints, i).combined()
    return phi, d


def encoded_amplitudes(spec: AnsatzSpec, state: StateVector) -> np.ndarray:
    """Amplitudes on the encoded configuration subspace, ordered by state index."""
    cmap = config_map(spec.scheme, spec.n_states)
    return state.amplitudes[cmap.basis_indices()]


def encoded_probabilities(spec: AnsatzSpec, state) -> np.ndarray:
    cmap = config_map(spec.scheme, spec.n_states)
    return state.probabilities()[cmap.basis_indices()]


def ground_start(spec: AnsatzSpec) -> np.ndarray:
    """Initial parameters encoding the ground configuration |q_0>.

    JWE starts at zero: the cascade's (-i)^k prefactors already give every
    unpopulated configuration a first-order escape direction. The QEE family
    at zero is an exact fixed point of the McLachlan flow (all tangent
    directions real), so its RZ parameters start at -pi/2^Nq, which leaves
    |q_0> intact up to a global phase while rotating every unpopulated basis
    direction to -i times a real vector.
    """
    theta = np.zeros(spec.n_params)
    if spec.scheme == "qee":
        offset = -np.pi / 2 ** spec.n_qubits
        for kind, _, p in spec.gates:
            if kind == "rz":
                theta[p - 1] = offset
    return theta


def jwe_closed_form(n: int, theta) -> np.ndarray:
    """Closed-form JWE amplitudes (the ansatz formula), full 2^n register."""
    theta = np.asarray(theta, dtype=float)
    th = lambda x: theta[x - 1] if x >= 1 else 0.0
    amps = np.zeros(2 ** n, dtype=complex)
    cmap = config_map("jwe", n)

    def c_k(k):
        return (-1) ** (k // 2) if k % 2 == 0 else ((-1) ** ((k + 1) // 2)) * 1j

    phase0 = -0.5 * sum(th(x) for x in range(n, 2 * n - 1))
    amps[cmap.basis_index(0)] = c_k(0) * np.exp(1j * phase0) * np.cos(th(n - 1) / 2)
    for k in range(1, n):
        phase = 0.5 * (
            -sum(th(x) for x in range(n, 2 * n - 1 - k))
            + sum(th(x) for x in range(2 * n - 1 - k, 2 * n - 1))
        )
        mag = np.prod([np.sin(th(x) / 2) for x in range(n - k, n)]) * np.cos(th(n - 1 - k) / 2)
        amps[cmap.basis_index(k)] = c_k(k) * np.exp(1j * phase) * mag
    return amps


def qee2_closed_form(theta) -> np.ndarray:
    """Closed-form 2-qubit QEE amplitudes for |00>, |01>, |10>, |11>."""
    t1, t2, t3, t4, t5, t6 = np.asarray(theta, dtype=float)
    e = lambda p: np.exp(0.5j * p)
    return np.array([
        e(-t4 - t5 - t6) * np.cos(t1 / 2) * np.cos((t2 + t3) / 2),
        e(-t4 + t5 + t6) * np.cos(t1 / 2) * np.sin((t2 + t3) / 2),
        e(+t4 + t5 - t6) * np.sin(t1 / 2) * np.cos((t2 - t3) / 2),
        e(+t4 - t5 + t6) * np.sin(t1 / 2) * np.sin((t2 - t3) / 2),
    ])


class FitError(RuntimeError):
    """Initial-parameter fit did not reach the requested tolerance."""


def _fit_jwe_closed_form(spec: AnsatzSpec, target: np.ndarray) -> np.ndarray:
    """Invert the amplitude/phase cascade of the JWE closed form."""
    n = spec.n_states
    theta = np.zeros(spec.n_params)
    mags = np.abs(target)
    rem = 1.0
    # amplitude cascade: theta_{N-1} .. theta_1 peel off |q_0>, |q_1>, ...
    for k in range(n - 1):
        amp_param = n - 1 - k
        sin_prod = np.sqrt(max(rem, 0.0))
        if sin_prod < 1e-12:
            break  # remaining states unpopulated; angles stay 0
        val = np.clip(mags[k] / sin_prod, -1.0, 1.0)
        theta[amp_param - 1] = 2 * np.arccos(val)
        rem = max(rem - mags[k] ** 2, 0.0)
    # phase layer: consecutive phase differences, c_k prefactors removed
    def c_k(k):
        return (-1) ** (k // 2) if k % 2 == 0 else ((-1) ** ((k + 1) // 2)) * 1j

    args = np.zeros(n)
    for k in range(n):
        if mags[k] > 1e-12:
            args[k] = np.angle(target[k] / c_k(k))
    for k in range(1, n):
        if mags[k] > 1e-12 and mags[k - 1] > 1e-12:
            theta[2 * n - 1 - k - 1] = args[k] - args[k - 1]
    return theta


def fit_initial_params(spec: AnsatzSpec, target, tol: float = 1e-9,
                       restarts: int = 50, seed: int = 0) -> np.ndarray:
    """Parameters whose encoded amplitudes equal `target` up to global phase.

    Tries the closed-form cascade inversion first (exact for JWE; exact for
    trivial basis-state targets), then damped least squares on the
    phase-aligned residual with random restarts.
    """
    target = np.asarray(target, dtype=complex)
    if target.shape != (spec.n_states,):
        raise ValueError(f"target must have length {spec.n_states}")
    if abs(np.linalg.norm(target) - 1.0) > 1e-9:
        raise ValueError("target amplitudes must be normalized")

    def misfit(theta):
        amps = encoded_amplitudes(spec, build_state(spec, theta))
        ov = np.vdot(target, amps)
        aligned = amps * np.exp(-1j * np.angle(ov)) if abs(ov) > 1e-15 else amps
        return aligned - target

    def ok(theta):
        return np.abs(misfit(theta)).max() < tol

    # exact basis-state targets
    hot = np.nonzero(np.abs(target) > 1e-12)[0]
    if len(hot) == 1 and hot[0] == 0:
        return np.zeros(spec.n_params)
    if spec.scheme == "jwe":
        guess = _fit_jwe_closed_form(spec, target)
        if ok(guess):
            return guess

    rng = np.random.default_rng(seed)
    guesses = [np.zeros(spec.n_params)]
    if spec.scheme == "jwe":
        guesses.insert(0, _fit_jwe_closed_form(spec, target))
    for _ in range(restarts):
        guesses.append(rng.uniform(-np.pi, np.pi, spec.n_params))
    for guess in guesses:
        res = least_squares(
            lambda th: np.concatenate([misfit(th).real, misfit(th).imag]),
            guess, method="lm", xtol=1e-15, ftol=1e-15, gtol=1e-15,
        )
        if ok(res.x):
            return res.x
    raise FitError(f"could not fit initial parameters to tolerance {tol:g}")
