"""Per-step McLachlan linear system, theta-dot solve, and time marching.

Each step builds the real system M theta-dot = V. Without global-phase
correction M = A^R (Gram matrix of the derivative states' real parts) and
V = C^I. With it, the purely imaginary overlaps g_i = <d_i phi|phi> = i a_i
and the energy E fold in as M = A^R - a a^T and V = C^I - a E, which is the
Gram matrix projected orthogonal to |phi> - still symmetric positive
semidefinite. theta advances by explicit first-order (forward Euler) or
second-order (Adams-Bashforth 2) marching; AB2 bootstraps its first step
with Euler. The global phase alpha integrates alpha-dot = a . theta-dot - E alongside,
as a diagnostic.

At stationary points whole parameter directions can drop out of the Gram
matrix (the ground start is the worst case: M is exactly singular there,
with V consistently zero in the null directions), so the solve applies
Tikhonov regularization only when the condition estimate crosses 1e12.
The default lambda = 1e-10 bounds rounding junk in the null directions
without measurably biasing weakly-determined ones; a larger lambda leaks
visible error into small-population states that does not shrink with dt.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from . import __version__
from .ansatz import (AnsatzSpec, _instantiate, build_state, encoded_probabilities,
                     ground_start, state_and_derivatives)
from .circuit import (DensityMatrix, StateVector, apply_circuit, apply_pauli_sum,
                      sample_basis_counts)
from .measure import ANALYTIC, EvalBackend, build_test, evaluate
from .model import IR, SR, BasisSet, LaserPulse, field_at, hamiltonian_at
from .noise import apply_noisy_gate, readout_confused_probabilities
from .pauli import PauliSum, config_map, encode_jwe, encode_qee

CONDITION_TRIGGER = 1e12


class SolverError(RuntimeError):
    def __init__(self, message, partial_record=None):
        super().__init__(message)
        self.partial_record = partial_record


@dataclass
class McLachlanSystem:
    a_real: np.ndarray
    c_imag: np.ndarray
    m: np.ndarray
    v: np.ndarray
    energy: float
    overlaps: np.ndarray  # a_i = Im<d_i phi|phi>
    gpc: bool


def _encode(scheme: str, h) -> PauliSum:
    return encode_jwe(h) if scheme == "jwe" else encode_qee(h)


def _assemble_analytic(spec, theta, h_pauli, gpc) -> McLachlanSystem:
    phi, d = state_and_derivatives(spec, theta)
    a_real = (d.conj() @ d.T).real
    overlaps = (d.conj() @ phi.amplitudes).imag
    h_phi = apply_pauli_sum(h_pauli, phi)
    c_imag = (d.conj() @ h_phi.amplitudes).imag
    energy = float(np.real(np.vdot(phi.amplitudes, h_phi.amplitudes)))
    return _finish_system(a_real, c_imag, energy, overlaps, gpc)


def _assemble_circuit(spec, theta, h_pauli, backend, gpc, rng, threads) -> McLachlanSystem:
    length = spec.n_params
    ident = h_pauli.identity_coefficient().real
    terms = [(coeff.real, string) for coeff, string in h_pauli.terms if not string.is_identity]

    jobs = []  # (slot, tests); slots keep evaluation order deterministic
    for i in range(1, length + 1):
        jobs.append((("g", i), build_test("overlap", spec, theta, i=i)))
    for i in range(1, length + 1):
        for j in range(i, length + 1):
            jobs.append((("a", i, j), build_test("a_entry", spec, theta, i=i, j=j)))
    for i in range(1, length + 1):
        for coeff, string in terms:
            jobs.append((("c", i), build_test("c_entry", spec, theta, i=i,
                                              term=string, term_coeff=coeff)))
    for coeff, string in terms:
        jobs.append((("e",), build_test("energy", spec, theta, term=string, term_coeff=coeff)))

    flat = [(slot, test) for slot, tests in jobs for test in tests]
    if backend.shots > 0:
        rngs = rng.spawn(len(flat))
    else:
        rngs = [None] * len(flat)

    def run(idx):
        slot, test = flat[idx]
        return slot, evaluate(test, backend, rngs[idx])

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run, range(len(flat))))
    else:
        results = [run(k) for k in range(len(flat))]

    a_real = np.zeros((length, length))
    c_imag = np.zeros(length)
    overlaps = np.zeros(length)
    energy = ident
    for slot, value in results:
        if slot[0] == "g":
            overlaps[slot[1] - 1] += value
        elif slot[0] == "a":
            a_real[slot[1] - 1, slot[2] - 1] += value
        elif slot[0] == "c":
            c_imag[slot[1] - 1] += value
        else:
            energy += value
    iu = np.triu_indices(length, k=1)
    a_real[(iu[1], iu[0])] = a_real[iu]
    # identity Hamiltonian term: h_I * Im<d_i phi|phi>, reusing the overlap estimates
    c_imag += ident * overlaps
    return _finish_system(a_real, c_imag, energy, overlaps, gpc)


def _finish_system(a_real, c_imag, energy, overlaps, gpc) -> McLachlanSystem:
    if gpc:
        # <d_i phi|phi> = i a_i, so the phase corrections reduce to -a a^T and -a E
        m = a_real - np.outer(overlaps, overlaps)
        v = c_imag - overlaps * energy
    else:
        m, v = a_real.copy(), c_imag.copy()
    return McLachlanSystem(a_real, c_imag, m, v, float(energy), overlaps, gpc)


def assemble_system(spec: AnsatzSpec, theta, h_pauli: PauliSum, backend: EvalBackend,
                    gpc: bool = True, rng=None, threads: int = 1) -> McLachlanSystem:
    """All M/V entries at (theta, t) through the chosen backend."""
    if not h_pauli.is_hermitian:
        raise ValueError("Hamiltonian Pauli sum must be Hermitian")
    if backend.mode == ANALYTIC:
        return _assemble_analytic(spec, theta, h_pauli, gpc)
    if rng is None:
        rng = np.random.default_rng(backend.seed)
    return _assemble_circuit(spec, theta, h_pauli, backend, gpc, rng, threads)


def solve_thetadot(system: McLachlanSystem, regularization: float = 1e-10) -> np.ndarray:
    """Solve (M + lambda I) theta-dot = V by LU with partial pivoting.

    lambda is applied only when the condition estimate of M exceeds 1e12
    (Tikhonov keeps the consistent null directions bounded without touching
    well-conditioned steps).
    """
    import warnings

    from scipy.linalg import LinAlgWarning

    m, v = system.m, system.v
    cond = np.linalg.cond(m)
    lam = regularization if (not np.isfinite(cond) or cond > CONDITION_TRIGGER) else 0.0
    try:
        with warnings.catch_warnings():
            # scipy warns on zero pivots; the isfinite check below handles them
            warnings.simplefilter("ignore", LinAlgWarning)
            lu, piv = lu_factor(m + lam * np.eye(len(v)))
        td = lu_solve((lu, piv), v)
    except Exception as exc:  # LinAlgError on exact singularity
        raise SolverError(f"linear solve failed (lambda={lam:g}): {exc}") from exc
    if not np.all(np.isfinite(td)):
        raise SolverError(f"non-finite theta-dot from solve (lambda={lam:g})")
    return td


@dataclass
class MarchConfig:
    """Settings for one evolution run.

    t_end should be an integer multiple of dt (the step count is rounded).
    Snapshots are recorded every `record_every` steps plus the final step;
    when record_every divides the step count the CSV has exactly
    floor(t_end/(dt*record_every)) + 1 rows.
    """

    dt: float
    t_end: float
    scheme: str = "som"  # fom | som
    gpc: bool = True
    backend: EvalBackend = field(default_factory=EvalBackend)
    representation: str = SR
    regularization: float = 1e-10
    record_every: int = 100
    threads: int = 1

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be > 0")
        if self.scheme not in ("fom", "som"):
            raise ValueError("marching scheme must be 'fom' or 'som'")
        if self.representation not in (SR, IR):
            raise ValueError("representation must be 'sr' or 'ir'")
        if self.record_every < 1:
            raise ValueError("record_every must be >= 1")

    @property
    def n_steps(self) -> int:
        return int(round(self.t_end / self.dt))


@dataclass
class RunRecord:
    """Recorded trajectory of one march."""

    state_labels: list
    times: np.ndarray
    probabilities: np.ndarray  # snapshots x N
    alphas: np.ndarray
    thetas: np.ndarray         # snapshots x L
    norms: np.ndarray          # sum of recorded state probabilities
    metadata: dict = field(default_factory=dict)

    @property
    def final_probabilities(self) -> np.ndarray:
        return self.probabilities[-1]

    def to_csv(self) -> str:
        header = "t,alpha," + ",".join(f"P_{k}" for k in range(len(self.state_labels)))
        lines = [header]
        for t, alpha, probs in zip(self.times, self.alphas, self.probabilities):
            lines.append(",".join([f"{t:.10g}", f"{alpha:.17g}"]
                                  + [f"{p:.17g}" for p in probs]))
        return "\n".join(lines) + "\n"

    def write(self, path):
        """CSV plus a JSON sidecar with the run configuration."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.to_csv())
        sidecar = path.with_suffix(path.suffix + ".meta.json")
        sidecar.write_text(json.dumps(self.metadata, indent=2, sort_keys=True) + "\n")
        return path


def _record_probabilities(spec, theta, config: MarchConfig, rng) -> tuple:
    """(P_k estimates, norm) at the current parameters, per backend fidelity."""
    backend = config.backend
    cmap = config_map(spec.scheme, spec.n_states)
    if backend.mode == ANALYTIC or backend.exact:
        probs = encoded_probabilities(spec, build_state(spec, theta))
        return probs, float(probs.sum())
    gates = _instantiate(spec, np.asarray(theta, dtype=float))
    if backend.noise_model is not None:
        rho = DensityMatrix(spec.n_qubits)
        for g in gates:
            apply_noisy_gate(rho, g, backend.noise_model)
        dist = readout_confused_probabilities(rho.probabilities(), backend.noise_model,
                                              spec.n_qubits)
    else:
        state = apply_circuit(StateVector(spec.n_qubits), gates)
        dist = state.probabilities()
    counts = sample_basis_counts(dist, backend.shots, rng)
    probs = counts[cmap.basis_indices()] / backend.shots
    return probs, float(probs.sum())


def march(spec: AnsatzSpec, config: MarchConfig, basis: BasisSet, pulse: LaserPulse,
          theta0=None) -> RunRecord:
    """Evolve theta from t = 0 to t_end and record the trajectory.

    The Hamiltonian is sampled at each step's left endpoint. In the
    Schroedinger representation the encoding is assembled once from the
    static and coupling parts (the encoding is linear in the matrix); the
    interaction representation re-encodes per step because the phase factors
    are entry-wise time dependent.
    """
    if basis.size != spec.n_states:
        raise ValueError("basis size does not match the ansatz")
    theta = np.array(ground_start(spec) if theta0 is None else theta0, dtype=float)
    n_steps = config.n_steps
    backend = config.backend
    rng = np.random.default_rng(backend.seed) if backend.shots > 0 else None
    rec_rng = rng.spawn(1)[0] if rng is not None else None

    static_enc = coupling_enc = None
    if config.representation == SR:
        e = np.diag(basis.energies()).astype(complex)
        static_enc = _encode(spec.scheme, e)
        coupling_enc = _encode(spec.scheme, basis.dipole_matrix().astype(complex))

    times, probs_list, alphas, thetas, norms = [], [], [], [], []
    alpha = 0.0
    prev_td = prev_alphadot = None

    def record(step_idx):
        p, norm = _record_probabilities(spec, theta, config, rec_rng)
        times.append(step_idx * config.dt)
        probs_list.append(p)
        alphas.append(alpha)
        thetas.append(theta.copy())
        norms.append(norm)

    def partial() -> RunRecord:
        return RunRecord(basis.labels(), np.array(times), np.array(probs_list),
                         np.array(alphas), np.array(thetas), np.array(norms))

    record(0)
    for step in range(n_steps):
        t = step * config.dt
        if config.representation == SR:
            h_pauli = static_enc + field_at(pulse, t) * coupling_enc
        else:
            h_pauli = _encode(spec.scheme, hamiltonian_at(basis, pulse, t, IR).entries)
        try:
            system = assemble_system(spec, theta, h_pauli, backend, config.gpc,
                                     rng=rng, threads=config.threads)
            td = solve_thetadot(system, config.regularization)
        except SolverError as exc:
            raise SolverError(f"step {step} (t={t:.6g}): {exc}", partial()) from exc
        alphadot = float(system.overlaps @ td - system.energy)
        if config.scheme == "som" and prev_td is not None:
            theta = theta + config.dt * (3.0 * td - prev_td) / 2.0
            alpha = alpha + config.dt * (3.0 * alphadot - prev_alphadot) / 2.0
        else:
            theta = theta + config.dt * td
            alpha = alpha + config.dt * alphadot
        prev_td, prev_alphadot = td, alphadot
        if (step + 1) % config.record_every == 0 or step + 1 == n_steps:
            record(step + 1)

    return RunRecord(basis.labels(), np.array(times), np.array(probs_list),
                     np.array(alphas), np.array(thetas), np.array(norms),
                     metadata=run_metadata(spec, config, basis, pulse))


def run_metadata(spec, config: MarchConfig, basis, pulse) -> dict:
    return {
        "code_version": __version__,
        "encoding": spec.scheme,
        "n_states": spec.n_states,
        "n_qubits": spec.n_qubits,
        "basis": basis.labels(),
        "pulse": {"e0": pulse.e0, "tau": pulse.tau, "t0": pulse.t0, "omega": pulse.omega},
        "dt": config.dt,
        "t_end": config.t_end,
        "marching": config.scheme,
        "gpc": config.gpc,
        "representation": config.representation,
        "backend": {
            "mode": config.backend.mode,
            "shots": config.backend.shots,
            "seed": config.backend.seed,
            "noise": config.backend.noise_model is not None,
        },
        "regularization": config.regularization,
        "record_every": config.record_every,
        "threads": config.threads,
    }
