"""Pauli-string algebra and the two fermion-to-qubit encodings.

A PauliString is a fixed-width word over {I, X, Y, Z}; letter k acts on qubit
k, and qubit 0 is the leftmost register position (most significant bit of the
statevector index). Both encodings map the N x N one-electron Hamiltonian to
a weighted Pauli sum:

* JWE (unary): state k occupies qubit k; couplings pick up Z chains on the
  intermediate qubits from the fermionic sign bookkeeping.
* QEE (compact): state k is the binary expansion of k over ceil(log2 N)
  qubits (qubit 0 = most significant bit); |q_i><q_j| is expanded through
  the single-qubit projectors (I +- Z)/2 and ladder operators (X +- iY)/2.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

PAULI_CHARS = "IXYZ"

_P1 = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}

ZERO_TOL = 1e-14


@dataclass(frozen=True)
class PauliString:
    ops: str

    def __post_init__(self):
        if not self.ops or any(c not in PAULI_CHARS for c in self.ops):
            raise ValueError(f"invalid Pauli word {self.ops!r}")

    @property
    def width(self) -> int:
        return len(self.ops)

    @property
    def is_identity(self) -> bool:
        return set(self.ops) == {"I"}

    def __str__(self):
        return self.ops


class PauliSum:
    """Weighted sum of Pauli strings over a fixed register width.

    Coefficients below ZERO_TOL are dropped on canonicalization; a Hermitian
    sum has real coefficients after combining.
    """

    def __init__(self, width: int, terms=None):
        self.width = width
        self._terms: dict[str, complex] = {}
        if terms:
            for key, coeff in dict(terms).items():
                self._add(key, coeff)
        self._prune()

    def _add(self, key, coeff):
        key = key.ops if isinstance(key, PauliString) else str(key)
        if len(key) != self.width:
            raise ValueError(f"string {key!r} does not match width {self.width}")
        PauliString(key)
        self._terms[key] = self._terms.get(key, 0.0) + complex(coeff)

    def _prune(self):
        self._terms = {k: v for k, v in self._terms.items() if abs(v) > ZERO_TOL}

    @property
    def terms(self):
        """Sorted list of (coefficient, PauliString)."""
        return [(self._terms[k], PauliString(k)) for k in sorted(self._terms)]

    def coefficient(self, ops: str) -> complex:
        return self._terms.get(ops, 0.0)

    def __len__(self):
        return len(self._terms)

    def __add__(self, other):
        if not isinstance(other, PauliSum) or other.width != self.width:
            return NotImplemented
        out = PauliSum(self.width, self._terms)
        for k, v in other._terms.items():
            out._add(k, v)
        out._prune()
        return out

    def __rmul__(self, scalar):
        return PauliSum(self.width, {k: scalar * v for k, v in self._terms.items()})

    __mul__ = __rmul__

    def __sub__(self, other):
        return self + (-1.0) * other

    @property
    def is_hermitian(self) -> bool:
        return all(abs(v.imag) <= 1e-12 for v in self._terms.values())

    def identity_coefficient(self) -> complex:
        return self._terms.get("I" * self.width, 0.0)

    def to_text(self) -> str:
        """One term per line: `<real>+<imag>i <string>` (imag omitted when zero)."""
        lines = []
        for coeff, string in self.terms:
            if abs(coeff.imag) > ZERO_TOL:
                lines.append(f"{coeff.real:.17g}{coeff.imag:+.17g}i {string}")
            else:
                lines.append(f"{coeff.real:.17g} {string}")
        return "\n".join(lines)

    @classmethod
    def from_text(cls, text: str) -> "PauliSum":
        terms = {}
        width = None
        for raw in text.splitlines():
            line = raw.strip()
            if not line:
                continue
            num, string = line.split()
            coeff = complex(num.replace("i", "j")) if "i" in num else complex(float(num))
            width = width or len(string)
            terms[string] = terms.get(string, 0.0) + coeff
        if width is None:
            raise ValueError("empty Pauli sum text")
        return cls(width, terms)

    def __repr__(self):
        return f"PauliSum(width={self.width}, terms={len(self)})"


@dataclass(frozen=True)
class QubitConfigMap:
    """Mapping from state index k to its qubit computational-basis string."""

    scheme: str
    n_states: int
    n_qubits: int

    def bits(self, k: int) -> str:
        if not 0 <= k < self.n_states:
            raise IndexError(f"state index {k} out of range")
        if self.scheme == "jwe":
            return "".join("1" if q == k else "0" for q in range(self.n_qubits))
        return format(k, f"0{self.n_qubits}b")

    def basis_index(self, k: int) -> int:
        """Statevector amplitude index of |q_k> (qubit 0 = most significant bit)."""
        return int(self.bits(k), 2)

    def basis_indices(self):
        return [self.basis_index(k) for k in range(self.n_states)]


def config_map(scheme: str, n_states: int) -> QubitConfigMap:
    if scheme == "jwe":
        return QubitConfigMap("jwe", n_states, n_states)
    if scheme == "qee":
        n_q = max(1, (n_states - 1).bit_length())
        return QubitConfigMap("qee", n_states, n_q)
    raise ValueError(f"unknown encoding scheme {scheme!r}")


def _check_hermitian(h: np.ndarray):
    h = np.asarray(h, dtype=complex)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise ValueError("Hamiltonian must be a square matrix")
    if np.abs(h - h.conj().T).max() > 1e-10:
        raise ValueError("non-Hermitian input rejected")
    return h


def _as_matrix(h):
    entries = getattr(h, "entries", h)
    return _check_hermitian(entries)


def encode_jwe(h) -> PauliSum:
    """Jordan-Wigner encoding of an N x N Hermitian matrix onto N qubits.

    Diagonal: sum_k h_kk (I - Z_k)/2. Coupling (i<j): the raising/lowering
    expansion with Z on the intermediate qubits,
      (h_ij+h_ji)/4 (X..X + Y..Y) + i(h_ij-h_ji)/4 (X..Y - Y..X).
    """
    mat = _as_matrix(h)
    n = mat.shape[0]
    out = PauliSum(n)

    def word(pairs):
        ops = ["I"] * n
        for q, c in pairs:
            ops[q] = c
        return "".join(ops)

    ident = word([])
    for k in range(n):
        out._add(ident, 0.5 * mat[k, k])
        out._add(word([(k, "Z")]), -0.5 * mat[k, k])
    for i in range(n):
        for j in range(i + 1, n):
            sym = 0.25 * (mat[i, j] + mat[j, i])
            asym = 0.25j * (mat[i, j] - mat[j, i])
            if abs(sym) <= ZERO_TOL and abs(asym) <= ZERO_TOL:
                continue
            chain = [(q, "Z") for q in range(i + 1, j)]
            out._add(word([(i, "X"), (j, "X")] + chain), sym)
            out._add(word([(i, "Y"), (j, "Y")] + chain), sym)
            out._add(word([(i, "X"), (j, "Y")] + chain), asym)
            out._add(word([(i, "Y"), (j, "X")] + chain), -asym)
    out._prune()
    return out


# per-qubit expansion factors of |b_i><b_j| as lists of (letter, coefficient)
_PROJ = {
    ("0", "0"): (("I", 0.5), ("Z", 0.5)),
    ("1", "1"): (("I", 0.5), ("Z", -0.5)),
    ("0", "1"): (("X", 0.5), ("Y", 0.5j)),
    ("1", "0"): (("X", 0.5), ("Y", -0.5j)),
}


def encode_qee(h) -> PauliSum:
    """Qubit-efficient (binary) encoding onto ceil(log2 N) qubits.

    N is padded to 2^Nq with null states (zero rows/columns). Each
    |q_i><q_j| factorizes per qubit into (I +- Z)/2 or (X +- iY)/2, per the
    projector expansion.
    """
    mat = _as_matrix(h)
    n = mat.shape[0]
    cmap = config_map("qee", n)
    n_q = cmap.n_qubits
    acc: dict[str, complex] = {}
    for i in range(n):
        bi = cmap.bits(i)
        for j in range(n):
            hij = mat[i, j]
            if abs(hij) <= ZERO_TOL:
                continue
            bj = cmap.bits(j)
            factors = [_PROJ[(bi[q], bj[q])] for q in range(n_q)]
            for combo in itertools.product(*factors):
                coeff = hij
                for _, c in combo:
                    coeff *= c
                key = "".join(letter for letter, _ in combo)
                acc[key] = acc.get(key, 0.0) + coeff
    return PauliSum(n_q, acc)


def pauli_string_matrix(string: PauliString) -> np.ndarray:
    mat = _P1[string.ops[0]]
    for c in string.ops[1:]:
        mat = np.kron(mat, _P1[c])
    return mat


def pauli_to_matrix(psum: PauliSum) -> np.ndarray:
    """Dense 2^width matrix by Kronecker expansion; testing-scale widths only."""
    if psum.width > 16:
        raise ValueError(f"width {psum.width} exceeds the dense-expansion bound of 16")
    dim = 2 ** psum.width
    mat = np.zeros((dim, dim), dtype=complex)
    for coeff, string in psum.terms:
        mat += coeff * pauli_string_matrix(string)
    return mat
