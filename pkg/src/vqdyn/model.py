"""Physical problem setup: hydrogenic basis, laser pulse, N x N Hamiltonian.

Atomic units throughout (hbar = m = e = 1). The model atom is a truncated
set of bound hydrogen orbitals (m = 0 only); the laser couples them through
the length-gauge dipole interaction F(t) * z. Dipole matrix elements are
evaluated in closed form (exact rational-times-surd arithmetic via the
associated-Laguerre expansion of the radial functions), so coefficients like
128*sqrt(2)/243 come out exactly.

Sign convention: dipole couplings are returned as positive magnitudes. The
relative orbital phases are a gauge choice per orbital; the positive
convention is the one whose dynamics reproduce the reference transition
probabilities for N >= 8, where coupling-graph cycles make relative signs
observable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import comb, factorial
from pathlib import Path

import numpy as np
from scipy.integrate import quad

SR = "sr"
IR = "ir"

_L_LETTERS = "spdfghiklm"

# Orbital sets of the reference model, ground state first (ties in energy
# broken by ascending l).
PRESETS = {
    "h2": ((1, 0), (2, 1)),
    "h4": ((1, 0), (2, 1), (3, 0), (3, 2)),
    "h8": ((1, 0), (2, 0), (2, 1), (3, 0), (3, 1), (3, 2), (4, 0), (4, 1)),
    "h16": (
        (1, 0), (2, 0), (2, 1), (3, 0), (3, 1), (3, 2), (4, 0), (4, 1),
        (4, 2), (4, 3), (5, 0), (5, 1), (5, 2), (5, 3), (5, 4), (6, 0),
    ),
}


class QuadratureError(RuntimeError):
    """Adaptive quadrature failed to reach the requested tolerance."""


@dataclass(frozen=True, order=True)
class Orbital:
    """Bound hydrogen orbital |n, l, m=0>."""

    n: int
    l: int
    m: int = 0

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"principal quantum number must be >= 1, got {self.n}")
        if not 0 <= self.l < self.n:
            raise ValueError(f"need 0 <= l < n, got l={self.l}, n={self.n}")
        if self.m != 0:
            raise ValueError("only m = 0 orbitals are supported")

    @property
    def label(self) -> str:
        return f"{self.n}{_L_LETTERS[self.l]}"


class BasisSet:
    """Ordered truncated hydrogen basis; index 0 is the ground state."""

    def __init__(self, orbitals):
        orbs = tuple(Orbital(*o) if not isinstance(o, Orbital) else o for o in orbitals)
        if len(set(orbs)) != len(orbs):
            raise ValueError("duplicate orbitals in basis")
        self.orbitals = orbs

    @classmethod
    def preset(cls, name: str) -> "BasisSet":
        try:
            return cls(PRESETS[name])
        except KeyError:
            raise KeyError(
                f"unknown preset {name!r}; valid presets: {', '.join(sorted(PRESETS))}"
            ) from None

    @classmethod
    def from_file(cls, path) -> "BasisSet":
        """Load a basis from a plain-text list of "n l" pairs, one per line."""
        orbs = []
        for raw in Path(path).read_text().splitlines():
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 2:
                raise ValueError(f"expected 'n l' pair, got line {raw!r}")
            orbs.append(Orbital(int(parts[0]), int(parts[1])))
        if not orbs:
            raise ValueError(f"no orbitals found in {path}")
        return cls(orbs)

    @property
    def size(self) -> int:
        return len(self.orbitals)

    def labels(self):
        return [o.label for o in self.orbitals]

    def energies(self) -> np.ndarray:
        return np.array([orbital_energy(o) for o in self.orbitals])

    def dipole_matrix(self) -> np.ndarray:
        """Symmetric matrix of <i| z |j> couplings (positive convention)."""
        if not hasattr(self, "_dipole_cache"):
            n = self.size
            z = np.zeros((n, n))
            for i in range(n):
                for j in range(i + 1, n):
                    z[i, j] = z[j, i] = dipole_element(self.orbitals[i], self.orbitals[j])
            self._dipole_cache = z
        return self._dipole_cache

    def __repr__(self):
        return f"BasisSet([{', '.join(self.labels())}])"


@dataclass(frozen=True)
class LaserPulse:
    """Gaussian-envelope carrier pulse F(t) = E0 exp(-((t-t0)/tau)^2) cos(omega t)."""

    e0: float = 0.25
    tau: float = 20.5
    t0: float = 50.0
    omega: float = 0.06

    def __post_init__(self):
        if self.e0 < 0:
            raise ValueError("peak amplitude must be >= 0")
        if self.tau <= 0:
            raise ValueError("Gaussian width must be > 0")

    def envelope(self, t):
        return self.e0 * np.exp(-(((t - self.t0) / self.tau) ** 2))


@dataclass(frozen=True)
class HamiltonianMatrix:
    """N x N Hamiltonian snapshot at a given time, in SR or IR."""

    entries: np.ndarray
    time: float
    representation: str = SR

    def __post_init__(self):
        if self.representation not in (SR, IR):
            raise ValueError(f"representation must be {SR!r} or {IR!r}")
        h = np.asarray(self.entries)
        if h.ndim != 2 or h.shape[0] != h.shape[1]:
            raise ValueError("Hamiltonian must be square")
        if np.abs(h - h.conj().T).max() > 1e-12:
            raise ValueError("Hamiltonian must be Hermitian to 1e-12")

    @property
    def size(self) -> int:
        return self.entries.shape[0]


def orbital_energy(orb: Orbital) -> float:
    """Bound-state energy -1/(2 n^2) hartree."""
    return -1.0 / (2 * orb.n * orb.n)


def field_at(pulse: LaserPulse, t) -> float:
    """Laser field F(t) = E(t) cos(omega t)."""
    return pulse.envelope(t) * np.cos(pulse.omega * t)


def _squarefree_split(n: int):
    """n = f^2 * s with s squarefree; returns (f, s)."""
    f, s, d = 1, 1, 2
    while d * d <= n:
        while n % (d * d) == 0:
            n //= d * d
            f *= d
        if n % d == 0:
            n //= d
            s *= d
        d += 1
    return f, s * n


@lru_cache(maxsize=None)
def _radial_integral_exact(na: int, la: int, nb: int, lb: int):
    """Exact integral R_{na la}(r) r R_{nb lb}(r) r^2 dr as (Fraction, surd).

    R_nl = sqrt((2/n)^3 (n-l-1)!/(2n (n+l)!)) e^{-r/n} (2r/n)^l L^{2l+1}_{n-l-1}(2r/n);
    the product is a rational polynomial times exp(-r(1/na+1/nb)), integrated
    term by term with the moment formula k!/a^(k+1). The value is
    fraction * sqrt(surd) and carries the textbook R_nl sign.
    """

    def poly(n, l):
        norm2 = Fraction(2, n) ** 3 * Fraction(factorial(n - l - 1), 2 * n * factorial(n + l))
        coeffs = {
            l + m: Fraction((-1) ** m * comb(n + l, n - l - 1 - m), factorial(m))
            * Fraction(2, n) ** (l + m)
            for m in range(n - l)
        }
        return norm2, coeffs

    n2a, ca = poly(na, la)
    n2b, cb = poly(nb, lb)
    a = Fraction(1, na) + Fraction(1, nb)
    total = Fraction(0)
    for pa, va in ca.items():
        for pb, vb in cb.items():
            p = pa + pb + 3
            total += va * vb * Fraction(factorial(p)) / a ** (p + 1)
    n2 = n2a * n2b
    f, s = _squarefree_split(n2.numerator * n2.denominator)
    return Fraction(f, n2.denominator) * total, s


def dipole_element_exact(a: Orbital, b: Orbital):
    """<a| z |b> as (Fraction, surd) with value = fraction * sqrt(surd), >= 0.

    Zero (Fraction(0), 1) unless |l_a - l_b| = 1. The angular factor for
    l -> l+1 at m = 0 is (l+1)/sqrt((2l+1)(2l+3)).
    """
    if a.m != 0 or b.m != 0:
        raise ValueError("only m = 0 orbitals are supported")
    if abs(a.l - b.l) != 1:
        return Fraction(0), 1
    lo = min(a.l, b.l)
    rad_frac, rad_surd = _radial_integral_exact(a.n, a.l, b.n, b.l)
    # angular (lo+1)/sqrt((2lo+1)(2lo+3)) = (lo+1)*sqrt(q)/(f*q) with q = f^2*s
    q = (2 * lo + 1) * (2 * lo + 3)
    f, s = _squarefree_split(q)
    ang_frac = Fraction(lo + 1, f * s)
    f2, surd = _squarefree_split(rad_surd * s)
    return abs(rad_frac * ang_frac * f2), surd


def dipole_element(a: Orbital, b: Orbital) -> float:
    """<a| z |b> in atomic units (positive convention); 0 unless delta-l = 1."""
    frac, surd = dipole_element_exact(a, b)
    if frac == 0:
        return 0.0
    return float(frac.numerator) * math.sqrt(surd) / frac.denominator


def hamiltonian_at(basis: BasisSet, pulse: LaserPulse, t: float, rep: str = SR) -> HamiltonianMatrix:
    """Time-dependent Hamiltonian h_ij(t) in the chosen representation.

    SR: h = diag(E) + F(t) z.  IR: h~_ij = exp(i(E_i-E_j)t) F(t) z_ij with
    zero diagonal (the unitary rotation removes the unperturbed part).
    """
    z = basis.dipole_matrix()
    e = basis.energies()
    f = field_at(pulse, t)
    if rep == SR:
        h = np.diag(e).astype(complex) + f * z
    elif rep == IR:
        phases = np.exp(1j * t * (e[:, None] - e[None, :]))
        h = phases * (f * z)
    else:
        raise ValueError(f"representation must be {SR!r} or {IR!r}")
    return HamiltonianMatrix(h, t, rep)


@dataclass
class FourierSeries:
    """Real Fourier series on [-L, L]: a0 + sum a_n cos(n pi t/L) + b_n sin(n pi t/L)."""

    L: float
    a0: float
    an: np.ndarray
    bn: np.ndarray

    @property
    def order(self) -> int:
        return len(self.an)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        acc = np.full_like(t, self.a0)
        for n in range(1, self.order + 1):
            arg = n * np.pi * t / self.L
            acc = acc + self.an[n - 1] * np.cos(arg) + self.bn[n - 1] * np.sin(arg)
        return acc


def fourier_expand(f, L: float, n_max: int, abs_tol: float = 1e-9) -> FourierSeries:
    """Fourier coefficients of f on [-L, L] by adaptive Gauss-Kronrod quadrature."""
    if L <= 0:
        raise ValueError("half-interval L must be > 0")
    if n_max < 0:
        raise ValueError("n_max must be >= 0")

    def integral(g):
        val, err = quad(g, -L, L, epsabs=abs_tol, epsrel=0.0, limit=400)
        if err > 10 * max(abs_tol, abs(val) * 1e-12):
            raise QuadratureError(
                f"quadrature error estimate {err:.2e} exceeds tolerance {abs_tol:.1e}"
            )
        return val

    a0 = integral(f) / (2 * L)
    an = np.array([integral(lambda t, n=n: f(t) * math.cos(n * math.pi * t / L)) / L
                   for n in range(1, n_max + 1)])
    bn = np.array([integral(lambda t, n=n: f(t) * math.sin(n * math.pi * t / L)) / L
                   for n in range(1, n_max + 1)])
    return FourierSeries(L=L, a0=a0, an=an, bn=bn)
