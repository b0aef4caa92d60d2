"""Truncated boson and spin-1/2 operator algebra.

Conventions used everywhere in the package:

* hbar = 1.
* Spin basis is ordered (|up>, |down>), so ``sigma_z = diag(+1, -1)``.
* On the joint boson-spin space the spin index is outermost: a state vector
  is ``[psi_up(n=0..N-1), psi_down(n=0..N-1)]`` and a product operator
  ``b (x) s`` is stored as ``np.kron(s, b)``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np


class SpaceTag(enum.Enum):
    BOSON = "boson"
    BOSON_SPIN = "boson_spin"
    TWO_BLOCK4 = "two_block4"
    LATTICE = "lattice"


class SpinLabel(enum.Enum):
    SIGMA_PLUS = "sigma_plus"
    SIGMA_MINUS = "sigma_minus"
    SIGMA_Z = "sigma_z"
    IDENTITY = "identity"


@dataclass(frozen=True)
class Truncation:
    """Fock-space cutoff.

    Parameters
    ----------
    n_max : int
        Number of retained Fock states ``|0>, ..., |n_max - 1>``.
    interior_margin : int
        Number of top Fock levels excluded when a residual is evaluated on
        the interior projection.
    """

    n_max: int
    interior_margin: int = 0

    def __post_init__(self):
        if int(self.n_max) != self.n_max or self.n_max < 2:
            raise ValueError(f"n_max must be an integer >= 2, got {self.n_max}")
        if self.interior_margin < 0 or self.interior_margin >= self.n_max:
            raise ValueError(
                f"interior_margin must lie in [0, n_max), got {self.interior_margin}"
            )

    @property
    def n_interior(self) -> int:
        return self.n_max - self.interior_margin

    def doubled(self) -> "Truncation":
        return Truncation(2 * self.n_max, 2 * self.interior_margin)


_DIM_FACTOR = {SpaceTag.BOSON: 1, SpaceTag.BOSON_SPIN: 2, SpaceTag.TWO_BLOCK4: 4}


def space_dim(space: SpaceTag, trunc: Truncation, n_sites: int = 1) -> int:
    if space is SpaceTag.LATTICE:
        return (2 * trunc.n_max) ** n_sites
    return _DIM_FACTOR[space] * trunc.n_max


@dataclass(frozen=True, eq=False)
class OperatorMatrix:
    """Dense complex operator on a truncated space.

    The entries are stored read-only; arithmetic returns new instances.
    """

    entries: np.ndarray
    trunc: Truncation
    space: SpaceTag = SpaceTag.BOSON
    n_sites: int = field(default=1)

    def __post_init__(self):
        m = np.array(self.entries, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"operator must be square, got shape {m.shape}")
        expected = space_dim(self.space, self.trunc, self.n_sites)
        if m.shape[0] != expected:
            raise ValueError(
                f"dimension {m.shape[0]} inconsistent with {self.space.value} "
                f"at n_max={self.trunc.n_max} (expected {expected})"
            )
        m.flags.writeable = False
        object.__setattr__(self, "entries", m)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.entries, dtype=dtype)

    def _like(self, m) -> "OperatorMatrix":
        return OperatorMatrix(m, self.trunc, self.space, self.n_sites)

    def _check(self, other: "OperatorMatrix"):
        if other.space is not self.space or other.trunc.n_max != self.trunc.n_max:
            raise ValueError("operators live on different spaces")

    def __matmul__(self, other):
        if isinstance(other, OperatorMatrix):
            self._check(other)
            return self._like(self.entries @ other.entries)
        return self.entries @ other

    def __add__(self, other):
        if isinstance(other, OperatorMatrix):
            self._check(other)
            return self._like(self.entries + other.entries)
        return NotImplemented

    def __sub__(self, other):
        if isinstance(other, OperatorMatrix):
            self._check(other)
            return self._like(self.entries - other.entries)
        return NotImplemented

    def __mul__(self, scalar):
        if np.isscalar(scalar):
            return self._like(scalar * self.entries)
        return NotImplemented

    __rmul__ = __mul__

    def __neg__(self):
        return self._like(-self.entries)

    def dag(self) -> "OperatorMatrix":
        return self._like(self.entries.conj().T)

    def interior_indices(self) -> np.ndarray:
        return interior_indices(self.space, self.trunc)

    def interior(self) -> np.ndarray:
        """Compression onto the interior Fock levels."""
        idx = self.interior_indices()
        return self.entries[np.ix_(idx, idx)]

    def interior_norm(self) -> float:
        return interior_norm(self.entries, self.space, self.trunc)


def interior_indices(space: SpaceTag, trunc: Truncation) -> np.ndarray:
    """Basis indices whose Fock label lies below ``n_max - interior_margin``."""
    if space is SpaceTag.LATTICE:
        raise ValueError("interior projection is not defined for lattice operators")
    blocks = _DIM_FACTOR[space]
    base = np.arange(trunc.n_interior)
    return np.concatenate([base + b * trunc.n_max for b in range(blocks)])


def interior_norm(m: np.ndarray, space: SpaceTag, trunc: Truncation) -> float:
    """Spectral norm of ``m`` restricted to interior rows and columns."""
    idx = interior_indices(space, trunc)
    sub = np.asarray(m)[np.ix_(idx, idx)]
    if not sub.size:
        return 0.0
    return float(np.linalg.norm(sub, 2))


def annihilation_matrix(trunc: Truncation) -> OperatorMatrix:
    """Boson lowering operator, ``a|n> = sqrt(n)|n-1>``."""
    a = np.diag(np.sqrt(np.arange(1, trunc.n_max, dtype=float)), 1)
    return OperatorMatrix(a, trunc, SpaceTag.BOSON)


def creation_matrix(trunc: Truncation) -> OperatorMatrix:
    return annihilation_matrix(trunc).dag()


def number_matrix(trunc: Truncation) -> OperatorMatrix:
    return OperatorMatrix(np.diag(np.arange(trunc.n_max, dtype=float)), trunc)


def boson_identity(trunc: Truncation) -> OperatorMatrix:
    return OperatorMatrix(np.eye(trunc.n_max), trunc)


_SPIN = {
    SpinLabel.SIGMA_PLUS: np.array([[0.0, 1.0], [0.0, 0.0]]),
    SpinLabel.SIGMA_MINUS: np.array([[0.0, 0.0], [1.0, 0.0]]),
    SpinLabel.SIGMA_Z: np.array([[1.0, 0.0], [0.0, -1.0]]),
    SpinLabel.IDENTITY: np.eye(2),
}


def spin_matrix(label: SpinLabel | str) -> np.ndarray:
    """2x2 spin operator in the (|up>, |down>) basis."""
    m = _SPIN[SpinLabel(label)].astype(complex)
    m.flags.writeable = False
    return m


def tensor_boson_spin(b: OperatorMatrix, s) -> OperatorMatrix:
    """Joint operator ``b (x) s`` with the spin index outermost."""
    s = np.asarray(s, dtype=complex)
    if b.space is not SpaceTag.BOSON:
        raise ValueError("first factor must be a boson-only operator")
    if s.shape != (2, 2):
        raise ValueError(f"spin factor must be 2x2, got {s.shape}")
    return OperatorMatrix(np.kron(s, b.entries), b.trunc, SpaceTag.BOSON_SPIN)


def expm_hermitian(h: np.ndarray, factor: complex) -> np.ndarray:
    """``exp(factor * h)`` for Hermitian ``h`` via its eigendecomposition."""
    w, v = np.linalg.eigh(h)
    return (v * np.exp(factor * w)) @ v.conj().T


def displacement_matrix(alpha: complex, trunc: Truncation) -> OperatorMatrix:
    """Displacement operator ``exp(alpha a^dag - alpha* a)`` on the truncated space."""
    a = annihilation_matrix(trunc).entries
    # alpha a^dag - alpha* a = -i K with K Hermitian
    k = 1j * (alpha * a.conj().T - np.conj(alpha) * a)
    return OperatorMatrix(expm_hermitian(k, -1j), trunc)


def magnetic_translation(q: complex, trunc: Truncation, magnetic_length: float = 1.0):
    """``tau_q = exp[-i l (q a + q* a^dag) / sqrt(2)]`` for a 2-vector q encoded as complex."""
    a = annihilation_matrix(trunc).entries
    ql = q * magnetic_length
    k = (ql * a + np.conj(ql) * a.conj().T) / np.sqrt(2.0)
    return OperatorMatrix(expm_hermitian(k, -1j), trunc)


def wedge(q: complex, p: complex, magnetic_length: float = 1.0) -> float:
    """``q ^ p = l^2 (q x p)_z`` for 2-vectors encoded as complex numbers."""
    return magnetic_length**2 * (q.real * p.imag - q.imag * p.real)


def gmp_commutator_residual(
    q: complex, p: complex, magnetic_length: float, trunc: Truncation
) -> float:
    """Interior norm of ``[tau_q, tau_p] - 2i sin(q^p / 2) tau_{q+p}``."""
    if magnetic_length <= 0:
        raise ValueError("magnetic_length must be positive")
    q, p = complex(q), complex(p)
    tq = magnetic_translation(q, trunc, magnetic_length).entries
    tp = magnetic_translation(p, trunc, magnetic_length).entries
    tqp = magnetic_translation(q + p, trunc, magnetic_length).entries
    phase = 2j * np.sin(wedge(q, p, magnetic_length) / 2.0)
    diff = tq @ tp - tp @ tq - phase * tqp
    return interior_norm(diff, SpaceTag.BOSON, trunc)
