"""Dressed-state Lindblad dynamics and the degenerate stationary manifold.

Sign convention: ``d rho/dt = L rho`` with ``L = -i[H, .] + sum D[.]``, so
physical eigenvalues have non-positive real parts. Density matrices are
vectorized by column stacking, ``vec(A rho B) = (B^T (x) A) vec(rho)``; the
basis vector ``|k k'>>`` corresponds to ``|k><k'|``.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg as sla

from .dynamics import Spectrum, eigen_spectrum
from .errors import AmbiguousClusterError, DefectiveClusterError
from .model import GrParams, boson_spin_operators, build_gr_hamiltonian, parity_operator
from .operators import Truncation

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class LindbladRates:
    """Bath rates in units of the model frequencies.

    ``kappa`` couples through ``a + a^dag``, ``gamma`` through
    ``sigma_- + sigma_+``; ``gamma_phi0`` is the zero-frequency dephasing
    density. ``n_levels=None`` keeps every dressed state.
    """

    kappa: float
    gamma: float
    gamma_phi0: float = 0.0
    n_levels: int | None = None

    def __post_init__(self):
        for name in ("kappa", "gamma", "gamma_phi0"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v >= 0):
                raise ValueError(f"{name} must be a finite non-negative rate, got {v}")
        if self.n_levels is not None and self.n_levels < 1:
            raise ValueError("n_levels must be positive")

    @classmethod
    def default(cls, omega: float = 1.0, dephasing: bool = False) -> "LindbladRates":
        return cls(1e-2 * omega, 1e-2 * omega, 2e-2 * omega if dephasing else 0.0)

    def scaled(self, factor: float) -> "LindbladRates":
        return LindbladRates(
            self.kappa * factor, self.gamma * factor, self.gamma_phi0 * factor, self.n_levels
        )


class Basis(enum.Enum):
    DRESSED = "dressed"
    BARE = "bare"


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    entries: np.ndarray
    basis: Basis = Basis.DRESSED

    def __post_init__(self):
        m = np.array(self.entries, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("density matrix must be square")
        if np.abs(m - m.conj().T).max() > 1e-10:
            raise ValueError("density matrix is not Hermitian")
        if abs(np.trace(m) - 1) > 1e-10:
            raise ValueError(f"density matrix trace is {np.trace(m).real}, expected 1")
        if np.linalg.eigvalsh(m).min() < -1e-8:
            raise ValueError("density matrix is not positive semidefinite")
        m.flags.writeable = False
        object.__setattr__(self, "entries", m)

    @classmethod
    def pure(cls, psi, basis: Basis = Basis.DRESSED) -> "DensityMatrix":
        psi = np.asarray(psi, dtype=complex)
        psi = psi / np.linalg.norm(psi)
        return cls(np.outer(psi, psi.conj()), basis)


@dataclass(frozen=True, eq=False)
class DissipatorPieces:
    """Ingredients of the dressed-state dissipator.

    ``gamma_kappa[j, k]`` and ``gamma_gamma[j, k]`` hold the downward rates
    ``k -> j`` (non-zero only for ``k > j``); ``phi`` the dephasing amplitudes.
    """

    energies: np.ndarray
    gamma_kappa: np.ndarray
    gamma_gamma: np.ndarray
    phi: np.ndarray
    omega: float

    @property
    def gammas(self) -> np.ndarray:
        return self.gamma_kappa + self.gamma_gamma

    @property
    def dephasing_operator(self) -> np.ndarray:
        return np.diag(self.phi).astype(complex)

    @property
    def jumps(self) -> list[tuple[int, int, float]]:
        """``(j, k, rate)`` for every non-zero jump ``|j><k|``."""
        g = self.gammas
        return [(int(j), int(k), float(g[j, k])) for j, k in zip(*np.nonzero(g))]

    @property
    def dim(self) -> int:
        return len(self.energies)


def build_dressed_dissipator(
    s: Spectrum, rates: LindbladRates, p: GrParams, trunc: Truncation | None = None
) -> DissipatorPieces:
    """Rates ``Gamma_c^{jk} = gamma_c (D_kj / w) |<j|c + c^dag|k>|^2`` and dephasing ``Phi_j``.

    Pairs closer than ``1e-8 w`` are treated as degenerate and get zero rate.
    """
    e = np.asarray(s.eigenvalues, dtype=float)
    if np.any(np.diff(e) < 0):
        raise ValueError("spectrum must be sorted ascending")
    trunc = trunc or s.trunc
    if trunc is None:
        raise ValueError("a truncation is required to build dressed matrix elements")
    d = rates.n_levels or len(e)
    if d > len(e):
        raise ValueError(f"n_levels={d} exceeds the Hilbert dimension {len(e)}")
    e = e[:d]
    v = s.eigenvectors[:, :d]
    ops = boson_spin_operators(trunc)
    xa = v.conj().T @ (ops.a + ops.ad).entries @ v
    xs = v.conj().T @ (ops.sm + ops.sp).entries @ v
    sz = np.real(np.einsum("ij,ik,kj->j", v.conj(), ops.sz.entries, v))

    gap = e[None, :] - e[:, None]  # gap[j, k] = e_k - e_j
    upper = np.triu(np.ones((d, d), dtype=bool), 1) & (gap >= 1e-8 * p.omega)
    weight = np.where(upper, gap / p.omega, 0.0)
    return DissipatorPieces(
        energies=e,
        gamma_kappa=rates.kappa * weight * np.abs(xa) ** 2,
        gamma_gamma=rates.gamma * weight * np.abs(xs) ** 2,
        phi=np.sqrt(rates.gamma_phi0 / 2.0) * sz,
        omega=p.omega,
    )


def vec(rho: np.ndarray) -> np.ndarray:
    return np.asarray(rho).reshape(-1, order="F")


def unvec(v: np.ndarray, d: int | None = None) -> np.ndarray:
    d = d or int(round(np.sqrt(v.shape[0])))
    return np.asarray(v).reshape((d, d) + v.shape[1:], order="F")


def hamiltonian_superop(h: np.ndarray) -> np.ndarray:
    h = np.asarray(h, dtype=complex)
    eye = np.eye(h.shape[0])
    return -1j * (np.kron(eye, h) - np.kron(h.T, eye))


def dissipator_superop(o: np.ndarray) -> np.ndarray:
    """``D[O] rho = O rho O^dag - {O^dag O, rho}/2`` as a matrix."""
    o = np.asarray(o, dtype=complex)
    eye = np.eye(o.shape[0])
    odo = o.conj().T @ o
    return np.kron(o.conj(), o) - 0.5 * np.kron(eye, odo) - 0.5 * np.kron(odo.T, eye)


def build_liouvillian(h, pieces: DissipatorPieces) -> np.ndarray:
    """Full superoperator for ``H`` in the dressed basis plus the dissipator.

    ``h`` is either the dressed energies or a square matrix in the same basis.
    """
    h = np.asarray(h)
    if h.ndim == 1:
        h = np.diag(h)
    d = pieces.dim
    if h.shape != (d, d):
        raise ValueError(f"Hamiltonian shape {h.shape} does not match {d} dressed levels")
    lm = hamiltonian_superop(h)
    if np.any(pieces.phi != 0):
        lm += dissipator_superop(pieces.dephasing_operator)
    g = pieces.gammas
    # each jump |j><k| feeds population k -> j and damps every element touching k
    pop = np.arange(d) * (d + 1)
    lm[np.ix_(pop, pop)] += g
    out = g.sum(axis=0)
    lm[np.diag_indices_from(lm)] -= 0.5 * (out[:, None] + out[None, :]).reshape(-1, order="F")
    return lm


@dataclass(frozen=True, eq=False)
class LiouvillianDecomposition:
    l_matrix: np.ndarray
    eigenvalues: np.ndarray
    right_vectors: np.ndarray
    right_zero_basis: list
    left_zero_basis: list
    zero_dim: int
    zero_tol: float
    condition_number: float


def decompose_liouvillian(
    l_matrix: np.ndarray, zero_tol: float | None = None, gap_factor: float = 10.0
) -> LiouvillianDecomposition:
    """Full eigendecomposition with a biorthonormal basis of the zero cluster.

    Raises
    ------
    AmbiguousClusterError
        If an eigenvalue sits between ``zero_tol`` and ``gap_factor * zero_tol``.
    DefectiveClusterError
        If the left and right zero vectors cannot be biorthonormalized.
    """
    l_matrix = np.asarray(l_matrix, dtype=complex)
    d = int(round(np.sqrt(l_matrix.shape[0])))
    w, vl, vr = sla.eig(l_matrix, left=True, right=True)
    if zero_tol is None:
        zero_tol = 1e-8 * float(np.abs(w).max())
    mag = np.abs(w)
    zero = mag < zero_tol
    grey = (mag >= zero_tol) & (mag < gap_factor * zero_tol)
    if grey.any() or not zero.any():
        raise AmbiguousClusterError(
            f"zero cluster not separated: {int(zero.sum())} eigenvalues below {zero_tol:.3e}, "
            f"{int(grey.sum())} within a factor {gap_factor} above"
        )
    right = vr[:, zero]
    left = vl[:, zero]
    g = left.conj().T @ right
    cond = float(np.linalg.cond(g))
    if not np.isfinite(cond) or cond > 1e8:
        raise DefectiveClusterError(f"zero cluster is defective (condition number {cond:.3e})")
    left = left @ np.linalg.inv(g).conj().T
    return LiouvillianDecomposition(
        l_matrix=l_matrix,
        eigenvalues=w,
        right_vectors=vr,
        right_zero_basis=[unvec(right[:, i], d) for i in range(right.shape[1])],
        left_zero_basis=[unvec(left[:, i], d) for i in range(left.shape[1])],
        zero_dim=int(zero.sum()),
        zero_tol=zero_tol,
        condition_number=cond,
    )


@dataclass(frozen=True, eq=False)
class ConservedQuantitySet:
    """Left zero vectors ``rho_bar`` (dressed basis) and ``I_i = Tr[rho_bar_i^dag rho]``.

    ``basis`` holds the dressed states as bare-basis columns, used to move the
    functionals to another basis.
    """

    rho_bar: list
    labels: list
    basis: np.ndarray | None = None

    def __getitem__(self, label: str) -> np.ndarray:
        return self.rho_bar[self.labels.index(label)]

    def evaluate(self, rho: np.ndarray) -> np.ndarray:
        rho = np.asarray(rho)
        return np.array([np.trace(r.conj().T @ rho) for r in self.rho_bar])

    def to_bare(self) -> "ConservedQuantitySet":
        v = self.basis
        return ConservedQuantitySet([v @ r @ v.conj().T for r in self.rho_bar], list(self.labels))

    def in_basis(self, other: np.ndarray) -> "ConservedQuantitySet":
        """Re-express the functionals in a different dressed basis (bare columns)."""
        bare = self.to_bare()
        return ConservedQuantitySet(
            [other.conj().T @ r @ other for r in bare.rho_bar], list(self.labels), other
        )


def _with_sum_and_difference(mats, labels, basis):
    mats, labels = list(mats), list(labels)
    mats += [mats[0] + mats[1], mats[0] - mats[1]]
    labels += ["tr", "diff"]
    return ConservedQuantitySet(mats, labels, basis)


def conserved_quantities_recurrence(
    energies: Sequence[float],
    gammas: np.ndarray,
    omega: float = 1.0,
    basis: np.ndarray | None = None,
) -> ConservedQuantitySet:
    """Diagonal left zero vectors from the downward-rate recurrence.

    ``rho_bar^(i)_k = (G^{ik} + sum_{l=3}^{k-1} G^{lk} rho_bar^(i)_l) / sum_{l<k} G^{lk}``
    with states 1 and 2 the degenerate ground pair (indices 0 and 1 here).
    """
    e = np.asarray(energies, dtype=float)
    g = np.asarray(gammas, dtype=float)
    d = len(e)
    if d < 2 or g.shape != (d, d):
        raise ValueError("need a square rate table over at least two levels")
    if abs(e[1] - e[0]) > 1e-8 * omega:
        raise ValueError(f"ground pair is not degenerate (gap {e[1] - e[0]:.3e})")
    if g[0, 1] != 0 or g[1, 0] != 0:
        raise ValueError("rate between the degenerate ground states must vanish")
    diag = np.zeros((2, d))
    diag[0, 0] = diag[1, 1] = 1.0
    for k in range(2, d):
        total = g[:k, k].sum()
        if total <= 0:
            raise ValueError(f"level {k} has no downward rate; recurrence undefined")
        diag[:, k] = (g[:2, k] + diag[:, 2:k] @ g[2:k, k]) / total
    mats = [np.diag(diag[0]).astype(complex), np.diag(diag[1]).astype(complex)]
    return _with_sum_and_difference(mats, ["rho1", "rho2"], basis)


def conserved_quantities_direct(
    decomp: LiouvillianDecomposition, ground: tuple[int, int] = (0, 1), basis=None
) -> ConservedQuantitySet:
    """Left zero vectors dual to the canonical stationary states.

    The canonical right states are ``|1><1|, |2><2|`` and, when stationary,
    the ground coherences. With a one-dimensional zero cluster only the trace
    functional is returned.
    """
    d = decomp.right_zero_basis[0].shape[0]
    right = np.stack([vec(r) for r in decomp.right_zero_basis], axis=1)
    left = np.stack([vec(r) for r in decomp.left_zero_basis], axis=1)
    if decomp.zero_dim == 1:
        tr_left = left[:, 0] * np.trace(decomp.right_zero_basis[0])
        return ConservedQuantitySet([unvec(tr_left, d)], ["tr"], basis)

    i, j = ground
    cands, names = [], []
    for a, b, name in ((i, i, "rho1"), (j, j, "rho2"), (i, j, "c12"), (j, i, "c21")):
        e_ab = np.zeros((d, d), dtype=complex)
        e_ab[a, b] = 1.0
        coeff = left.conj().T @ vec(e_ab)
        if np.linalg.norm(right @ coeff - vec(e_ab)) < 1e-8:
            cands.append(coeff)
            names.append(name)
    if len(cands) != decomp.zero_dim or names[:2] != ["rho1", "rho2"]:
        raise DefectiveClusterError(
            f"canonical ground states {names} do not span the {decomp.zero_dim}-dim zero cluster"
        )
    a_mat = np.stack(cands, axis=1)
    duals = left @ np.linalg.inv(a_mat).conj().T
    mats = [unvec(duals[:, n], d) for n in range(len(names))]
    cq = _with_sum_and_difference(mats[:2], names[:2], basis)
    return ConservedQuantitySet(cq.rho_bar + mats[2:], cq.labels + names[2:], basis)


def phi_equal(phi: np.ndarray, omega: float, ground=(0, 1)) -> bool:
    a, b = phi[ground[0]], phi[ground[1]]
    return bool(abs(a - b) < 1e-8 * (abs(a) + abs(b) + omega))


def stationary_from_conserved(
    rho0: np.ndarray,
    cq: ConservedQuantitySet,
    include_coherences: bool,
    ground: tuple[int, int] = (0, 1),
) -> np.ndarray:
    """Stationary state of the degenerate manifold in the dressed basis.

    ``rho_st = (P1 + P2)/2 + (P1 - P2) Tr[rho_bar_diff^dag rho0]/2``, plus the
    ground coherences of ``rho0`` when they are conserved.
    """
    rho0 = np.asarray(rho0, dtype=complex)
    d = rho0.shape[0]
    i, j = ground
    p1 = np.zeros((d, d), dtype=complex)
    p2 = np.zeros((d, d), dtype=complex)
    p1[i, i] = p2[j, j] = 1.0
    i_tr = np.trace(cq["tr"].conj().T @ rho0)
    i_diff = np.trace(cq["diff"].conj().T @ rho0)
    rho = 0.5 * (p1 + p2) * i_tr + 0.5 * (p1 - p2) * i_diff
    if include_coherences:
        rho[i, j] += rho0[i, j]
        rho[j, i] += rho0[j, i]
    return rho


def project_stationary(decomp: LiouvillianDecomposition, rho0: np.ndarray) -> np.ndarray:
    """``P_0 rho0`` from the biorthonormal zero basis."""
    rho0 = np.asarray(rho0)
    out = np.zeros_like(decomp.right_zero_basis[0])
    for r, l in zip(decomp.right_zero_basis, decomp.left_zero_basis):
        out = out + np.trace(l.conj().T @ rho0) * r
    return out


@dataclass(frozen=True)
class EigenPropagation:
    pass


@dataclass(frozen=True)
class Rk4:
    dt: float

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")


def evolve_density_matrix(
    l_matrix, rho0, times: Sequence[float], method=EigenPropagation(), decomp=None
) -> np.ndarray:
    """Density matrices at ``times`` (array of shape ``(len(times), d, d)``).

    Eigen-propagation expands ``vec(rho0)`` in right eigenvectors; eigenvalues
    inside the zero cluster are set exactly to zero so stationary components
    never drift.
    """
    rho0 = rho0.entries if isinstance(rho0, DensityMatrix) else np.asarray(rho0, dtype=complex)
    times = np.asarray(times, dtype=float)
    if np.any(np.diff(times) < 0) or (len(times) and times[0] < 0):
        raise ValueError("times must be non-negative and non-decreasing")
    d = rho0.shape[0]
    l_matrix = np.asarray(l_matrix, dtype=complex)
    if l_matrix.shape != (d * d, d * d):
        raise ValueError("Liouvillian and density matrix dimensions disagree")

    if isinstance(method, EigenPropagation):
        if decomp is None:
            w, vr = np.linalg.eig(l_matrix)
            zero_tol = 1e-8 * np.abs(w).max()
        else:
            w, vr, zero_tol = decomp.eigenvalues, decomp.right_vectors, decomp.zero_tol
        w = np.where(np.abs(w) < zero_tol, 0.0, w)
        c = np.linalg.solve(vr, vec(rho0))
        out = vr @ (np.exp(np.outer(w, times)) * c[:, None])
        return np.moveaxis(unvec(out, d), -1, 0)

    if isinstance(method, Rk4):
        out = np.empty((len(times), d, d), dtype=complex)
        y, t_now = vec(rho0).astype(complex), 0.0
        for n, t in enumerate(times):
            steps = int(np.ceil((t - t_now) / method.dt - 1e-12))
            if steps > 0:
                h = (t - t_now) / steps
                for _ in range(steps):
                    k1 = l_matrix @ y
                    k2 = l_matrix @ (y + 0.5 * h * k1)
                    k3 = l_matrix @ (y + 0.5 * h * k2)
                    k4 = l_matrix @ (y + h * k3)
                    y = y + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
            t_now = t
            out[n] = unvec(y, d)
        return out
    raise TypeError(f"unknown propagation method {method!r}")


def cross_check_evolution(l_matrix, rho0, times, dt: float, tol: float = 1e-6) -> float:
    """Maximum entrywise disagreement between eigen and RK4 propagation.

    A disagreement above ``tol`` is logged as a warning with the offending time.
    """
    a = evolve_density_matrix(l_matrix, rho0, times, EigenPropagation())
    b = evolve_density_matrix(l_matrix, rho0, times, Rk4(dt))
    err = np.abs(a - b).max(axis=(1, 2))
    worst = float(err.max()) if len(err) else 0.0
    if worst > tol:
        log.warning(
            "propagators disagree: max deviation %.3e at t=%.6g", worst, times[int(err.argmax())]
        )
    return worst


@dataclass(frozen=True, eq=False)
class DressedSystem:
    """Everything needed for dressed-basis Lindblad runs of one parameter point."""

    params: GrParams
    trunc: Truncation
    rates: LindbladRates
    spectrum: Spectrum
    pieces: DissipatorPieces
    l_matrix: np.ndarray

    @property
    def basis(self) -> np.ndarray:
        return self.spectrum.eigenvectors[:, : self.pieces.dim]

    def to_dressed(self, op_bare: np.ndarray) -> np.ndarray:
        v = self.basis
        return v.conj().T @ np.asarray(op_bare) @ v

    def bare_state(self, psi_bare) -> np.ndarray:
        """Dressed density matrix of a bare-basis pure state."""
        psi = np.asarray(psi_bare, dtype=complex)
        psi = psi / np.linalg.norm(psi)
        rho = self.to_dressed(np.outer(psi, psi.conj()))
        lost = 1 - np.trace(rho).real
        if lost > 1e-8:
            raise ValueError(f"state has weight {lost:.2e} outside the retained dressed levels")
        return rho

    def observables(self) -> dict:
        ops = boson_spin_operators(self.trunc)
        return {
            "mean_photon": self.to_dressed(ops.n.entries),
            "inversion": self.to_dressed(ops.sz.entries),
        }


def build_dressed_system(p: GrParams, trunc: Truncation, rates: LindbladRates) -> DressedSystem:
    """Parity-resolved spectrum, dissipator pieces and Liouvillian for one model."""
    s = eigen_spectrum(
        build_gr_hamiltonian(p, trunc), parity_operator(trunc), tie_tol=1e-8 * p.omega
    )
    pieces = build_dressed_dissipator(s, rates, p, trunc)
    return DressedSystem(p, trunc, rates, s, pieces, build_liouvillian(pieces.energies, pieces))


@dataclass(frozen=True, eq=False)
class DecayFit:
    kappa: float
    residual: float
    times: np.ndarray
    i2: np.ndarray
    i2_inf: float
    window: tuple = field(default=(0.0, 0.0))


def decay_rate_fit(
    l_offsusy,
    rho0,
    cq: ConservedQuantitySet,
    t_grid: Sequence[float],
    baseline: str = "stationary",
    skip_fraction: float = 0.25,
    window_floor: float = 1e-3,
) -> DecayFit:
    """Exponential decay rate of ``I_2(t) = Tr[rho_bar_diff^dag rho(t)]``.

    Fits ``log|I_2(t) - I_2(inf)|`` to ``-kappa t + c`` where the deviation
    exceeds ``window_floor`` times its initial value, after discarding the
    first ``skip_fraction`` of the grid. ``baseline="stationary"`` takes
    ``I_2(inf)`` from the off-line stationary state; ``baseline="zero"``
    fits ``log|I_2|`` directly. A quantity that does not move returns
    ``kappa = 0``.
    """
    t = np.asarray(t_grid, dtype=float)
    l_offsusy = np.asarray(l_offsusy)
    decomp = decompose_liouvillian(l_offsusy)
    traj = evolve_density_matrix(l_offsusy, rho0, t, decomp=decomp)
    diff = cq["diff"]
    i2 = np.real(np.einsum("ij,tij->t", diff.conj(), traj))
    if abs(i2[0]) < 1e-12:
        raise ValueError("I_2(0) vanishes; the initial state carries no information")
    if baseline == "stationary":
        i2_inf = float(np.real(np.trace(diff.conj().T @ project_stationary(decomp, rho0))))
    elif baseline == "zero":
        i2_inf = 0.0
    else:
        raise ValueError(f"unknown baseline {baseline!r}")
    dev = np.abs(i2 - i2_inf)
    if dev.max() < 1e-10 * max(1.0, abs(i2[0])):
        return DecayFit(0.0, 0.0, t, i2, i2_inf)
    start = int(skip_fraction * len(t))
    sel = np.arange(len(t)) >= start
    sel &= dev > window_floor * dev[0] if dev[0] > 0 else dev > 0
    if sel.sum() < 3:
        raise ValueError("fewer than three points in the fit window; extend or refine t_grid")
    coef, res, *_ = np.polyfit(t[sel], np.log(dev[sel]), 1, full=True)
    rms = float(np.sqrt(res[0] / sel.sum())) if len(res) else 0.0
    return DecayFit(float(-coef[0]), rms, t, i2, i2_inf, (float(t[sel][0]), float(t[sel][-1])))
