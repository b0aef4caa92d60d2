"""Closed-system spectra, coupling sweeps, cavity arrays and quench dynamics."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import eigsh

from .errors import DimensionGuardError, TruncationError
from .model import GrParams, boson_spin_operators, build_gr_hamiltonian, parity_operator, susy_residual
from .operators import OperatorMatrix, Truncation

MAX_LATTICE_DIM = 20_000
# dense diagonalization below this size, Lanczos above
DENSE_LATTICE_DIM = 2_500


@dataclass(frozen=True, eq=False)
class Spectrum:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    trunc: Truncation | None = None
    parity_labels: np.ndarray | None = None

    def __len__(self):
        return len(self.eigenvalues)


def _as_array(h) -> np.ndarray:
    return h.entries if isinstance(h, OperatorMatrix) else np.asarray(h, dtype=complex)


def eigen_spectrum(h, parity=None, tie_tol: float | None = None) -> Spectrum:
    """Dense Hermitian eigendecomposition, ascending.

    If ``parity`` is given, eigenvectors inside every degenerate cluster
    (consecutive gaps below ``tie_tol``, default ``1e-9`` times the spectral
    span) are rotated onto parity eigenstates, and each state gets a parity
    label, ordered +1 before -1 inside a cluster.
    """
    m = _as_array(h)
    scale = max(1.0, float(np.abs(m).max()))
    if np.abs(m - m.conj().T).max() > 1e-10 * scale:
        raise ValueError("Hamiltonian is not Hermitian")
    w, v = np.linalg.eigh(m)
    trunc = h.trunc if isinstance(h, OperatorMatrix) else None
    if parity is None:
        return Spectrum(w, v, trunc)

    par = _as_array(parity)
    if tie_tol is None:
        tie_tol = 1e-9 * max(w[-1] - w[0], 1e-300)
    v = v.copy()
    start = 0
    for stop in range(1, len(w) + 1):
        if stop < len(w) and w[stop] - w[stop - 1] < tie_tol:
            continue
        if stop - start > 1:
            sub = v[:, start:stop]
            pw, pv = np.linalg.eigh(sub.conj().T @ par @ sub)
            v[:, start:stop] = sub @ pv[:, ::-1]
        start = stop
    labels = np.sign(np.real(np.einsum("ij,ik,kj->j", v.conj(), par, v))).astype(int)
    return Spectrum(w, v, trunc, labels)


def degeneracy_gap(s: Spectrum | np.ndarray) -> float:
    """E_2 - E_1 of the two lowest levels."""
    e = s.eigenvalues if isinstance(s, Spectrum) else np.sort(np.asarray(s))
    if len(e) < 2:
        raise ValueError("need at least two eigenvalues")
    return float(e[1] - e[0])


def gr_spectrum(p: GrParams, trunc: Truncation, with_parity: bool = True) -> Spectrum:
    h = build_gr_hamiltonian(p, trunc)
    return eigen_spectrum(h, parity_operator(trunc) if with_parity else None)


def _parallel_map(fn, items, n_jobs: int):
    # Each task is independent and deterministic, so results do not depend on n_jobs.
    if n_jobs <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n_jobs) as pool:
        return list(pool.map(fn, items))


def sweep_parameter(
    base: GrParams,
    name: str,
    values: Sequence[float],
    trunc: Truncation,
    k_levels: int,
    n_jobs: int = 1,
) -> list[dict]:
    """Lowest ``k_levels`` energies and the ground gap along a sweep of one GrParams field.

    Each row carries ``susy_crossing=True`` when the SUSY residual vanishes or
    changes sign relative to the previous row. Rows come back in input order
    and are identical for any ``n_jobs``.
    """
    if name not in base.to_dict():
        raise ValueError(f"unknown sweep parameter {name!r}")
    if not 1 <= k_levels <= 2 * trunc.n_max:
        raise ValueError("k_levels must lie between 1 and the Hilbert dimension")

    def one(value):
        p = base.replace(**{name: float(value)})
        e = np.linalg.eigvalsh(build_gr_hamiltonian(p, trunc).entries)
        row = {name: float(value)}
        row.update({f"E_{i}": float(e[i]) for i in range(k_levels)})
        row["delta21"] = float(e[1] - e[0])
        row["susy_residual"] = float(susy_residual(p, "kernel"))
        return row

    rows = _parallel_map(one, list(values), n_jobs)
    prev = 0.0
    for row in rows:
        r = row["susy_residual"]
        row["susy_crossing"] = bool(r == 0.0 or prev * r < 0)
        prev = r
    return rows


def sweep_coupling(
    base: GrParams, g1_values: Sequence[float], trunc: Truncation, k_levels: int, n_jobs: int = 1
) -> list[dict]:
    return sweep_parameter(base, "g1", g1_values, trunc, k_levels, n_jobs)


@dataclass(frozen=True)
class LatticeSpec:
    """Open chain of generalized Rabi cavities coupled by photon hopping."""

    site_params: tuple
    hopping_j: float
    n_max_site: int
    boundary: str = "open"

    def __post_init__(self):
        object.__setattr__(self, "site_params", tuple(self.site_params))
        if not 1 <= len(self.site_params) <= 3:
            raise ValueError("lattice supports 1 to 3 sites")
        if self.n_max_site < 2:
            raise ValueError("n_max_site must be >= 2")
        if self.boundary != "open":
            raise ValueError("only open boundaries are supported")

    @property
    def n_sites(self) -> int:
        return len(self.site_params)

    @property
    def dim(self) -> int:
        return (2 * self.n_max_site) ** self.n_sites


def build_cavity_array(spec: LatticeSpec) -> sp.csr_matrix:
    """Sparse ``sum_i H_gR^(i) - J sum_i (a_i^dag a_{i+1} + h.c.)``.

    Site ``0`` is the outermost tensor factor; within a site the boson-spin
    ordering of :mod:`susyrabi.operators` applies.
    """
    if spec.dim > MAX_LATTICE_DIM:
        raise DimensionGuardError(
            f"lattice dimension {spec.dim} exceeds {MAX_LATTICE_DIM}; lower n_max_site"
        )
    trunc = Truncation(spec.n_max_site)
    d = 2 * spec.n_max_site
    ident = sp.identity(d, format="csr")
    a_site = sp.csr_matrix(boson_spin_operators(trunc).a.entries.real)

    def embed(op, i):
        out = sp.identity(1, format="csr")
        for j in range(spec.n_sites):
            out = sp.kron(out, op if j == i else ident, format="csr")
        return out

    h = sp.csr_matrix((spec.dim, spec.dim), dtype=complex)
    for i, p in enumerate(spec.site_params):
        h = h + embed(sp.csr_matrix(build_gr_hamiltonian(p, trunc).entries), i)
    for i in range(spec.n_sites - 1):
        hop = embed(a_site, i).T @ embed(a_site, i + 1)
        h = h - spec.hopping_j * (hop + hop.T)
    return h.tocsr()


def lattice_levels(spec: LatticeSpec, k: int = 4) -> np.ndarray:
    """Lowest ``k`` eigenvalues of the cavity array, ascending."""
    h = build_cavity_array(spec)
    k = min(k, spec.dim)
    if spec.dim <= DENSE_LATTICE_DIM or k >= spec.dim - 1:
        return np.linalg.eigvalsh(h.toarray())[:k]
    # Fixed start vector keeps the result reproducible. A coarse Lanczos pass
    # locates the bottom of the spectrum; shift-invert just below it resolves
    # the (near-)degenerate ground cluster reliably.
    v0 = np.ones(spec.dim) / np.sqrt(spec.dim)
    e0 = eigsh(h, k=1, which="SA", tol=1e-6, v0=v0, return_eigenvectors=False)[0]
    sigma = e0 - 0.05 * (1.0 + abs(e0))
    w = eigsh(h, k=k, sigma=sigma, which="LM", v0=v0, return_eigenvectors=False)
    return np.sort(w)


def sweep_hopping(
    site_params: Sequence[GrParams],
    j_values: Sequence[float],
    n_max_site: int,
    k_levels: int = 3,
    n_jobs: int = 1,
) -> list[dict]:
    def one(j):
        spec = LatticeSpec(tuple(site_params), float(j), n_max_site)
        e = lattice_levels(spec, max(k_levels, 2))
        row = {"J": float(j)}
        row.update({f"E_{i}": float(e[i]) for i in range(k_levels)})
        row["delta21"] = float(e[1] - e[0])
        return row

    return _parallel_map(one, list(j_values), n_jobs)


@dataclass(frozen=True)
class CoherentUp:
    alpha: complex


@dataclass(frozen=True)
class FockUp:
    n: int


@dataclass(frozen=True, eq=False)
class QuenchResult:
    times: np.ndarray
    mean_photon: np.ndarray
    inversion: np.ndarray
    envelope: np.ndarray
    collapse_estimate: float
    revival_estimate: float
    norm_error: float
    energy_error: float
    extra: dict = field(default_factory=dict)


def coherent_amplitudes(alpha: complex, n_max: int) -> np.ndarray:
    c = np.empty(n_max, dtype=complex)
    c[0] = np.exp(-abs(alpha) ** 2 / 2)
    for n in range(1, n_max):
        c[n] = c[n - 1] * alpha / np.sqrt(n)
    return c


def initial_boson_spin_state(initial, trunc: Truncation) -> np.ndarray:
    """Spin-up product state for a coherent or Fock boson state."""
    if isinstance(initial, CoherentUp):
        boson = coherent_amplitudes(initial.alpha, trunc.n_max)
        tail = float(np.sum(np.abs(boson[trunc.n_interior :]) ** 2))
        if tail > 1e-10:
            raise TruncationError(
                f"coherent amplitude {initial.alpha} leaves weight {tail:.2e} above the interior; "
                "increase n_max"
            )
    elif isinstance(initial, FockUp):
        if not 0 <= initial.n < trunc.n_interior:
            raise TruncationError(f"Fock state {initial.n} outside the interior truncation")
        boson = np.zeros(trunc.n_max, dtype=complex)
        boson[initial.n] = 1.0
    else:
        raise TypeError(f"unsupported initial state {initial!r}")
    boson = boson / np.linalg.norm(boson)
    return np.concatenate([boson, np.zeros(trunc.n_max, dtype=complex)])


def jc_timescales(p: GrParams, nbar: float) -> tuple[float, float, float]:
    """Mean Rabi frequency, collapse time and revival time for a coherent field.

    The detuning in the Rabi frequency is ``delta - omega``.
    """
    det = p.delta - p.omega
    g = p.g1
    rabi = np.sqrt(g**2 * nbar + det**2 / 4)
    return float(rabi), float(rabi / (g**2 * np.sqrt(nbar))), float(2 * np.pi * rabi / g**2)


def _crossing_time(t, y, level) -> float:
    below = np.nonzero(y <= level)[0]
    if not len(below):
        return float("nan")
    i = below[0]
    if i == 0:
        return float(t[0])
    t0, t1, y0, y1 = t[i - 1], t[i], y[i - 1], y[i]
    return float(t0 + (level - y0) * (t1 - t0) / (y1 - y0))


def envelope_timescales(t: np.ndarray, env: np.ndarray) -> tuple[float, float]:
    """Collapse and revival times from an oscillation envelope.

    Collapse: first time the envelope falls to ``exp(-1/2)`` of its initial
    value. Revival: first local maximum, after the envelope has dropped
    below a quarter of its initial value, that reaches at least half of the
    largest later envelope value.
    """
    if env[0] <= 0:
        return float("nan"), float("nan")
    collapse = _crossing_time(t, env, np.exp(-0.5) * env[0])
    quiet = np.nonzero(env <= 0.25 * env[0])[0]
    if not len(quiet):
        return collapse, float("nan")
    late = env[quiet[0] :]
    threshold = 0.5 * late.max()
    for i in range(1, len(late) - 1):
        if late[i] >= threshold and late[i] >= late[i - 1] and late[i] >= late[i + 1]:
            return collapse, float(t[quiet[0] + i])
    return collapse, float("nan")


def quench_evolution(
    p: GrParams, initial, times: Sequence[float], trunc: Truncation
) -> QuenchResult:
    """Unitary evolution from a spin-up product state.

    Records ``<a^dag a>`` and ``<sigma_z>``; the inversion envelope is the
    modulus of its analytic signal, built exactly from the positive-frequency
    part of the spectral representation.
    """
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or np.any(np.diff(times) <= 0):
        raise ValueError("times must be strictly increasing")
    psi0 = initial_boson_spin_state(initial, trunc)
    h = build_gr_hamiltonian(p, trunc).entries
    e, v = np.linalg.eigh(h)
    ops = boson_spin_operators(trunc)
    c = v.conj().T @ psi0
    n_d = v.conj().T @ ops.n.entries @ v
    sz_d = v.conj().T @ ops.sz.entries @ v

    phases = np.exp(-1j * np.outer(e, times)) * c[:, None]
    mean_photon = np.real(np.einsum("jt,jk,kt->t", phases.conj(), n_d, phases))
    inversion = np.real(np.einsum("jt,jk,kt->t", phases.conj(), sz_d, phases))
    norms = np.linalg.norm(phases, axis=0)
    energy = np.real(np.einsum("jt,j,jt->t", phases.conj(), e, phases))

    amp = np.conj(c)[:, None] * c[None, :] * sz_d
    freq = e[:, None] - e[None, :]
    mask = (freq > 1e-12 * max(1.0, e[-1] - e[0])) & (np.abs(amp) > 1e-15)
    a_k, f_k = amp[mask], freq[mask]
    env = np.empty(len(times))
    for start in range(0, len(times), 256):
        chunk = times[start : start + 256]
        env[start : start + 256] = np.abs(2 * np.exp(1j * np.outer(chunk, f_k)) @ a_k)
    collapse, revival = envelope_timescales(times, env)
    return QuenchResult(
        times=times,
        mean_photon=mean_photon,
        inversion=inversion,
        envelope=env,
        collapse_estimate=collapse,
        revival_estimate=revival,
        norm_error=float(np.max(np.abs(norms - 1))),
        energy_error=float(np.max(np.abs(energy - energy[0]))),
    )
