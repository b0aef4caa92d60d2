"""Supercharges, partner Hamiltonians, zero modes and the Witten index.

Layout
------
All supercharges are stored in nilpotent form ``Q = [[0, q], [0, 0]]`` on a
space of dimension ``4 * n_max`` (two copies of the boson-spin space), so
``Q @ Q == 0`` holds exactly and ``{Q, Q^dag} = diag(q q^dag, q^dag q)``.
For the non-RWA families ``q^dag q`` is the physical Hamiltonian up to an
additive constant (``Supercharge.kernel_shift``) and carries the two zero
modes, so it is the ``H_-`` block; ``q q^dag`` is ``H_+`` and its constant is
``Supercharge.shift_c = omega + kernel_shift``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import subspace_angles

from .errors import KernelGapError, OffSusyLineError
from .model import GrParams, build_gr_hamiltonian, parity_operator, susy_residual
from .operators import (
    OperatorMatrix,
    SpaceTag,
    Truncation,
    annihilation_matrix,
    displacement_matrix,
    interior_indices,
)

SUSY_LINE_TOL = 1e-10


class Family(enum.Enum):
    NON_RWA_MAIN_TEXT = "non_rwa_main_text"
    NON_RWA_LAMBDA = "non_rwa_lambda"
    RWA = "rwa"


@dataclass(frozen=True, eq=False)
class Supercharge:
    q_block: OperatorMatrix
    family: Family
    shift_c: float
    kernel_shift: float
    trunc: Truncation
    coefficients: dict = field(default_factory=dict)

    @property
    def matrix(self) -> OperatorMatrix:
        """Full nilpotent supercharge ``[[0, q], [0, 0]]``."""
        n = self.q_block.dim
        full = np.zeros((2 * n, 2 * n), dtype=complex)
        full[:n, n:] = self.q_block.entries
        return OperatorMatrix(full, self.trunc, SpaceTag.TWO_BLOCK4)

    def anticommutator(self) -> OperatorMatrix:
        q = self.matrix
        qd = q.dag()
        return q @ qd + qd @ q

    def partner_blocks(self) -> tuple[OperatorMatrix, OperatorMatrix]:
        """``(q q^dag, q^dag q)``: the upper and lower diagonal blocks of ``{Q, Q^dag}``."""
        q = self.q_block
        return q @ q.dag(), q.dag() @ q


def _check_on_line(p: GrParams, tol: float = SUSY_LINE_TOL):
    r = susy_residual(p, form="kernel")
    scale = max(1.0, p.g1**2, p.g2**2, abs(p.delta * p.omega))
    if abs(r) > tol * scale:
        raise OffSusyLineError(f"parameters are off the SUSY line (residual {r:.3e})")


def _two_block_q(trunc, d_up, c_up, c_dn, d_dn) -> OperatorMatrix:
    """q = [[d_up, c_up a], [c_dn a, d_dn]] on the boson-spin space."""
    a = annihilation_matrix(trunc).entries
    eye = np.eye(trunc.n_max)
    q = np.block([[d_up * eye, c_up * a], [c_dn * a, d_dn * eye]])
    return OperatorMatrix(q, trunc, SpaceTag.BOSON_SPIN)


def build_supercharge(
    p: GrParams, trunc: Truncation, family: Family | str | None = None
) -> Supercharge:
    """Supercharge whose ``q^dag q`` block equals ``H_gR(p) + kernel_shift``.

    ``family`` defaults to the main-text form at ``lam = 0`` and to the
    Bloch-Siegert form otherwise.
    """
    if family is None:
        family = Family.NON_RWA_MAIN_TEXT if p.lam == 0 else Family.NON_RWA_LAMBDA
    family = Family(family)
    if family is Family.RWA:
        raise ValueError("use build_rwa_supercharge for the RWA family")
    _check_on_line(p)
    w, lam = p.omega, p.lam
    if family is Family.NON_RWA_MAIN_TEXT:
        if lam != 0:
            raise ValueError("main-text supercharge requires lam = 0")
        sw = np.sqrt(w)
        q = _two_block_q(trunc, p.g1 / sw, sw, sw, p.g2 / sw)
        kernel_shift = (p.g1**2 + p.g2**2) / (2 * w)
        coeffs = {"d_up": p.g1 / sw, "c_up": sw, "c_dn": sw, "d_dn": p.g2 / sw}
    else:
        wm, wp = np.sqrt(w - lam), np.sqrt(w + lam)
        q = _two_block_q(trunc, p.g1 / wm, wm, wp, p.g2 / wp)
        kernel_shift = (p.g1**2 / (w - lam) + p.g2**2 / (w + lam)) / 2
        coeffs = {"d_up": p.g1 / wm, "c_up": wm, "c_dn": wp, "d_dn": p.g2 / wp}
    return Supercharge(
        q_block=q,
        family=family,
        shift_c=w + kernel_shift,
        kernel_shift=kernel_shift,
        trunc=trunc,
        coefficients=coeffs,
    )


def build_rwa_supercharge(omega: float, delta: float, g: float, trunc: Truncation) -> Supercharge:
    """Jaynes-Cummings supercharge ``q = [[alpha, gamma a], [beta a^dag, delta_c]]``.

    ``delta`` is the two-level splitting of ``H_gR``, so the detuning entering
    the coefficients is ``d = delta - omega``. Both partner blocks equal the JC
    Hamiltonian plus ``c = (alpha^2 + omega + delta_c^2) / 2``.
    """
    if g == 0:
        raise ValueError("RWA supercharge needs g != 0")
    if omega <= 0:
        raise ValueError("omega must be positive")
    sw = np.sqrt(omega)
    d = delta - omega
    alpha = (g / sw + d * sw / g) / 2
    delta_c = (g / sw - d * sw / g) / 2
    a = annihilation_matrix(trunc).entries
    eye = np.eye(trunc.n_max)
    q = np.block([[alpha * eye, sw * a], [sw * a.conj().T, delta_c * eye]])
    c = (alpha**2 + omega + delta_c**2) / 2
    return Supercharge(
        q_block=OperatorMatrix(q, trunc, SpaceTag.BOSON_SPIN),
        family=Family.RWA,
        shift_c=c,
        kernel_shift=c,
        trunc=trunc,
        coefficients={"alpha": alpha, "beta": sw, "gamma": sw, "delta": delta_c, "detuning": d},
    )


def rwa_zero_mode_number(omega: float, delta: float, g: float) -> tuple[float, bool]:
    """``alpha delta / gamma^2 = [(g/w)^2 - (d/g)^2] / 4`` and whether it is a non-negative integer."""
    d = delta - omega
    n = ((g / omega) ** 2 - (d / g) ** 2) / 4
    is_int = n > -1e-9 and abs(n - round(n)) < 1e-9
    return n, bool(is_int)


@dataclass(frozen=True)
class IsospectralReport:
    max_pair_gap: float
    n_unpaired: int
    n_compared: int
    minus_low: np.ndarray
    plus_low: np.ndarray


@dataclass(frozen=True)
class SusyAlgebraReport:
    residual_partner: float
    shift_used: float
    minus_block: str
    residual_plus_shift: float
    nilpotency: float
    isospectral: IsospectralReport


def _interior_eigs(block: OperatorMatrix) -> np.ndarray:
    return np.linalg.eigvalsh(block.interior())


def _count_zero(eigs: np.ndarray, tol: float) -> int:
    return int(np.sum(np.abs(eigs) < tol))


def verify_susy_algebra(
    sc: Supercharge, p: GrParams, trunc: Truncation, n_compare: int = 10
) -> SusyAlgebraReport:
    """Check ``{Q, Q^dag} = diag(H_+, H_-)`` against the physical Hamiltonian.

    The block with the larger numerical kernel is identified as ``H_-``.
    ``residual_partner`` is the interior norm of ``H_- - H_gR - kernel_shift``;
    ``residual_plus_shift`` is the same quantity with ``shift_c`` in place of
    ``kernel_shift``.
    """
    if sc.trunc.n_max != trunc.n_max:
        raise ValueError("supercharge and truncation disagree")
    upper, lower = sc.partner_blocks()
    e_up, e_lo = _interior_eigs(upper), _interior_eigs(lower)
    tol = 1e-8 * max(1.0, np.abs(e_up).max(), np.abs(e_lo).max())
    if _count_zero(e_lo, tol) >= _count_zero(e_up, tol):
        minus, e_minus, e_plus, label = lower, e_lo, e_up, "lower"
    else:
        minus, e_minus, e_plus, label = upper, e_up, e_lo, "upper"
    h = build_gr_hamiltonian(p, trunc)
    eye = np.eye(h.dim)
    diff = minus.entries - h.entries - sc.kernel_shift * eye
    residual = _inorm(diff, trunc)
    residual_c = _inorm(minus.entries - h.entries - sc.shift_c * eye, trunc)
    n_unpaired = _count_zero(e_minus, tol) - _count_zero(e_plus, tol)
    k = min(n_compare, len(e_plus), len(e_minus) - max(n_unpaired, 0))
    minus_low = e_minus[max(n_unpaired, 0) : max(n_unpaired, 0) + k]
    plus_low = e_plus[:k]
    gap = float(np.max(np.abs(minus_low - plus_low))) if k else 0.0
    qm = sc.matrix.entries
    return SusyAlgebraReport(
        residual_partner=residual,
        shift_used=sc.kernel_shift,
        minus_block=label,
        residual_plus_shift=residual_c,
        nilpotency=float(np.abs(qm @ qm).max()),
        isospectral=IsospectralReport(gap, n_unpaired, k, minus_low, plus_low),
    )


def _inorm(m: np.ndarray, trunc: Truncation) -> float:
    idx = interior_indices(SpaceTag.BOSON_SPIN, trunc)
    return float(np.linalg.norm(m[np.ix_(idx, idx)], 2))


@dataclass(frozen=True)
class ZeroModePair:
    """Two normalized kernel vectors of ``q`` with definite parity (+1, -1)."""

    psi_plus: np.ndarray
    psi_minus: np.ndarray
    annihilation_residuals: tuple[float, float]
    parity_eigenvalues: tuple[int, int] = (1, -1)
    amplitude: complex = 0.0
    amplitude_rule: str = ""
    norm_defect: float = 0.0

    def basis(self) -> np.ndarray:
        return np.column_stack([self.psi_plus, self.psi_minus])


def _require_lam_zero_line(p: GrParams):
    if p.lam != 0:
        raise ValueError("zero-mode constructions require lam = 0")
    _check_on_line(p)


def _q_residual(q: OperatorMatrix, psi: np.ndarray) -> float:
    return float(np.linalg.norm(q.entries @ psi) / np.linalg.norm(psi))


def analytic_zero_mode_norms(p: GrParams) -> tuple[float, float]:
    """Infinite-space norms of the unnormalized recurrence solutions (c_0 = 1)."""
    z = abs(p.g1 * p.g2) / p.omega**2
    shc = np.sinh(z) / z if z > 0 else 1.0
    plus = np.cosh(z) + (p.g1 / p.omega) ** 2 * shc
    minus = np.cosh(z) + (p.g2 / p.omega) ** 2 * shc
    return float(np.sqrt(plus)), float(np.sqrt(minus))


def zero_modes_recurrence(p: GrParams, trunc: Truncation) -> ZeroModePair:
    """Kernel of ``q`` from the two-term Fock recurrences.

    ``(g1/w) c_up[n] + sqrt(n+1) c_dn[n+1] = 0`` and
    ``sqrt(n+1) c_up[n+1] + (g2/w) c_dn[n] = 0``; seeding ``c_up[0] = 1`` gives
    the even-parity mode, ``c_dn[0] = 1`` the odd one. Even Fock components
    then follow ``c[2n] = z^n / sqrt((2n)!)`` with ``z = g1 g2 / w^2``.
    """
    _require_lam_zero_line(p)
    n_max = trunc.n_max
    r1, r2 = p.g1 / p.omega, p.g2 / p.omega
    vecs = []
    for seed_up in (True, False):
        up = np.zeros(n_max)
        dn = np.zeros(n_max)
        if seed_up:
            up[0] = 1.0
        else:
            dn[0] = 1.0
        for n in range(n_max - 1):
            s = np.sqrt(n + 1.0)
            dn[n + 1] += -r1 * up[n] / s
            up[n + 1] += -r2 * dn[n] / s
        vecs.append(np.concatenate([up, dn]).astype(complex))
    norms = analytic_zero_mode_norms(p)
    psi_p = vecs[0] / norms[0]
    psi_m = vecs[1] / norms[1]
    defect = max(abs(np.linalg.norm(psi_p) - 1), abs(np.linalg.norm(psi_m) - 1))
    psi_p /= np.linalg.norm(psi_p)
    psi_m /= np.linalg.norm(psi_m)
    q = build_supercharge(p, trunc).q_block
    return ZeroModePair(
        psi_plus=psi_p,
        psi_minus=psi_m,
        annihilation_residuals=(_q_residual(q, psi_p), _q_residual(q, psi_m)),
        amplitude=np.sqrt(complex(p.g1 * p.g2)) / p.omega,
        amplitude_rule="recurrence",
        norm_defect=float(defect),
    )


def displacement_amplitude_candidates(p: GrParams) -> dict[str, complex]:
    return {
        "sqrt_g1g2_over_omega": np.sqrt(complex(p.g1 * p.g2)) / p.omega,
        "g1g2_over_sqrt_omega": complex(p.g1 * p.g2 / np.sqrt(p.omega)),
        "g1g2_over_omega_sq": complex(p.g1 * p.g2 / p.omega**2),
    }


def _cat_states(beta: complex, trunc: Truncation) -> tuple[np.ndarray, np.ndarray]:
    """``[D(b) + D(-b)]|0>/2`` and ``[D(b) - D(-b)]|0>/(2b)`` (the latter -> |1> as b -> 0)."""
    if beta == 0:
        even = np.zeros(trunc.n_max, dtype=complex)
        odd = np.zeros(trunc.n_max, dtype=complex)
        even[0] = 1.0
        odd[1] = 1.0
        return even, odd
    dp = displacement_matrix(beta, trunc).entries[:, 0]
    dm = displacement_matrix(-beta, trunc).entries[:, 0]
    return (dp + dm) / 2, (dp - dm) / (2 * beta)


def _displacement_pair(p: GrParams, trunc: Truncation, beta: complex):
    even, odd = _cat_states(beta, trunc)
    r1, r2 = p.g1 / p.omega, p.g2 / p.omega
    psi_p = np.concatenate([even, -r1 * odd])
    psi_m = np.concatenate([-r2 * odd, even])
    return psi_p / np.linalg.norm(psi_p), psi_m / np.linalg.norm(psi_m)


def zero_modes_displacement(p: GrParams, trunc: Truncation) -> ZeroModePair:
    """Zero modes built from coherent-state superpositions ``[D(b) +/- D(-b)]|0>``.

    The amplitude ``b`` is chosen among the candidate formulas by the smallest
    annihilation residual under ``q``; the winner is recorded.
    """
    _require_lam_zero_line(p)
    q = build_supercharge(p, trunc).q_block
    best = None
    for rule, beta in displacement_amplitude_candidates(p).items():
        psi_p, psi_m = _displacement_pair(p, trunc, beta)
        res = (_q_residual(q, psi_p), _q_residual(q, psi_m))
        if best is None or sum(res) < sum(best[3]):
            best = (rule, beta, (psi_p, psi_m), res)
    rule, beta, (psi_p, psi_m), res = best
    return ZeroModePair(
        psi_plus=psi_p,
        psi_minus=psi_m,
        annihilation_residuals=res,
        amplitude=beta,
        amplitude_rule=rule,
    )


def zero_mode_parities(pair: ZeroModePair, trunc: Truncation) -> tuple[float, float]:
    """Expectation values of parity in each mode (exactly +/-1 for eigenstates)."""
    par = parity_operator(trunc).entries
    return tuple(float(np.real(np.vdot(v, par @ v))) for v in (pair.psi_plus, pair.psi_minus))


def zero_mode_span_angle(a: ZeroModePair, b: ZeroModePair) -> float:
    """Largest principal angle between the spans of two zero-mode pairs."""
    return float(np.max(subspace_angles(a.basis(), b.basis())))


def kernel_dimensions(
    p: GrParams, trunc: Truncation, svd_tol: float | None = None
) -> tuple[int, int]:
    """Numerical ``(dim ker H_-, dim ker H_+)`` on the interior projection."""
    sc = build_supercharge(p, trunc)
    upper, lower = sc.partner_blocks()
    s_lo = np.linalg.svd(lower.interior(), compute_uv=False)
    s_up = np.linalg.svd(upper.interior(), compute_uv=False)
    if svd_tol is None:
        svd_tol = 1e-8 * max(s_lo[0], s_up[0])
    for s in (s_lo, s_up):
        near = (s > svd_tol / 100) & (s < svd_tol * 100)
        if np.any(near):
            raise KernelGapError(
                f"singular values {s[near]} lie within two decades of svd_tol={svd_tol:.2e}"
            )
    dim_lo = int(np.sum(s_lo < svd_tol))
    dim_up = int(np.sum(s_up < svd_tol))
    # H_- is the block carrying the kernel
    return (dim_lo, dim_up) if dim_lo >= dim_up else (dim_up, dim_lo)


def witten_index(p: GrParams, trunc: Truncation, svd_tol: float | None = None) -> int:
    """``dim ker H_- - dim ker H_+``."""
    n_minus, n_plus = kernel_dimensions(p, trunc, svd_tol)
    return n_minus - n_plus


def zero_mode_operator_residual(p: GrParams, trunc: Truncation, psi: np.ndarray) -> float:
    """``|| (H_gR + kernel_shift) psi ||`` for a candidate zero mode."""
    sc = build_supercharge(p, trunc)
    h = build_gr_hamiltonian(p, trunc).entries + sc.kernel_shift * np.eye(2 * trunc.n_max)
    return float(np.linalg.norm(h @ psi))


__all__ = [
    "Family",
    "Supercharge",
    "SusyAlgebraReport",
    "IsospectralReport",
    "ZeroModePair",
    "build_supercharge",
    "build_rwa_supercharge",
    "rwa_zero_mode_number",
    "verify_susy_algebra",
    "zero_modes_recurrence",
    "zero_modes_displacement",
    "displacement_amplitude_candidates",
    "analytic_zero_mode_norms",
    "zero_mode_parities",
    "zero_mode_span_angle",
    "kernel_dimensions",
    "witten_index",
    "zero_mode_operator_residual",
]
