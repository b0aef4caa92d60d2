"""Generalized Rabi Hamiltonian, parity, SUSY-line evaluators and parameter maps."""

from __future__ import annotations

from dataclasses import asdict, dataclass
from types import SimpleNamespace

import numpy as np

from .operators import (
    OperatorMatrix,
    SpaceTag,
    SpinLabel,
    Truncation,
    annihilation_matrix,
    boson_identity,
    spin_matrix,
    tensor_boson_spin,
)


@dataclass(frozen=True)
class GrParams:
    """Generalized Rabi model parameters (hbar = 1).

    ``lam`` is the Bloch-Siegert coefficient multiplying ``a^dag a sigma_z``.
    """

    omega: float
    delta: float
    g1: float
    g2: float
    lam: float = 0.0

    def __post_init__(self):
        for name in ("omega", "delta", "g1", "g2", "lam"):
            value = getattr(self, name)
            if not np.isfinite(value):
                raise ValueError(f"{name} must be finite, got {value}")
            object.__setattr__(self, name, float(value))
        if self.omega <= 0:
            raise ValueError(f"omega must be positive, got {self.omega}")
        if abs(self.lam) >= self.omega:
            raise ValueError(f"|lam| must be below omega, got lam={self.lam}")

    def replace(self, **changes) -> "GrParams":
        return GrParams(**{**asdict(self), **changes})

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class RdParams:
    """2D electron gas with Rashba/Dresselhaus coupling in a perpendicular field."""

    b0: float
    m_eff: float
    g_factor: float
    alpha_r: float
    alpha_d: float
    e_charge: float = 1.0
    c_light: float = 1.0
    m_bare: float = 1.0

    def __post_init__(self):
        for name in ("b0", "m_eff", "e_charge", "c_light", "m_bare"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")


@dataclass(frozen=True)
class LambdaSchemeParams:
    """Three-level Lambda scheme: bare cavity couplings, classical drives, detunings."""

    gt1: float
    gt2: float
    om1: complex
    om2: complex
    det1: float
    det2: float

    def __post_init__(self):
        if self.det1 == 0 or self.det2 == 0:
            raise ValueError("detunings must be non-zero")


def boson_spin_operators(trunc: Truncation) -> SimpleNamespace:
    """Building blocks on the joint space: a, a^dag, a^dag a, sigma_+, sigma_-, sigma_z."""
    a = annihilation_matrix(trunc)
    eye_b = boson_identity(trunc)
    ident = spin_matrix(SpinLabel.IDENTITY)
    big_a = tensor_boson_spin(a, ident)
    return SimpleNamespace(
        a=big_a,
        ad=big_a.dag(),
        n=tensor_boson_spin(a.dag() @ a, ident),
        sp=tensor_boson_spin(eye_b, spin_matrix(SpinLabel.SIGMA_PLUS)),
        sm=tensor_boson_spin(eye_b, spin_matrix(SpinLabel.SIGMA_MINUS)),
        sz=tensor_boson_spin(eye_b, spin_matrix(SpinLabel.SIGMA_Z)),
        eye=tensor_boson_spin(eye_b, ident),
    )


def build_gr_hamiltonian(p: GrParams, trunc: Truncation) -> OperatorMatrix:
    """Generalized Rabi Hamiltonian with optional Bloch-Siegert term.

    H = w a^dag a + (D/2) sz + g1 (a^dag s- + a s+) + g2 (a^dag s+ + a s-)
        + lam a^dag a sz
    """
    op = boson_spin_operators(trunc)
    co = op.ad @ op.sm
    counter = op.ad @ op.sp
    h = (
        p.omega * op.n
        + (p.delta / 2.0) * op.sz
        + p.g1 * (co + co.dag())
        + p.g2 * (counter + counter.dag())
        + p.lam * (op.n @ op.sz)
    )
    return h


def parity_operator(trunc: Truncation) -> OperatorMatrix:
    """Real parity ``exp(i pi a^dag a) (x) sigma_z``; squares to the identity."""
    boson = np.diag((-1.0) ** np.arange(trunc.n_max))
    return OperatorMatrix(np.kron(np.diag([1.0, -1.0]), boson), trunc, SpaceTag.BOSON_SPIN)


def susy_residual(p: GrParams, form: str = "main") -> float:
    """Distance from the SUSY line; zero on the line.

    Parameters
    ----------
    form : {"main", "reversed", "kernel"}
        ``"main"``: ``g1^2 - g2^2 - D w`` at ``lam = 0`` and, for ``lam != 0``,
        ``2(D-lam)(w-lam)(w+lam) - [g1^2 (w-lam) - g2^2 (w+lam)]``.
        ``"reversed"``: the opposite orientation ``g2^2 - g1^2 - D w``
        (``lam = 0`` only).
        ``"kernel"``: ``[g1^2 (w+lam) - g2^2 (w-lam)]/w - D (w^2-lam^2)/w``,
        the condition under which the partner block containing ``H_gR`` has a
        two-dimensional kernel. Coincides with ``"main"`` at ``lam = 0``.
    """
    w, d, g1, g2, lam = p.omega, p.delta, p.g1, p.g2, p.lam
    if form == "main":
        if lam == 0.0:
            return g1**2 - g2**2 - d * w
        return 2 * (d - lam) * (w - lam) * (w + lam) - (g1**2 * (w - lam) - g2**2 * (w + lam))
    if form == "reversed":
        if lam != 0.0:
            raise ValueError("reversed orientation is only defined for lam = 0")
        return g2**2 - g1**2 - d * w
    if form == "kernel":
        return (g1**2 * (w + lam) - g2**2 * (w - lam)) / w - d * (w * w - lam * lam) / w
    raise ValueError(f"unknown form {form!r}")


def susy_line_delta(omega: float, g1: float, g2: float, lam: float = 0.0) -> float:
    """Two-level splitting that puts (omega, g1, g2, lam) on the SUSY line."""
    return g1**2 / (omega - lam) - g2**2 / (omega + lam)


def em_dual_form(p: GrParams) -> tuple[float, float, float]:
    """Electric/magnetic couplings ``(g1 + g2, g1 - g2)`` and ``W_E W_B - w D``."""
    if p.lam != 0.0:
        raise ValueError("electric-magnetic form requires lam = 0")
    omega_e = p.g1 + p.g2
    omega_b = p.g1 - p.g2
    return omega_e, omega_b, omega_e * omega_b - p.omega * p.delta


def rd_to_gr(rd: RdParams) -> GrParams:
    """Map the Rashba-Dresselhaus Landau problem onto generalized Rabi parameters."""
    omega_c = rd.e_charge * rd.b0 / (rd.m_eff * rd.c_light)
    scale = np.sqrt(rd.e_charge * rd.b0) / np.sqrt(rd.c_light)
    kappa_r = rd.alpha_r * scale
    kappa_d = rd.alpha_d * scale
    gyro = rd.g_factor * rd.m_eff / (2.0 * rd.m_bare)
    return GrParams(
        omega=omega_c,
        delta=gyro * omega_c,
        g1=2.0 * np.sqrt(2.0) * kappa_r * omega_c,
        g2=2.0 * np.sqrt(2.0) * kappa_d * omega_c,
        lam=0.0,
    )


def lambda_scheme_to_gr(
    ls: LambdaSchemeParams, variant: str = "main"
) -> tuple[GrParams, bool]:
    """Effective generalized Rabi parameters after adiabatic elimination.

    ``variant="supplement"`` drops the factor 1/2 in the effective couplings.
    Complex drive phases are gauged away, so couplings are reported by modulus
    unless both drives are real.

    Returns
    -------
    params, bloch_siegert_cancelled
    """
    if variant not in ("main", "supplement"):
        raise ValueError(f"unknown variant {variant!r}")
    denom = 2.0 if variant == "main" else 1.0
    c1 = ls.gt1 * np.conj(ls.om1) / (denom * ls.det1)
    c2 = ls.gt2 * np.conj(ls.om2) / (denom * ls.det2)
    if np.iscomplexobj(c1) and (np.imag(c1) != 0 or np.imag(c2) != 0):
        g1, g2 = abs(c1), abs(c2)
    else:
        g1, g2 = float(np.real(c1)), float(np.real(c2))
    omega = (ls.gt1**2 / ls.det1 + ls.gt2**2 / ls.det2) / 2.0
    delta = abs(ls.om1) ** 2 / ls.det1 - abs(ls.om2) ** 2 / ls.det2
    shift1, shift2 = g1**2 / ls.det1, g2**2 / ls.det2
    lam = shift1 - shift2
    cancelled = abs(lam) <= 1e-12 * max(abs(shift1), abs(shift2))
    if cancelled:
        lam = 0.0
    return GrParams(omega=omega, delta=delta, g1=g1, g2=g2, lam=lam), bool(cancelled)
