import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_allclose

from susyrabi.model import (
    GrParams,
    LambdaSchemeParams,
    RdParams,
    build_gr_hamiltonian,
    em_dual_form,
    lambda_scheme_to_gr,
    parity_operator,
    rd_to_gr,
    susy_line_delta,
    susy_residual,
)
from susyrabi.operators import Truncation

coupling = st.floats(-2.0, 2.0, allow_nan=False)


@st.composite
def gr_params(draw):
    omega = draw(st.floats(0.2, 3.0))
    return GrParams(
        omega,
        draw(st.floats(-3.0, 3.0)),
        draw(coupling),
        draw(coupling),
        draw(st.floats(-0.9, 0.9)) * omega,
    )


@given(gr_params())
@settings(max_examples=40, deadline=None)
def test_hamiltonian_hermitian_and_parity_symmetric(p):
    t = Truncation(12)
    h = build_gr_hamiltonian(p, t).entries
    par = parity_operator(t).entries
    assert_allclose(h, h.conj().T, atol=1e-12)
    assert np.abs(h @ par - par @ h).max() < 1e-12


def test_parity_is_an_involution():
    par = parity_operator(Truncation(7)).entries
    assert_allclose(par @ par, np.eye(14))
    assert np.isrealobj(par.real) and np.abs(par.imag).max() == 0


def jc_levels(omega, delta, g, n_max):
    """Closed-form Jaynes-Cummings spectrum (g2 = lam = 0)."""
    levels = [-delta / 2]
    for n in range(n_max - 1):
        mid = omega * (n + 0.5)
        split = np.sqrt((delta - omega) ** 2 / 4 + g**2 * (n + 1))
        levels += [mid - split, mid + split]
    return np.sort(levels)


@pytest.mark.parametrize("omega,delta,g", [(1.0, 1.0, 0.1), (1.0, 1.7, 0.4), (2.0, 0.5, 1.3)])
def test_jaynes_cummings_closed_form(omega, delta, g):
    t = Truncation(40)
    e = np.linalg.eigvalsh(build_gr_hamiltonian(GrParams(omega, delta, g, 0.0), t).entries)
    exact = jc_levels(omega, delta, g, 40)
    # the top Fock state is unpaired on the truncated space: compare the low part
    assert_allclose(e[:50], exact[:50], atol=1e-10)


def test_anti_jaynes_cummings_closed_form():
    omega, delta, g2 = 1.0, 0.8, 0.3
    t = Truncation(40)
    e = np.linalg.eigvalsh(build_gr_hamiltonian(GrParams(omega, delta, 0.0, g2), t).entries)
    levels = [delta / 2]
    for n in range(39):
        split = np.sqrt((delta + omega) ** 2 / 4 + g2**2 * (n + 1))
        levels += [omega * (n + 0.5) - split, omega * (n + 0.5) + split]
    assert_allclose(e[:50], np.sort(levels)[:50], atol=1e-10)


def test_params_validation():
    with pytest.raises(ValueError):
        GrParams(0.0, 1, 1, 1)
    with pytest.raises(ValueError):
        GrParams(1.0, 1, float("nan"), 1)
    with pytest.raises(ValueError):
        GrParams(1.0, 1, 1, 1, lam=1.0)
    assert GrParams(1, 2, 3, 4).replace(g1=0.5).g1 == 0.5


def test_susy_residual_values():
    assert susy_residual(GrParams(1, 2, 1.5, 0.5)) == 0.0
    assert susy_residual(GrParams(1, 2, 1.4, 0.5)) == pytest.approx(-0.29)
    assert susy_residual(GrParams(1, 2, 1.4, 0.5), "reversed") == pytest.approx(-3.71)
    with pytest.raises(ValueError):
        susy_residual(GrParams(1, 2, 1, 1, 0.1), "reversed")


@given(st.floats(0.3, 3), st.floats(0, 2), st.floats(0, 2), st.floats(-0.8, 0.8))
@settings(max_examples=40, deadline=None)
def test_line_delta_zeroes_kernel_residual(omega, g1, g2, frac):
    lam = frac * omega
    d = susy_line_delta(omega, g1, g2, lam)
    p = GrParams(omega, d, g1, g2, lam)
    assert abs(susy_residual(p, "kernel")) < 1e-10 * (1 + g1**2 + g2**2 + abs(d * omega))


def test_em_dual_form():
    omega_e, omega_b, res = em_dual_form(GrParams(1, 2, 1.5, 0.5))
    assert (omega_e, omega_b) == (2.0, 1.0)
    assert res == 0.0
    with pytest.raises(ValueError):
        em_dual_form(GrParams(1, 2, 1.5, 0.5, 0.1))


def test_rd_map_hand_values():
    # unit constants: omega_c = B/m = 2, kappa = alpha sqrt(B) = alpha sqrt(4) = 2 alpha
    p = rd_to_gr(RdParams(b0=4.0, m_eff=2.0, g_factor=1.0, alpha_r=0.1, alpha_d=0.05))
    assert p.omega == pytest.approx(2.0)
    assert p.delta == pytest.approx(1.0 * 2.0 / 2.0 * 2.0)
    assert p.g1 == pytest.approx(2 * np.sqrt(2) * 0.2 * 2.0)
    assert p.g2 == pytest.approx(2 * np.sqrt(2) * 0.1 * 2.0)


def test_rd_equal_couplings_give_equal_g():
    p = rd_to_gr(RdParams(1.0, 1.0, 2.0, 0.3, 0.3))
    assert p.g1 == p.g2
    with pytest.raises(ValueError):
        RdParams(-1.0, 1.0, 2.0, 0.3, 0.3)


def test_lambda_scheme_symmetric_cancels():
    p, cancelled = lambda_scheme_to_gr(LambdaSchemeParams(1.0, 1.0, 2.0, 2.0, 10.0, 10.0))
    assert cancelled
    assert p.delta == 0.0 and p.lam == 0.0
    assert p.g1 == p.g2 == pytest.approx(0.1)


def test_lambda_scheme_hand_values():
    ls = LambdaSchemeParams(gt1=1.0, gt2=2.0, om1=3.0, om2=1.0, det1=10.0, det2=20.0)
    p, cancelled = lambda_scheme_to_gr(ls)
    assert not cancelled
    assert p.g1 == pytest.approx(3.0 / 20.0)
    assert p.g2 == pytest.approx(2.0 / 40.0)
    assert p.omega == pytest.approx((1 / 10 + 4 / 20) / 2)
    assert p.delta == pytest.approx(9 / 10 - 1 / 20)
    assert p.lam == pytest.approx(0.15**2 / 10 - 0.05**2 / 20)
    p_sup, _ = lambda_scheme_to_gr(ls, "supplement")
    assert p_sup.g1 == pytest.approx(2 * p.g1)


def test_lambda_scheme_complex_drives_use_moduli():
    p, _ = lambda_scheme_to_gr(LambdaSchemeParams(1.0, 1.0, 2j, 2.0, 10.0, 10.0))
    assert p.g1 == pytest.approx(0.1) and p.g2 == pytest.approx(0.1)
    with pytest.raises(ValueError):
        LambdaSchemeParams(1, 1, 1, 1, 0.0, 1.0)
