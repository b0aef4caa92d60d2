import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_allclose
from scipy.special import factorial

from susyrabi.operators import (
    OperatorMatrix,
    SpaceTag,
    SpinLabel,
    Truncation,
    annihilation_matrix,
    creation_matrix,
    displacement_matrix,
    gmp_commutator_residual,
    interior_norm,
    magnetic_translation,
    number_matrix,
    spin_matrix,
    tensor_boson_spin,
)


def test_truncation_validation():
    with pytest.raises(ValueError):
        Truncation(1)
    with pytest.raises(ValueError):
        Truncation(10, 10)
    t = Truncation(10, 3)
    assert t.n_interior == 7
    assert t.doubled() == Truncation(20, 6)


def test_canonical_commutator_on_interior():
    t = Truncation(30, 1)
    a, ad = annihilation_matrix(t), creation_matrix(t)
    comm = (a @ ad - ad @ a).entries - np.eye(30)
    # only the top Fock level is corrupted by truncation
    assert interior_norm(comm, SpaceTag.BOSON, t) < 1e-13
    assert abs(comm[-1, -1]) > 1
    assert_allclose((ad @ a).entries, number_matrix(t).entries)


def test_operator_matrix_is_immutable_and_checked():
    t = Truncation(4)
    a = annihilation_matrix(t)
    with pytest.raises(ValueError):
        a.entries[0, 1] = 5
    with pytest.raises(ValueError):
        OperatorMatrix(np.eye(5), t)
    with pytest.raises(ValueError):
        a + OperatorMatrix(np.eye(8), t, SpaceTag.BOSON_SPIN)


def test_spin_matrices():
    sp, sm, sz = (spin_matrix(l) for l in (SpinLabel.SIGMA_PLUS, SpinLabel.SIGMA_MINUS, SpinLabel.SIGMA_Z))
    assert_allclose(sp @ sm - sm @ sp, sz)
    assert_allclose(sz, np.diag([1, -1]))
    # sigma_+ raises |down> to |up>
    assert_allclose(sp @ np.array([0, 1]), [1, 0])


def test_tensor_ordering_spin_outermost():
    t = Truncation(3)
    n = tensor_boson_spin(number_matrix(t), spin_matrix("sigma_z")).entries
    assert_allclose(np.diag(n).real, [0, 1, 2, 0, -1, -2])


@given(st.floats(-1.5, 1.5), st.floats(-1.5, 1.5))
@settings(max_examples=25, deadline=None)
def test_displacement_is_unitary_and_makes_coherent_states(re, im):
    alpha = complex(re, im)
    t = Truncation(60)
    d = displacement_matrix(alpha, t).entries
    assert_allclose(d @ d.conj().T, np.eye(60), atol=1e-10)
    # closed form: <n|alpha> = exp(-|alpha|^2/2) alpha^n / sqrt(n!)
    n = np.arange(25)
    expected = np.exp(-abs(alpha) ** 2 / 2) * alpha**n / np.sqrt(factorial(n))
    assert_allclose(d[:25, 0], expected, atol=1e-10)


@given(
    st.complex_numbers(max_magnitude=1.0),
    st.complex_numbers(max_magnitude=1.0),
    st.sampled_from([0.5, 1.0, 1.7]),
)
@settings(max_examples=15, deadline=None)
def test_gmp_algebra(q, p, ell):
    assert gmp_commutator_residual(q, p, ell, Truncation(90, 40)) < 1e-9


def test_translations_commute_for_parallel_vectors():
    t = Truncation(60, 30)
    tq = magnetic_translation(0.3 + 0.2j, t).entries
    tp = magnetic_translation(0.6 + 0.4j, t).entries
    assert interior_norm(tq @ tp - tp @ tq, SpaceTag.BOSON, t) < 1e-10
