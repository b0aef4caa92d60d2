import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from susyrabi import dynamics
from susyrabi.dynamics import (
    CoherentUp,
    FockUp,
    LatticeSpec,
    build_cavity_array,
    degeneracy_gap,
    eigen_spectrum,
    envelope_timescales,
    gr_spectrum,
    jc_timescales,
    lattice_levels,
    quench_evolution,
    sweep_coupling,
    sweep_hopping,
)
from susyrabi.errors import DimensionGuardError, TruncationError
from susyrabi.model import GrParams, build_gr_hamiltonian, parity_operator
from susyrabi.operators import Truncation

FIG3 = GrParams(1.0, 2.0, 1.5, 0.5)


def test_eigen_spectrum_rejects_non_hermitian():
    with pytest.raises(ValueError):
        eigen_spectrum(np.array([[0, 1], [0, 0]]))


def test_degenerate_ground_rotated_to_parity():
    s = gr_spectrum(FIG3, Truncation(60))
    assert degeneracy_gap(s) < 1e-8
    assert s.eigenvalues[0] == pytest.approx(-1.25, abs=1e-10)
    assert s.eigenvalues[2] - s.eigenvalues[0] > 1e-2
    assert list(s.parity_labels[:2]) == [1, -1]
    par = parity_operator(Truncation(60)).entries
    for k in (0, 1):
        v = s.eigenvectors[:, k]
        assert np.linalg.norm(par @ v - s.parity_labels[k] * v) < 1e-10


def test_off_line_gap():
    assert degeneracy_gap(gr_spectrum(FIG3.replace(g1=1.4), Truncation(60))) > 1e-2


def test_sweep_is_independent_of_parallelism():
    g1 = np.linspace(1.3, 1.7, 9)
    serial = sweep_coupling(FIG3, g1, Truncation(30), 3, n_jobs=1)
    parallel = sweep_coupling(FIG3, g1, Truncation(30), 3, n_jobs=4)
    assert serial == parallel
    crossings = [r["g1"] for r in serial if r["susy_crossing"]]
    assert crossings == [1.5]
    assert serial[4]["delta21"] < 1e-8


def test_single_site_lattice_is_the_cavity():
    spec = LatticeSpec((FIG3,), 0.3, 10)
    h = build_cavity_array(spec).toarray()
    assert_allclose(h, build_gr_hamiltonian(FIG3, Truncation(10)).entries)


def test_lattice_without_hopping_is_a_tensor_sum():
    n = 5
    site = np.linalg.eigvalsh(build_gr_hamiltonian(FIG3, Truncation(n)).entries)
    sums = np.sort((site[:, None, None] + site[None, :, None] + site[None, None, :]).ravel())
    levels = lattice_levels(LatticeSpec((FIG3,) * 3, 0.0, n), k=6)
    assert_allclose(levels, sums[:6], atol=1e-10)


def test_lattice_hermitian_and_sparse_path_matches_dense(monkeypatch):
    spec = LatticeSpec((FIG3, FIG3.replace(g1=1.4), FIG3), 0.1, 6)
    h = build_cavity_array(spec)
    assert abs(h - h.conj().T).max() < 1e-14
    dense = np.linalg.eigvalsh(h.toarray())[:4]
    assert_allclose(lattice_levels(spec, 4), dense, atol=1e-10)
    monkeypatch.setattr(dynamics, "DENSE_LATTICE_DIM", 100)  # force the Lanczos path
    assert_allclose(lattice_levels(spec, 4), dense, atol=1e-9)


def test_lattice_guard_and_validation():
    with pytest.raises(DimensionGuardError):
        build_cavity_array(LatticeSpec((FIG3,) * 3, 0.1, 14))
    with pytest.raises(ValueError):
        LatticeSpec((FIG3,) * 4, 0.1, 4)
    with pytest.raises(ValueError):
        LatticeSpec((FIG3,) * 2, 0.1, 4, boundary="periodic")


def test_hopping_sweep_deterministic():
    a = sweep_hopping([FIG3] * 2, [0.0, 0.1], 8, n_jobs=1)
    b = sweep_hopping([FIG3] * 2, [0.0, 0.1], 8, n_jobs=2)
    assert a == b


def test_uncoupled_quench_is_stationary():
    res = quench_evolution(GrParams(1.0, 1.3, 0.0, 0.0), CoherentUp(2.0), np.linspace(0, 50, 101), Truncation(40))
    assert_allclose(res.mean_photon, 4.0, atol=1e-9)
    assert_allclose(res.inversion, 1.0, atol=1e-12)


def test_resonant_fock_rabi_oscillation():
    # |up, n> at resonance: <sigma_z>(t) = cos(2 g sqrt(n+1) t)
    g, n = 0.1, 3
    t = np.linspace(0, 60, 301)
    res = quench_evolution(GrParams(1.0, 1.0, g, 0.0), FockUp(n), t, Truncation(20))
    assert_allclose(res.inversion, np.cos(2 * g * np.sqrt(n + 1) * t), atol=1e-10)
    assert_allclose(res.envelope, 1.0, atol=1e-10)
    assert res.norm_error < 1e-10 and res.energy_error < 1e-10


def test_quench_truncation_guard():
    with pytest.raises(TruncationError):
        quench_evolution(FIG3, CoherentUp(5.0), [0.0, 1.0], Truncation(30, 5))
    with pytest.raises(TruncationError):
        quench_evolution(FIG3, FockUp(28), [0.0, 1.0], Truncation(30, 5))
    with pytest.raises(ValueError):
        quench_evolution(FIG3, FockUp(1), [1.0, 0.0], Truncation(30, 5))


def test_envelope_timescales_on_synthetic_envelope():
    t = np.linspace(0, 100, 20001)
    tc, tr = 7.0, 60.0
    env = np.exp(-t**2 / (2 * tc**2)) + 0.4 * np.exp(-((t - tr) ** 2) / 50)
    collapse, revival = envelope_timescales(t, env)
    assert collapse == pytest.approx(tc, rel=1e-4)
    assert revival == pytest.approx(tr, abs=0.01)


def test_jc_timescales_formula():
    rabi, tc, tr = jc_timescales(GrParams(1.0, 1.0, 0.05, 0.0), 16)
    assert rabi == pytest.approx(0.2)
    assert tc == pytest.approx(20.0)
    assert tr == pytest.approx(2 * np.pi * 0.2 / 0.05**2)
