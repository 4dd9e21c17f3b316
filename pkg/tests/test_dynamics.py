import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mourrelab.lattice import LatticeBox, PotentialSpec, build_conjugate, build_hamiltonian, build_laplacian
from mourrelab.linalg import eig_hermitian, op_norm
from mourrelab.spectral import Interval, spectral_projector
from mourrelab.dynamics import (
    EstimateSeries,
    cesaro_gram,
    cesaro_phase,
    cesaro_plateau,
    cesaro_quadrature,
    evolve,
    evolve_many,
    heisenberg_expectation,
    kato_integral,
    kato_series,
    pointwise_estimate_series,
    pre_reflection_horizon,
    rage_average,
    rajchman_transform,
    top_state,
    uniform_cesaro,
)


@pytest.fixture(scope="module")
def small():
    box = LatticeBox(1, 20)
    H = build_hamiltonian(box, PotentialSpec.short_range(2.0))
    return box, H, eig_hermitian(H)


def unit(rng, n):
    v = rng.normal(size=n) + 1j * rng.normal(size=n)
    return v / np.linalg.norm(v)


def test_evolve_identity_and_eigenvector(small, rng):
    box, H, eig = small
    psi = unit(rng, box.n_sites)
    np.testing.assert_allclose(evolve(eig, psi, 0.0), psi, atol=1e-12)
    u = eig.vectors[:, 5]
    np.testing.assert_allclose(evolve(eig, u, 3.7), np.exp(-3.7j * eig.values[5]) * u, atol=1e-12)


@given(st.floats(-200, 200), st.integers(0, 2**31 - 1))
def test_unitarity_and_energy(t, seed):
    box = LatticeBox(1, 12)
    H = build_hamiltonian(box, PotentialSpec.oscillating(1.0, 1.0))
    eig = eig_hermitian(H)
    psi = unit(np.random.default_rng(seed), box.n_sites)
    out = evolve(eig, psi, t)
    assert abs(np.linalg.norm(out) - 1) <= 1e-10
    assert abs(np.vdot(out, H @ out) - np.vdot(psi, H @ psi)) <= 1e-10


def test_evolve_many_columns(small, rng):
    box, H, eig = small
    psi = unit(rng, box.n_sites)
    cols = evolve_many(eig, psi, [0.0, 1.0, 2.5])
    np.testing.assert_allclose(cols[:, 2], evolve(eig, psi, 2.5), atol=1e-12)


def test_pointwise_trivial_observables(small, rng):
    box, H, eig = small
    psi = unit(rng, box.n_sites)
    times = np.linspace(0, 10, 11)
    s = pointwise_estimate_series(eig, np.eye(box.n_sites), psi, times, box)
    np.testing.assert_allclose(s.values, 1.0, atol=1e-12)
    assert s.metadata["t_max"] == pytest.approx(0.8 * 20 / 2)
    s = pointwise_estimate_series(eig, np.zeros((box.n_sites, box.n_sites)), psi, times)
    assert np.all(s.values == 0)


def test_series_validation():
    with pytest.raises(ValueError):
        EstimateSeries("t", [0.0, 0.0], [1.0, 2.0])
    with pytest.raises(ValueError):
        EstimateSeries("t", [0.0, 1.0], [1.0, np.nan])
    with pytest.raises(ValueError):
        EstimateSeries("t", [0.0, 1.0], [1.0])


def test_horizon():
    assert pre_reflection_horizon(LatticeBox(2, 50)) == pytest.approx(10.0)


def test_cesaro_phase_branches():
    assert cesaro_phase(np.array([0.0]), 5.0)[0] == 1.0
    w = np.array([1e-9, 1e-7, 1e-3, 2.0])
    x = w * 10
    # cancellation-free form of (e^{ix} - 1)/(ix)
    exact = np.sin(x) / x + 2j * np.sin(x / 2) ** 2 / x
    np.testing.assert_allclose(cesaro_phase(w, 10.0), exact, rtol=1e-9)


def test_cesaro_of_spectral_projector_is_itself(small):
    box, H, eig = small
    P = spectral_projector(eig, Interval(1, 3))
    for T in (1.0, 40.0):
        np.testing.assert_allclose(cesaro_gram(eig, P, T), P, atol=1e-10)
        assert uniform_cesaro(eig, P, T) == pytest.approx(1.0)


def test_rank_one_coherence_decays(small):
    box, H, eig = small
    j, k = 3, 9
    w = eig.values[j] - eig.values[k]
    # |u_j><u_k| alone has B*B = |u_k><u_k|, which commutes with H: no decay
    B = np.outer(eig.vectors[:, j], eig.vectors[:, k].conj())
    assert uniform_cesaro(eig, B, 500.0) == pytest.approx(1.0)
    # a superposition probe sees the off-diagonal phase: norm (1 + |phi_T(w)|)/2
    B = np.outer(box.delta(), (eig.vectors[:, j] + eig.vectors[:, k]).conj()) / np.sqrt(2)
    for T in (5.0, 50.0, 500.0):
        expected = 0.5 * (1 + abs(cesaro_phase(np.array([w]), T)[0]))
        assert uniform_cesaro(eig, B, T) == pytest.approx(expected, rel=1e-9)
        assert uniform_cesaro(eig, B, T) - 0.5 <= 1 / (T * abs(w)) + 1e-12


def test_cesaro_rejects_nonpositive_time(small):
    box, H, eig = small
    with pytest.raises(ValueError):
        cesaro_gram(eig, np.eye(box.n_sites), 0.0)


def test_small_time_limit(small, rng):
    box, H, eig = small
    B = rng.normal(size=(box.n_sites, box.n_sites))
    assert uniform_cesaro(eig, B, 1e-9) == pytest.approx(op_norm(B.T @ B), rel=1e-7)


@given(st.integers(0, 2**31 - 1), st.floats(0.5, 50.0))
def test_gram_psd_and_bounded(seed, T):
    rng = np.random.default_rng(seed)
    box = LatticeBox(1, 8)
    eig = eig_hermitian(build_hamiltonian(box, PotentialSpec.short_range(1.5)))
    B = rng.normal(size=(box.n_sites, box.n_sites))
    M = cesaro_gram(eig, B, T)
    ev = np.linalg.eigvalsh(M)
    assert ev.min() >= -1e-10 * ev.max()
    assert ev.max() <= op_norm(B.T @ B) * (1 + 1e-10)


@given(st.integers(0, 2**31 - 1), st.floats(0.5, 50.0), st.integers(4, 60))
def test_gram_quadratic_form_matches_time_quadrature(seed, T, n):
    rng = np.random.default_rng(seed)
    H = rng.normal(size=(n, n))
    H = (H + H.T) / (2 * np.sqrt(n))
    eig = eig_hermitian(H)
    B = rng.normal(size=(n, n)) / np.sqrt(n)
    psi = unit(rng, n)
    M = cesaro_gram(eig, B, T)
    exact = float(np.real(np.vdot(psi, M @ psi)))
    assert cesaro_quadrature(eig, B, psi, T, points=64) == pytest.approx(exact, rel=0.02)


def test_top_state_attains_the_norm(small, rng):
    box, H, eig = small
    B = rng.normal(size=(box.n_sites, box.n_sites))
    M = cesaro_gram(eig, B, 7.0)
    v = top_state(M)
    assert np.real(np.vdot(v, M @ v)) == pytest.approx(op_norm(M), rel=1e-10)


def test_plateau_is_the_large_time_limit(small, rng):
    box, H, eig = small
    B = rng.normal(size=(box.n_sites, box.n_sites))
    assert uniform_cesaro(eig, B, 1e7) == pytest.approx(cesaro_plateau(eig, B), rel=1e-4)


def test_plateau_groups_degenerate_levels():
    # doubly degenerate level: the block norm, not the diagonal, is the limit
    eig = eig_hermitian(np.diag([1.0, 1.0, 2.0]))
    B = np.zeros((3, 3))
    B[0, 0] = B[0, 1] = 1.0
    assert cesaro_plateau(eig, B) == pytest.approx(2.0)


def test_rage_trivial_cases(small):
    box, H, eig = small
    W = np.diag(box.delta())
    P = np.eye(box.n_sites)
    assert rage_average(eig, np.zeros_like(W), P, 10.0) == 0.0
    assert rage_average(eig, W, np.zeros_like(P), 10.0) == 0.0


def test_kato_examples(small):
    box, H, eig = small
    W = np.eye(box.n_sites)
    I = Interval(1, 3)
    psi = box.delta()
    ser = kato_series(eig, W, I, psi, 5.0, s=1.0)
    assert np.all(np.diff(ser.values) >= 0)
    assert ser.metadata["s_above_half"] is True
    assert np.max(np.diff(ser.grid)) <= 0.1 + 1e-12
    P = spectral_projector(eig, I)
    assert ser.columns["integrand"][0] == pytest.approx(np.linalg.norm(P @ psi) ** 2)
    outside = eig.vectors[:, eig.values > 3.5][:, 0]
    assert kato_integral(eig, W, I, outside, 5.0) == pytest.approx(0.0, abs=1e-20)


def test_rajchman_examples(small):
    box, H, eig = small
    I = Interval(0, 5)
    psi = box.delta()
    assert rajchman_transform(eig, psi, I, 0.0) == pytest.approx(1.0)
    u = eig.vectors[:, 4]
    vals = rajchman_transform(eig, u, Interval(eig.values[4] - 0.01, eig.values[4] + 0.01), np.linspace(0, 50, 11))
    np.testing.assert_allclose(np.abs(vals), 1.0, atol=1e-12)


@given(st.lists(st.floats(-500, 500), min_size=1, max_size=20))
def test_rajchman_bound(times):
    box = LatticeBox(1, 10)
    eig = eig_hermitian(build_laplacian(box))
    v = rajchman_transform(eig, box.delta(), Interval(1, 3), np.array(times))
    v0 = rajchman_transform(eig, box.delta(), Interval(1, 3), 0.0)
    assert abs(v0.imag) == 0
    assert np.all(np.abs(v) <= v0.real * (1 + 1e-12))


def test_heisenberg_examples():
    box = LatticeBox(1, 30)
    H = build_laplacian(box)
    A = build_conjugate(box)
    eig = eig_hermitian(H)
    u = eig.vectors[:, 10]
    vals = heisenberg_expectation(eig, A, u, np.linspace(0, 20, 5))
    np.testing.assert_allclose(vals, vals[0], atol=1e-12)
    psi = spectral_projector(eig, Interval(1, 3)) @ box.delta()
    psi /= np.linalg.norm(psi)
    assert heisenberg_expectation(eig, A, psi, 0.0) == pytest.approx(np.real(np.vdot(psi, A @ psi)), abs=1e-12)
    # derivative at 0 is <psi, i[H, A] psi>
    h = 1e-4
    deriv = (heisenberg_expectation(eig, A, psi, h) - heisenberg_expectation(eig, A, psi, -h)) / (2 * h)
    comm = 1j * (H @ A - A @ H)
    assert deriv == pytest.approx(np.real(np.vdot(psi, comm @ psi)), rel=1e-6)
