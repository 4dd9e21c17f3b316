import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mourrelab.lattice import LatticeBox, build_laplacian
from mourrelab.linalg import (
    ConvergenceError,
    NotHermitianError,
    checksum,
    commutator,
    eig_hermitian,
    hs_norm,
    is_hermitian,
    op_norm,
    singular_values,
)


def random_hermitian(rng, n):
    x = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return 0.5 * (x + x.conj().T)


def test_identity_eigensystem():
    es = eig_hermitian(np.eye(3))
    np.testing.assert_array_equal(es.values, [1.0, 1.0, 1.0])
    np.testing.assert_allclose(np.abs(es.vectors), np.eye(3), atol=1e-15)


def test_diagonal_is_sorted_with_unit_vectors():
    es = eig_hermitian(np.diag([3.0, 1.0, 2.0]))
    np.testing.assert_allclose(es.values, [1.0, 2.0, 3.0])
    # column j of V is the unit vector of the j-th smallest entry
    np.testing.assert_allclose(np.abs(es.vectors), np.eye(3)[:, [1, 2, 0]], atol=1e-15)


@pytest.mark.parametrize("N", [1, 2, 7, 40, 101])
def test_dirichlet_laplacian_spectrum(N):
    H = 2 * np.eye(N) - np.eye(N, k=1) - np.eye(N, k=-1)
    k = np.arange(1, N + 1)
    expected = np.sort(2 - 2 * np.cos(k * np.pi / (N + 1)))
    np.testing.assert_allclose(eig_hermitian(H).values, expected, atol=1e-12)


def test_box_laplacian_is_the_tridiagonal_matrix():
    H = build_laplacian(LatticeBox(1, 3))
    np.testing.assert_array_equal(H, 2 * np.eye(7) - np.eye(7, k=1) - np.eye(7, k=-1))


def test_residual_and_orthonormality(rng):
    H = random_hermitian(rng, 60)
    es = eig_hermitian(H)
    assert np.max(np.abs(es.vectors.conj().T @ es.vectors - np.eye(60))) <= 1e-10
    assert np.max(np.abs(H @ es.vectors - es.vectors * es.values)) <= 1e-9 * np.max(np.abs(H))
    np.testing.assert_allclose(es.reconstruct(), H, atol=1e-10)


def test_deterministic_and_checksummed(rng):
    H = random_hermitian(rng, 30)
    a, b = eig_hermitian(H), eig_hermitian(H.copy())
    assert np.array_equal(a.values, b.values) and np.array_equal(a.vectors, b.vectors)
    assert a.source_checksum == checksum(H)


def test_real_input_stays_real():
    es = eig_hermitian(build_laplacian(LatticeBox(1, 3)).astype(complex))
    assert not np.iscomplexobj(es.vectors)


def test_rejects_non_hermitian():
    with pytest.raises(NotHermitianError):
        eig_hermitian(np.array([[0.0, 1.0], [0.0, 0.0]]))


def test_rejects_non_square():
    with pytest.raises(ValueError):
        eig_hermitian(np.zeros((2, 3)))


def test_nan_input_is_a_convergence_error():
    H = np.eye(3)
    H[1, 1] = np.nan
    with pytest.raises((ConvergenceError, NotHermitianError)):
        eig_hermitian(H)


def test_singular_values_examples():
    np.testing.assert_allclose(singular_values(np.eye(4), 4), [1, 1, 1, 1])
    u = np.array([0.6, 0.8, 0.0])
    np.testing.assert_allclose(singular_values(np.outer(u, u), 2), [1.0, 0.0], atol=1e-10)
    with pytest.raises(ValueError):
        singular_values(np.eye(3), 4)


def test_singular_values_match_gram_eigenvalues(rng):
    X = rng.normal(size=(20, 20))
    s = singular_values(X, 5)
    top = np.sqrt(np.sort(np.linalg.eigvalsh(X.T @ X))[::-1][:5])
    np.testing.assert_allclose(s, top, rtol=1e-10)
    assert np.all(np.diff(s) <= 0)


def test_norms_and_commutator(rng):
    X = rng.normal(size=(5, 5))
    np.testing.assert_array_equal(commutator(np.eye(5), X), np.zeros((5, 5)))
    np.testing.assert_allclose(commutator(X, X), 0.0)
    assert hs_norm(np.eye(7)) == pytest.approx(np.sqrt(7))
    H = random_hermitian(rng, 8)
    assert op_norm(H) == pytest.approx(np.max(np.abs(np.linalg.eigvalsh(H))))
    assert op_norm(X) == pytest.approx(np.linalg.norm(X, 2))
    with pytest.raises(ValueError):
        commutator(np.eye(2), np.eye(3))


@given(st.integers(1, 12), st.integers(0, 2**31 - 1))
def test_hermitian_eigensystem_property(n, seed):
    H = random_hermitian(np.random.default_rng(seed), n)
    es = eig_hermitian(H)
    assert is_hermitian(H)
    assert np.all(np.diff(es.values) >= 0)
    assert np.max(np.abs(H @ es.vectors - es.vectors * es.values)) <= 1e-9 * max(1.0, np.max(np.abs(H)))


@given(st.integers(1, 6), st.integers(0, 2**31 - 1))
def test_checksum_sensitive_to_single_entry(n, seed):
    X = np.random.default_rng(seed).normal(size=(n, n))
    Y = X.copy()
    Y[0, 0] = np.nextafter(Y[0, 0], np.inf)
    assert checksum(X) == checksum(X.copy())
    assert checksum(X) != checksum(Y)
