import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mourrelab.lattice import (
    DirichletSpectrum,
    LatticeBox,
    PotentialSpec,
    apply_conjugate,
    apply_laplacian,
    build_conjugate,
    build_hamiltonian,
    build_laplacian,
    build_position,
    build_potential,
    build_shift,
    enumerate_sites,
    potential_values,
)
from mourrelab.linalg import is_hermitian

boxes = st.tuples(st.integers(1, 2), st.integers(1, 5)).map(lambda t: LatticeBox(*t))


def test_site_index_roundtrip_and_order():
    box = LatticeBox(2, 2)
    assert [tuple(s) for s in box.sites] == list(enumerate_sites(2, 2))
    for i in range(box.n_sites):
        assert box.index(box.site(i)) == i
    assert box.origin() == 12
    with pytest.raises(ValueError):
        box.index((3, 0))


def test_laplacian_three_sites():
    np.testing.assert_array_equal(build_laplacian(LatticeBox(1, 1)), [[2, -1, 0], [-1, 2, -1], [0, -1, 2]])


def test_laplacian_center_row_d2():
    box = LatticeBox(2, 1)
    row = build_laplacian(box)[box.origin()]
    assert row[box.origin()] == 4
    assert sorted(row[row != 0]) == [-1, -1, -1, -1, 4]


@pytest.mark.parametrize("L", [1, 5, 30])
def test_laplacian_spectrum_inside_band(L):
    ev = np.linalg.eigvalsh(build_laplacian(LatticeBox(1, L)))
    assert ev.min() > 0 and ev.max() < 4


@given(boxes)
def test_laplacian_is_sum_of_axis_terms(box):
    n = box.n_sites
    terms = sum(2 * np.eye(n) - build_shift(box, i) - build_shift(box, i).T for i in range(box.d))
    H = build_laplacian(box)
    np.testing.assert_array_equal(H, terms)
    ev = np.linalg.eigvalsh(H)
    assert ev.min() >= 0 and ev.max() <= 4 * box.d


def test_shift_and_position_three_sites():
    box = LatticeBox(1, 1)
    S = build_shift(box, 0)
    np.testing.assert_array_equal(S, np.eye(3, k=-1))
    np.testing.assert_array_equal(S @ box.delta((1,)), 0)
    np.testing.assert_array_equal(build_position(box, 0), np.diag([-1.0, 0.0, 1.0]))
    with pytest.raises(ValueError):
        build_shift(box, 1)


@given(boxes)
def test_shift_is_partial_isometry(box):
    for axis in range(box.d):
        S = build_shift(box, axis)
        P = S.T @ S
        np.testing.assert_array_equal(P, P @ P)
        # the projector misses exactly the sites that leave the box
        leaving = box.sites[:, axis] == box.L
        np.testing.assert_array_equal(np.diag(P), (~leaving).astype(float))


def test_conjugate_three_sites():
    expected = 0.5j * np.array([[0, 1, 0], [-1, 0, -1], [0, 1, 0]])
    np.testing.assert_allclose(build_conjugate(LatticeBox(1, 1)), expected, atol=0)


@given(boxes)
def test_conjugate_matches_definition(box):
    A = build_conjugate(box)
    ref = np.zeros_like(A)
    for axis in range(box.d):
        D = build_shift(box, axis) - build_shift(box, axis).T
        N = build_position(box, axis)
        ref += 0.5j * (D @ N + N @ D)
    np.testing.assert_allclose(A, ref, atol=1e-14)
    assert is_hermitian(A)
    assert np.all(np.diag(A) == 0)
    assert np.trace(A) == 0
    # i times a real antisymmetric matrix
    assert np.all(A.real == 0)


def test_potential_families():
    box = LatticeBox(1, 3)
    assert np.all(build_potential(box, PotentialSpec.zero()) == 0)
    np.testing.assert_array_equal(build_hamiltonian(box, PotentialSpec.zero()), build_laplacian(box))
    V = np.diag(build_potential(box, PotentialSpec.point((0,), -3.0)))
    np.testing.assert_array_equal(V, [0, 0, 0, -3, 0, 0, 0])
    V = np.diag(build_potential(box, PotentialSpec.short_range(2.0)))
    np.testing.assert_allclose(V, 1.0 / (1.0 + np.arange(-3, 4) ** 2.0))
    V = np.diag(build_potential(box, PotentialSpec.oscillating(1.0, 1.0)))
    n = np.arange(-3, 4)
    np.testing.assert_allclose(V, np.sin(n) / np.sqrt(1 + n**2.0))


def test_short_range_uses_l1_norm():
    v = potential_values(PotentialSpec.short_range(2.0), np.array([[1, -2]]))
    assert v[0] == pytest.approx(1.0 / 10.0)


def test_custom_table_is_zero_off_table():
    spec = PotentialSpec.custom({(1,): 0.5})
    np.testing.assert_array_equal(potential_values(spec, np.array([[0], [1], [9]])), [0, 0.5, 0])


def test_unknown_family_rejected():
    with pytest.raises(ValueError):
        PotentialSpec("linear")
    with pytest.raises(ValueError):
        PotentialSpec.short_range(0.0)


def test_first_moment_predicate():
    assert PotentialSpec.short_range(2).decays_faster_than_first_moment()
    assert not PotentialSpec.oscillating(1, 1).decays_faster_than_first_moment()
    assert PotentialSpec.oscillating(1, 1.5).decays_faster_than_first_moment()
    assert PotentialSpec.oscillating(2 * np.pi, 0.5).decays_faster_than_first_moment()


@given(boxes, st.integers(0, 2**31 - 1))
def test_matrix_free_actions(box, seed):
    u = np.random.default_rng(seed).normal(size=box.n_sites)
    np.testing.assert_allclose(apply_laplacian(box, u).ravel(), build_laplacian(box) @ u, atol=1e-12)
    np.testing.assert_allclose(apply_conjugate(box, u).ravel(), build_conjugate(box) @ u, atol=1e-12)


@pytest.mark.parametrize("d,L", [(1, 4), (2, 3)])
def test_dirichlet_spectrum_functional_calculus(d, L):
    box = LatticeBox(d, L)
    ds = DirichletSpectrum(box)
    ev, V = np.linalg.eigh(build_laplacian(box))
    np.testing.assert_allclose(np.sort(ds.energies().ravel()), ev, atol=1e-12)
    u = np.random.default_rng(1).normal(size=box.n_sites)
    f = lambda x: np.exp(-x)  # noqa: E731
    np.testing.assert_allclose(ds.apply(f, u).ravel(), V @ (f(ev) * (V.T @ u)), atol=1e-12)


def test_interior_mask():
    box = LatticeBox(1, 3)
    np.testing.assert_array_equal(box.interior(2), [False, False, True, True, True, False, False])
    with pytest.raises(ValueError):
        box.interior(3)


def test_box_validation():
    with pytest.raises(ValueError):
        LatticeBox(0, 2)
    with pytest.raises(ValueError):
        LatticeBox(1, -1)
    assert len(list(itertools.islice(enumerate_sites(3, 1), 5))) == 5
