import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cryptoherm.exceptions import DefectiveMatrix, NotHermitian, NotPositiveDefinite, SingularWeight
from cryptoherm.linalg import eig, fro_norm, geig, herm_sqrt
from conftest import random_hpd, real_spectrum_matrix


def test_eig_diagonal():
    s = eig(np.diag([1.0, 2.0]))
    np.testing.assert_allclose(s.values, [1, 2])
    np.testing.assert_allclose(np.abs(s.right_vectors), np.eye(2), atol=1e-15)
    assert s.reality_flag


def test_eig_characteristic_polynomial_cases(pt2):
    np.testing.assert_allclose(eig(np.array([[0, 1], [4, 0]])).values, [-2, 2], atol=1e-14)
    s = eig(pt2)
    np.testing.assert_allclose(s.values, [-np.sqrt(0.75), np.sqrt(0.75)], atol=1e-14)
    assert s.reality_flag


def test_eig_sorted_lexicographically():
    s = eig(np.diag([2.0, 1j, -1j, 1.0]))
    np.testing.assert_array_equal(s.values, [-1j, 1j, 1, 2])
    assert not s.reality_flag


def test_eig_biorthogonal_and_residuals(rng):
    M = rng.standard_normal((12, 12)) + 1j * rng.standard_normal((12, 12))
    s = eig(M)
    assert s.biorthogonality_error() < 1e-10
    R, L, v = s.right_vectors, s.left_vectors, s.values
    assert np.linalg.norm(M @ R - R * v) < 1e-10 * np.linalg.norm(M)
    assert np.linalg.norm(L.conj().T @ M - v[:, None] * L.conj().T) < 1e-9 * np.linalg.norm(M)


@pytest.mark.parametrize("dim", [2, 7, 16, 64])
def test_reconstruction(rng, dim):
    M = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    s = eig(M)
    R, L = s.right_vectors, s.left_vectors
    recon = sum(
        s.values[n] * np.outer(R[:, n], L[:, n].conj()) / (L[:, n].conj() @ R[:, n]) for n in range(dim)
    )
    assert np.linalg.norm(recon - M) <= 1e-8 * np.linalg.norm(M)
    assert np.linalg.norm(s.reconstruct() - M) <= 1e-8 * np.linalg.norm(M)


def test_jordan_block_is_defective():
    with pytest.raises(DefectiveMatrix):
        eig(np.array([[1.0, 1.0], [0.0, 1.0]]))


def test_near_jordan_is_defective():
    with pytest.raises(DefectiveMatrix):
        eig(np.array([[1.0, 1.0], [1e-24, 1.0]]))


def test_degenerate_but_diagonalizable():
    s = eig(np.eye(3))
    np.testing.assert_allclose(s.right_vectors.conj().T @ s.right_vectors, np.eye(3), atol=1e-14)
    assert s.biorthogonality_error() < 1e-14


def test_eig_rejects_bad_input():
    with pytest.raises(ValueError):
        eig(np.ones((2, 3)))
    with pytest.raises(ValueError):
        eig(np.array([[np.nan, 0], [0, 1]]))


def test_geig_identity_weight_matches_eig(rng):
    H = real_spectrum_matrix(rng, 9)
    a, b = geig(H, np.eye(9)), eig(H)
    np.testing.assert_allclose(a.values, b.values, atol=1e-10)


def test_geig_diagonal_ratio():
    s = geig(np.diag([2.0, 6.0]), np.diag([1.0, 2.0]))
    np.testing.assert_allclose(s.values, [2, 3])


def test_geig_non_hermitian_against_scipy(rng):
    import scipy.linalg as sla

    H = rng.standard_normal((8, 8)) + 1j * rng.standard_normal((8, 8))
    W = random_hpd(rng, 8) + 0.3j * rng.standard_normal((8, 8))
    s = geig(H, W)
    ref = np.sort_complex(sla.eigvals(np.linalg.solve(W, H)))
    np.testing.assert_allclose(np.sort_complex(s.values), ref, atol=1e-9)
    # left vectors are those of W^-1 H
    K = np.linalg.solve(W, H)
    L = s.left_vectors
    assert np.linalg.norm(L.conj().T @ K - s.values[:, None] * L.conj().T) < 1e-8 * np.linalg.norm(K)
    assert s.biorthogonality_error() < 1e-10


def test_geig_singular_weight():
    with pytest.raises(SingularWeight):
        geig(np.eye(2), np.diag([1.0, 0.0]))


def test_geig_rectified_scaled_path_matches_direct():
    # dense pencil of a coarse q = 2s rectification against a direct discretization of x^2
    from cryptoherm.sturm import Grid, rectify, scale_path

    n = 300
    prob = rectify(scale_path(2.0), lambda x: x**2, Grid(-4.0, 4.0, n))
    H, W = prob.dense()
    vals = geig(H, W).values[:5].real
    h = 16.0 / (n + 1)  # x = 2s doubles the spacing
    x = -8.0 + h * np.arange(1, n + 1)
    direct = np.diag(2 / h**2 + x**2) - np.diag(np.full(n - 1, 1 / h**2), 1) - np.diag(np.full(n - 1, 1 / h**2), -1)
    np.testing.assert_allclose(vals, np.linalg.eigvalsh(direct)[:5], rtol=1e-10)


def test_herm_sqrt_examples(pt2_theta):
    np.testing.assert_allclose(herm_sqrt(np.eye(3)), np.eye(3), atol=1e-15)
    np.testing.assert_allclose(herm_sqrt(np.diag([4.0, 9.0])), np.diag([2, 3]), atol=1e-14)
    S = herm_sqrt(pt2_theta)
    assert np.linalg.norm(S @ S - pt2_theta) < 1e-12
    assert np.linalg.norm(S - S.conj().T) == 0


def test_herm_sqrt_errors():
    with pytest.raises(NotHermitian):
        herm_sqrt(np.array([[1.0, 1.0], [0.0, 1.0]]))
    with pytest.raises(NotPositiveDefinite) as info:
        herm_sqrt(np.diag([1.0, -1.0]))
    assert info.value.min_eigenvalue == -1.0


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 12), st.integers(0, 2**32 - 1))
def test_herm_sqrt_idempotence(dim, seed):
    rng = np.random.default_rng(seed)
    S = herm_sqrt(random_hpd(rng, dim))
    assert np.linalg.norm(herm_sqrt(S @ S) - S) <= 1e-10 * np.linalg.norm(S)


def test_fro_norm():
    assert fro_norm(np.zeros((3, 3))) == 0
    assert fro_norm(np.eye(4)) == 2
    assert fro_norm(np.array([[3, 4], [0, 0]])) == 5
