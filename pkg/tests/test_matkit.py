import numpy as np
import pytest
from numpy.testing import assert_allclose
import scipy.linalg

from src.errors import SingularInput
from src.kernels import matkit


def test_as_matrix_rejects_bad_shapes_and_values():
    with pytest.raises(ValueError):
        matkit.as_matrix([[1.0, 2.0, 3.0]])
    with pytest.raises(ValueError):
        matkit.as_matrix([[1.0, np.nan], [0.0, 1.0]])
    with pytest.raises(ValueError):
        matkit.as_matrix(np.zeros((0, 0)))
    assert matkit.as_matrix([[1, 2], [3, 4]]).dtype == float


def test_qr_positive_diagonal_and_reconstruction(rng):
    for _ in range(20):
        m = rng.standard_normal((4, 4))
        q, r = matkit.qr(m)
        assert np.all(np.diag(r) > 0)
        assert_allclose(q @ r, m, atol=1e-12)
        assert_allclose(q.T @ q, np.eye(4), atol=1e-12)
        assert np.all(np.tril(r, -1) == 0)


def test_qr_matches_gram_schmidt():
    m = np.array([[3.0, 1.0], [4.0, 2.0]])
    q, r = matkit.qr(m)
    first = m[:, 0] / np.linalg.norm(m[:, 0])
    assert_allclose(q[:, 0], first, atol=1e-14)
    assert r[0, 0] == pytest.approx(5.0)


def test_qr_of_permutation_is_permutation_times_identity():
    m = np.array([[0.0, 1.0], [1.0, 0.0]])
    q, r = matkit.qr(m)
    assert_allclose(q, m, atol=1e-15)
    assert_allclose(r, np.eye(2), atol=1e-15)


def test_qr_rejects_singular():
    with pytest.raises(SingularInput):
        matkit.qr(np.array([[1.0, 2.0], [2.0, 4.0]]))


def test_expm_scalar_and_stacked():
    assert_allclose(matkit.expm(np.array([[1.0]])), [[np.e]], rtol=1e-14)
    stacked = np.stack([np.diag([1.0, -1.0]), np.zeros((2, 2))])
    out = matkit.expm(stacked)
    assert_allclose(out[0], np.diag([np.e, 1 / np.e]), rtol=1e-13)
    assert_allclose(out[1], np.eye(2), atol=1e-15)


def test_expm_nilpotent_is_exact():
    n = np.array([[0.0, 1.0], [0.0, 0.0]])
    assert_allclose(matkit.expm(n), [[1.0, 1.0], [0.0, 1.0]], atol=1e-15)


def test_eigenvalues_of_triangular_equal_diagonal():
    m = np.array([[-1.0, 5.0, 2.0], [0.0, 0.5, 3.0], [0.0, 0.0, 2.0]])
    values = np.sort(matkit.eigenvalues(m).real)
    assert_allclose(values, [-1.0, 0.5, 2.0], atol=1e-12)


def test_rotation_eigenvalues_are_imaginary():
    values = matkit.eigenvalues(np.array([[0.0, 1.0], [-1.0, 0.0]]))
    assert_allclose(np.sort(values.imag), [-1.0, 1.0], atol=1e-14)
    assert_allclose(values.real, [0.0, 0.0], atol=1e-14)


def test_is_hurwitz_agrees_with_lyapunov_certificate(rng):
    for _ in range(30):
        m = rng.standard_normal((3, 3)) - rng.uniform(0, 2) * np.eye(3)
        cert = matkit.lyapunov_certificate(m)
        if matkit.spectral_abscissa(m) < -1e-3:
            assert matkit.is_hurwitz(m)
            assert cert.positive_definite
            residual = m.T @ cert.p + cert.p @ m + np.eye(3)
            assert np.linalg.norm(residual) < 1e-8
        elif matkit.spectral_abscissa(m) > 1e-3:
            assert not matkit.is_hurwitz(m)
            assert not cert.positive_definite


def test_is_hurwitz_margin():
    assert not matkit.is_hurwitz(np.diag([0.0, -1.0]))
    assert matkit.is_hurwitz(np.diag([-1e-3, -1.0]))


def test_nullspace_dimensions():
    assert len(matkit.nullspace(np.zeros((3, 3)))) == 3
    basis = matkit.nullspace(np.array([[1.0, 0.0], [0.0, 1e-14]]))
    assert len(basis) == 1
    assert_allclose(np.abs(basis[0]), [0.0, 1.0], atol=1e-12)
    assert matkit.nullspace(np.eye(2)) == []
    with pytest.raises(ValueError):
        matkit.nullspace(np.eye(2), tol=0.0)


def test_nullspace_matches_scipy(rng):
    m = rng.standard_normal((2, 4))
    ours = np.column_stack(matkit.nullspace(m))
    ref = scipy.linalg.null_space(m)
    assert ours.shape == ref.shape
    assert np.linalg.norm(m @ ours) < 1e-12


def test_expm_taylor_matches_pade_on_stacks(rng):
    base = rng.standard_normal((6, 3, 3))
    for norm in (1e-3, 0.1, 0.25, 1.0, 5.0):
        stack = norm * base / np.max(np.sum(np.abs(base), axis=-2), axis=-1)[:, None, None]
        ours = matkit.expm_taylor(stack)
        assert ours.shape == stack.shape
        for m, e in zip(stack, ours):
            ref = scipy.linalg.expm(m)
            assert_allclose(e, ref, rtol=1e-11, atol=1e-11 * np.linalg.norm(ref))
    assert_allclose(matkit.expm_taylor(np.zeros((2, 2, 2))), np.broadcast_to(np.eye(2), (2, 2, 2)))


def test_nullspace_matrix_against_reference_scale():
    noise = 1e-17 * np.array([[1.0, 2.0], [0.5, -1.0]])
    assert matkit.nullspace_matrix(noise).shape[1] == 0
    assert matkit.nullspace_matrix(noise, scale=1.0).shape == (2, 2)
    m = np.array([[3.0, 0.0], [0.0, 1e-12]])
    assert matkit.nullspace_matrix(m, scale=1.0).shape == (2, 1)
    assert matkit.nullspace_matrix(m, scale=1e10).shape == (2, 2)


def test_rank():
    assert matkit.rank(np.eye(3)) == 3
    assert matkit.rank(np.ones((3, 3))) == 1
    assert matkit.rank(np.zeros((2, 2))) == 0


def test_expm_group_property(rng):
    for _ in range(10):
        m = rng.standard_normal((3, 3))
        m *= 5.0 / np.linalg.norm(m)
        assert_allclose(matkit.expm(m) @ matkit.expm(-m), np.eye(3), atol=1e-10)


def test_companion_matrix_spectrum():
    m = np.array([[0.0, 1.0], [-2.0, -3.0]])
    assert_allclose(np.sort(matkit.eigenvalues(m).real), [-2.0, -1.0], atol=1e-12)
    assert matkit.is_hurwitz(m)
    assert matkit.is_hurwitz(-np.eye(3))
    assert not matkit.is_hurwitz(np.array([[0.0, 1.0], [-1.0, 0.0]]))


def test_is_hurwitz_against_lyapunov_oracle(rng):
    for _ in range(200):
        n = int(rng.integers(2, 6))
        m = rng.standard_normal((n, n)) - rng.uniform(0.0, 2.0) * np.eye(n)
        if abs(matkit.spectral_abscissa(m)) < 1e-6:
            continue
        p = scipy.linalg.solve_continuous_lyapunov(m.T, -np.eye(n))
        oracle = bool(np.all(np.linalg.eigvalsh(0.5 * (p + p.T)) > 0))
        assert matkit.is_hurwitz(m) == oracle
