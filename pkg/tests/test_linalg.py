import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from onebitvar.errors import NotPositiveDefinite, NotStationary, NotSymmetric, SingularMatrix
from onebitvar.linalg import (
    cholesky,
    lu_factor,
    lu_solve,
    right_divide,
    solve_linear,
    spectral_radius,
    stationary_covariance,
    sym_eig,
)


def test_solve_matches_numpy(rng):
    for n in (1, 2, 5, 12):
        a = rng.standard_normal((n, n)) + n * np.eye(n)
        b = rng.standard_normal((n, 3))
        assert np.allclose(solve_linear(a, b), np.linalg.solve(a, b), atol=1e-12)


def test_solve_vector_rhs_and_reuse_factor(rng):
    a = rng.standard_normal((4, 4)) + 4 * np.eye(4)
    lu, perm = lu_factor(a)
    for _ in range(3):
        b = rng.standard_normal(4)
        assert np.allclose(a @ lu_solve(lu, perm, b), b, atol=1e-12)


def test_pivoting_needed():
    a = np.array([[0.0, 1.0], [1.0, 0.0]])
    assert np.allclose(solve_linear(a, np.array([2.0, 3.0])), [3.0, 2.0])


def test_right_divide(rng):
    a = rng.standard_normal((3, 3)) + 3 * np.eye(3)
    b = rng.standard_normal((2, 3))
    x = right_divide(b, a)
    assert np.allclose(x @ a, b, atol=1e-12)


def test_singular_raises():
    with pytest.raises(SingularMatrix):
        solve_linear(np.array([[1.0, 2.0], [2.0, 4.0]]), np.ones(2))


def test_bad_shapes():
    with pytest.raises(ValueError):
        solve_linear(np.ones((2, 3)), np.ones(2))
    with pytest.raises(ValueError):
        solve_linear(np.eye(2), np.ones(3))


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 8), st.integers(0, 10_000))
def test_sym_eig_matches_eigh(n, seed):
    g = np.random.default_rng(seed)
    b = g.standard_normal((n, n))
    s = b + b.T
    vals, vecs = sym_eig(s)
    assert np.all(np.diff(vals) >= -1e-12)
    assert np.allclose(vals, np.linalg.eigvalsh(s), atol=1e-10)
    assert np.allclose(s @ vecs, vecs * vals, atol=1e-9)
    assert np.allclose(vecs.T @ vecs, np.eye(n), atol=1e-10)


def test_sym_eig_rejects_asymmetric():
    with pytest.raises(NotSymmetric):
        sym_eig(np.array([[1.0, 2.0], [0.0, 1.0]]))


def test_sym_eig_repeated_eigenvalues():
    vals, vecs = sym_eig(np.eye(3) * 2.0)
    assert np.allclose(vals, 2.0)
    assert np.allclose(vecs.T @ vecs, np.eye(3))


def test_cholesky(rng):
    b = rng.standard_normal((5, 5))
    s = b @ b.T + np.eye(5)
    l = cholesky(s)
    assert np.allclose(l, np.linalg.cholesky(s), atol=1e-12)
    assert np.allclose(np.triu(l, 1), 0.0)


def test_cholesky_semidefinite_identity_like():
    assert np.allclose(cholesky(np.diag([4.0, 9.0])), np.diag([2.0, 3.0]))


def test_cholesky_rejects_indefinite():
    with pytest.raises(NotPositiveDefinite):
        cholesky(np.array([[1.0, 2.0], [2.0, 1.0]]))


def test_spectral_radius_complex_pair():
    rot = np.array([[0.0, -0.9], [0.9, 0.0]])
    assert spectral_radius(rot) == pytest.approx(0.9)


def test_stationary_covariance_solves_lyapunov(rng):
    f = rng.standard_normal((4, 4))
    f *= 0.8 / spectral_radius(f)
    b = rng.standard_normal((4, 4))
    q = b @ b.T
    p = stationary_covariance(f, q)
    assert np.allclose(p, p.T)
    assert np.allclose(p - f @ p @ f.T, q, atol=1e-10)


def test_stationary_covariance_scalar():
    # p = q / (1 - a^2)
    assert stationary_covariance(np.array([[0.5]]), np.array([[3.0]]))[0, 0] == pytest.approx(4.0)


def test_stationary_covariance_rejects_unit_root():
    with pytest.raises(NotStationary):
        stationary_covariance(np.array([[1.0]]), np.array([[1.0]]))
