"""Small dense linear algebra: LU solve, Jacobi eigensolver, Cholesky, Lyapunov.

Everything here works on 2-D ``numpy`` float arrays and returns new arrays;
inputs are never modified.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    NoConvergence,
    NotPositiveDefinite,
    NotStationary,
    NotSymmetric,
    SingularMatrix,
)


@dataclass(frozen=True)
class Tolerances:
    pivot: float = 1e-12
    symmetry: float = 1e-10
    jacobi_offdiag: float = 1e-12
    jacobi_max_sweeps: int = 100
    cholesky_pivot: float = 1e-12
    stationarity_margin: float = 1e-9


TOL = Tolerances()


def _as_matrix(a, name: str) -> np.ndarray:
    arr = np.array(a, dtype=float, copy=True)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1) if name == "B" else arr.reshape(1, -1)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be a 2-D matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} has non-finite entries")
    return arr


def lu_factor(a) -> tuple[np.ndarray, np.ndarray]:
    """Partial-pivoting LU factorization packed in one array.

    Returns ``(lu, perm)`` with ``a[perm] == L @ U``, ``L`` unit lower triangular
    stored below the diagonal of ``lu``.
    """
    lu = _as_matrix(a, "A")
    n = lu.shape[0]
    if lu.shape != (n, n):
        raise ValueError(f"A must be square, got shape {lu.shape}")
    perm = np.arange(n)
    for k in range(n):
        p = k + int(np.argmax(np.abs(lu[k:, k])))
        if abs(lu[p, k]) < TOL.pivot:
            raise SingularMatrix(f"pivot {lu[p, k]:.3e} below {TOL.pivot:g} at column {k}")
        if p != k:
            lu[[k, p]] = lu[[p, k]]
            perm[[k, p]] = perm[[p, k]]
        lu[k + 1:, k] /= lu[k, k]
        lu[k + 1:, k + 1:] -= np.outer(lu[k + 1:, k], lu[k, k + 1:])
    return lu, perm


def lu_solve(lu: np.ndarray, perm: np.ndarray, b) -> np.ndarray:
    """Solve with a factorization from :func:`lu_factor`; a 1-D ``b`` gives a 1-D result."""
    vector = np.ndim(b) == 1
    x = _as_matrix(b, "B")[perm]
    n = lu.shape[0]
    for k in range(n):
        x[k + 1:] -= np.outer(lu[k + 1:, k], x[k])
    for k in range(n - 1, -1, -1):
        x[k] /= lu[k, k]
        x[:k] -= np.outer(lu[:k, k], x[k])
    return x[:, 0] if vector else x


def solve_linear(a, b) -> np.ndarray:
    """Solve ``A X = B`` by LU with partial pivoting.

    Raises :class:`SingularMatrix` when a pivot falls below ``TOL.pivot``.
    """
    a = _as_matrix(a, "A")
    if np.shape(b)[0] != a.shape[0]:
        raise ValueError(f"B has {np.shape(b)[0]} rows, A has {a.shape[0]}")
    lu, perm = lu_factor(a)
    return lu_solve(lu, perm, b)


def right_divide(b, a) -> np.ndarray:
    """``B A^{-1}``, computed as ``(A^T \\ B^T)^T``."""
    return solve_linear(np.asarray(a, dtype=float).T, np.asarray(b, dtype=float).T).T


def sym_eig(s) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.

    Returns ``(eigenvalues, eigenvectors)`` with eigenvalues ascending and
    eigenvectors as orthonormal columns, so ``S V = V diag(w)``.
    """
    a = _as_matrix(s, "S")
    n = a.shape[0]
    if a.shape != (n, n):
        raise ValueError(f"S must be square, got shape {a.shape}")
    asym = np.max(np.abs(a - a.T)) if n else 0.0
    if asym > TOL.symmetry:
        raise NotSymmetric(f"max |S - S^T| = {asym:.3e}")
    a = 0.5 * (a + a.T)
    v = np.eye(n)
    scale = max(1.0, float(np.linalg.norm(a)))
    for _ in range(TOL.jacobi_max_sweeps):
        off = np.sqrt(np.sum(np.tril(a, -1) ** 2) * 2.0)
        if off < TOL.jacobi_offdiag * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                if theta == 0.0:
                    t = 1.0
                c = 1.0 / np.sqrt(t * t + 1.0)
                sn = t * c
                # a <- J^T a J with J the (p, q) rotation
                ap = a[:, p].copy()
                aq = a[:, q].copy()
                a[:, p] = c * ap - sn * aq
                a[:, q] = sn * ap + c * aq
                ap = a[p, :].copy()
                aq = a[q, :].copy()
                a[p, :] = c * ap - sn * aq
                a[q, :] = sn * ap + c * aq
                a[p, q] = a[q, p] = 0.0
                vp = v[:, p].copy()
                vq = v[:, q].copy()
                v[:, p] = c * vp - sn * vq
                v[:, q] = sn * vp + c * vq
    else:
        raise NoConvergence(f"Jacobi did not converge in {TOL.jacobi_max_sweeps} sweeps")
    w = np.diag(a).copy()
    order = np.argsort(w, kind="stable")
    return w[order], v[:, order]


def cholesky(s) -> np.ndarray:
    """Lower-triangular ``L`` with ``L L^T = S``."""
    a = _as_matrix(s, "S")
    n = a.shape[0]
    if a.shape != (n, n):
        raise ValueError(f"S must be square, got shape {a.shape}")
    if n and np.max(np.abs(a - a.T)) > TOL.symmetry:
        raise NotSymmetric("cholesky needs a symmetric matrix")
    low = np.zeros_like(a)
    for j in range(n):
        d = a[j, j] - low[j, :j] @ low[j, :j]
        if d <= TOL.cholesky_pivot:
            raise NotPositiveDefinite(f"pivot {d:.3e} at index {j}")
        low[j, j] = np.sqrt(d)
        low[j + 1:, j] = (a[j + 1:, j] - low[j + 1:, :j] @ low[j, :j]) / low[j, j]
    return low


def spectral_radius(f) -> float:
    f = _as_matrix(f, "F")
    if f.size == 0:
        return 0.0
    return float(np.max(np.abs(np.linalg.eigvals(f))))


def stationary_covariance(companion, noise_cov) -> np.ndarray:
    """Solve the discrete Lyapunov equation ``P = F P F^T + Q``.

    Uses the vectorized form ``(I - F kron F) vec(P) = vec(Q)``; intended for
    companion dimensions up to a few dozen.
    """
    f = _as_matrix(companion, "F")
    q = _as_matrix(noise_cov, "Q")
    n = f.shape[0]
    if f.shape != (n, n) or q.shape != (n, n):
        raise ValueError("companion and noise covariance must be square and the same size")
    rho = spectral_radius(f)
    if rho >= 1.0 - TOL.stationarity_margin:
        raise NotStationary(f"spectral radius {rho:.6f} >= 1")
    system = np.eye(n * n) - np.kron(f, f)
    p = solve_linear(system, q.reshape(-1, 1)).reshape(n, n)
    return 0.5 * (p + p.T)
