"""Block Yule-Walker systems, ratio rescaling, and the continuous-data baseline.

With ``G(tau) = E[z(t) z(t - tau)^T]`` the equations are

    G(tau) = sum_s A_s G(tau - s)            tau = 1..p
    G(0)   = sum_s A_s G(s)^T + Sigma_E

which in block form read ``(A_1 .. A_p Sigma_E) @ big = (G(1) .. G(p) G(0))``.
The same assembly with correlations in place of covariances yields the
unscaled coefficients ``D^{-1/2} A_s D^{1/2}`` and ``D^{-1/2} Sigma_E D^{-1/2}``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SingularMatrix, SingularSystem
from .linalg import right_divide

COND_LIMIT = 1e10


@dataclass(frozen=True)
class UnscaledEstimate:
    a_tilde: np.ndarray  # (p, d, d)
    sigma_tilde: np.ndarray

    @property
    def p(self) -> int:
        return self.a_tilde.shape[0]


@dataclass(frozen=True)
class RatioMatrix:
    """``r[i, j]`` estimates ``sigma_i / sigma_j``."""

    r: np.ndarray

    def __post_init__(self):
        r = np.array(self.r, dtype=float)
        if r.ndim != 2 or r.shape[0] != r.shape[1]:
            raise ValueError("ratio matrix must be square")
        r.setflags(write=False)
        object.__setattr__(self, "r", r)

    @classmethod
    def from_sigmas(cls, sigmas) -> "RatioMatrix":
        s = np.asarray(sigmas, dtype=float)
        return cls(s[:, None] / s[None, :])

    @classmethod
    def ones(cls, d: int) -> "RatioMatrix":
        return cls(np.ones((d, d)))

    def is_reciprocal(self, tol: float = 1e-9) -> bool:
        return bool(np.all(np.abs(self.r * self.r.T - 1.0) <= tol))


def block_system(moments, corner=None) -> tuple[np.ndarray, np.ndarray]:
    """Assemble ``(rhs, big)`` from lag matrices ``moments[0..p]``.

    ``rhs`` is ``d x d(p+1)``; ``big`` is ``d(p+1)`` square with ``corner`` (identity
    by default) in its bottom-right block.
    """
    m = np.asarray(moments, dtype=float)
    p = m.shape[0] - 1
    d = m.shape[1]
    if p < 1:
        raise ValueError("need lags 0..p with p >= 1")

    def lag(k):
        return m[k] if k >= 0 else m[-k].T

    big = np.zeros((d * (p + 1), d * (p + 1)))
    for s in range(p):
        for tau in range(p):
            big[s * d:(s + 1) * d, tau * d:(tau + 1) * d] = lag(tau - s)
        big[s * d:(s + 1) * d, p * d:] = m[s + 1].T
    big[p * d:, p * d:] = np.eye(d) if corner is None else corner
    rhs = np.concatenate([m[k] for k in range(1, p + 1)] + [m[0]], axis=1)
    return rhs, big


def _solve_blocks(moments) -> tuple[np.ndarray, np.ndarray]:
    rhs, big = block_system(moments)
    d = rhs.shape[0]
    p = rhs.shape[1] // d - 1
    if not np.all(np.isfinite(big)):
        raise SingularSystem("non-finite moments")
    cond = np.linalg.cond(big)
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise SingularSystem(f"block matrix condition number {cond:.3e} exceeds {COND_LIMIT:g}")
    try:
        sol = right_divide(rhs, big)
    except SingularMatrix as exc:
        raise SingularSystem(str(exc)) from exc
    coeff = np.stack([sol[:, s * d:(s + 1) * d] for s in range(p)])
    return coeff, sol[:, p * d:]


def solve_covariance_system(gamma) -> tuple[np.ndarray, np.ndarray]:
    """Coefficients ``(p, d, d)`` and noise covariance from exact or empirical covariances."""
    return _solve_blocks(gamma)


def solve_correlation_system(corr) -> UnscaledEstimate:
    coeff, sigma = _solve_blocks(corr)
    return UnscaledEstimate(coeff, sigma)


def rescale(u: UnscaledEstimate, r: RatioMatrix) -> tuple[np.ndarray, np.ndarray]:
    """Apply ``a_ij = r_ij * a~_ij`` per lag and ``s_ij = r_i0 r_j0 s~_ij``.

    The noise covariance comes out divided by the variance of the first series.
    """
    ratios = r.r
    coeff = u.a_tilde * ratios[None]
    col = ratios[:, 0]
    return coeff, np.outer(col, col) * u.sigma_tilde


def empirical_covariances(traj, max_lag: int) -> np.ndarray:
    """``(1/(T - tau)) sum_t z(t) z(t - tau)^T`` for ``tau = 0..max_lag`` (no demeaning)."""
    z = np.asarray(traj, dtype=float)
    T = z.shape[1]
    return np.stack([z[:, tau:] @ z[:, : T - tau].T / (T - tau) for tau in range(max_lag + 1)])


def mlse_continuous(traj, p: int) -> tuple[np.ndarray, np.ndarray]:
    """Yule-Walker estimate from the raw (unquantized) trajectory."""
    z = np.asarray(traj, dtype=float)
    d, T = z.shape
    if T <= d * (p + 1):
        raise ValueError(f"need T > d(p+1) = {d * (p + 1)}, got {T}")
    return solve_covariance_system(empirical_covariances(z, p))
