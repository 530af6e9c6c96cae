"""Thresholded estimator: VAR identification from bits ``[z_i(t) >= c_i]``.

Pipeline: bit frequencies give the standard thresholds ``eta_i = c_i / sigma_i``;
binary cross-moments inverted through ``psi`` give the correlations; the
correlation Yule-Walker system gives the unscaled coefficients, which are
rescaled with ``sigma_i / sigma_j = (c_i / c_j) (eta_j / eta_i)``.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .gaussians import psi_inverse, std_normal_quantile
from .model import MomentSet
from .quantize import BinaryRecord
from .yulewalker import RatioMatrix, UnscaledEstimate, rescale, solve_correlation_system

CORR_CLAMP = 1e-7


class SeriesFlag(enum.Enum):
    OK = "ok"
    ALL_ZERO = "all_zero"
    ALL_ONE = "all_one"
    EXACT_HALF = "exact_half"


@dataclass(frozen=True)
class Scheme1Result:
    eta_hat: np.ndarray
    flags: tuple[SeriesFlag, ...]
    sigma_hat: np.ndarray | None = None
    corr_hat: MomentSet | None = None
    clamped: np.ndarray | None = None
    unscaled: UnscaledEstimate | None = None
    ratios: RatioMatrix | None = None
    coeff: np.ndarray | None = None
    noise_cov: np.ndarray | None = None

    @property
    def failed(self) -> bool:
        return any(f is not SeriesFlag.OK for f in self.flags)


def estimate_thresholds(rec: BinaryRecord) -> tuple[np.ndarray, tuple[SeriesFlag, ...]]:
    """``eta_i = -Phi^{-1}(mean of x_i)``, with +/-inf or 0 for degenerate means."""
    means = rec.x_bits.mean(axis=1)
    eta = np.empty(rec.d)
    flags = []
    for i, m in enumerate(means):
        if m == 0.0:
            eta[i], flag = math.inf, SeriesFlag.ALL_ZERO
        elif m == 1.0:
            eta[i], flag = -math.inf, SeriesFlag.ALL_ONE
        else:
            eta[i] = -std_normal_quantile(m)
            flag = SeriesFlag.EXACT_HALF if m == 0.5 else SeriesFlag.OK
        flags.append(flag)
    return eta, tuple(flags)


def binary_cross_moment(rec: BinaryRecord, i: int, j: int, tau: int) -> float:
    """Estimate of ``gamma_{X_i X_j}(tau) + gamma_{1-X_i, 1-X_j}(tau)``."""
    return float(_cross_moments(rec.x_bits, tau)[i, j])


def _cross_moments(bits: np.ndarray, tau: int) -> np.ndarray:
    T = bits.shape[1]
    if not 0 <= tau < T:
        raise ValueError(f"lag {tau} outside [0, {T})")
    x = bits.astype(float)
    mean = x.mean(axis=1)
    now = x[:, tau:]
    past = x[:, : T - tau]
    # [a == b] = a b + (1 - a)(1 - b)
    ones = now @ past.T
    agree = (ones + (T - tau) - now.sum(axis=1)[:, None] - past.sum(axis=1)[None, :] + ones) / (T - tau)
    return agree - np.outer(mean, mean) - np.outer(1.0 - mean, 1.0 - mean)


def estimate_correlations_s1(rec: BinaryRecord, eta_hat, max_lag: int) -> tuple[MomentSet, np.ndarray]:
    """Correlations for lags ``0..max_lag``; returns ``(moments, clamped_mask)``."""
    eta = np.asarray(eta_hat, dtype=float)
    d = rec.d
    corr = np.empty((max_lag + 1, d, d))
    clamped = np.zeros((max_lag + 1, d, d), dtype=bool)
    e1 = np.broadcast_to(eta[:, None], (d, d))
    e2 = np.broadcast_to(eta[None, :], (d, d))
    for tau in range(max_lag + 1):
        half = 0.5 * _cross_moments(rec.x_bits, tau)
        rho, flag = psi_inverse(e1, e2, half)
        corr[tau] = rho
        clamped[tau] = flag
    corr = np.clip(corr, -1.0 + CORR_CLAMP, 1.0 - CORR_CLAMP)
    corr[0][np.diag_indices(d)] = 1.0
    clamped[0][np.diag_indices(d)] = False
    # lag 0 is symmetric by construction; remove bisection round-off
    corr[0] = 0.5 * (corr[0] + corr[0].T)
    return MomentSet(corr=corr), clamped


def estimate_model_s1(rec: BinaryRecord, p: int) -> Scheme1Result:
    if rec.thresholds is None:
        raise ValueError("scheme 1 needs a thresholded record")
    eta, flags = estimate_thresholds(rec)
    if any(f is not SeriesFlag.OK for f in flags):
        return Scheme1Result(eta_hat=eta, flags=flags)
    c = rec.thresholds
    sigma = c / eta
    moments, clamped = estimate_correlations_s1(rec, eta, p)
    unscaled = solve_correlation_system(moments.corr)
    ratios = RatioMatrix(sigma[:, None] / sigma[None, :])
    coeff, noise_rel = rescale(unscaled, ratios)
    return Scheme1Result(
        eta_hat=eta,
        flags=flags,
        sigma_hat=sigma,
        corr_hat=MomentSet(corr=moments.corr, sigmas=sigma),
        clamped=clamped,
        unscaled=unscaled,
        ratios=ratios,
        coeff=coeff,
        noise_cov=noise_rel * sigma[0] ** 2,
    )


def failure_lower_bound(eta_max: float, T: int) -> float:
    """Union-bound lower bound on the probability that some series is all zeros."""
    if eta_max <= 0:
        raise ValueError("eta_max must be positive")
    return 1.0 - T / (eta_max * math.sqrt(2.0 * math.pi)) * math.exp(-0.5 * eta_max**2)
