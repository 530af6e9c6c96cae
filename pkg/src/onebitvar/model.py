"""Gaussian VAR(d, p) models: construction, true moments, simulation, JSON."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import FormatError, GenerationTimeout, NotStationary
from .linalg import TOL, cholesky, spectral_radius, stationary_covariance


@dataclass(frozen=True)
class VarModel:
    """Zero-mean VAR model ``z(t) = sum_s A_s z(t - s) + e(t)``, ``e ~ N(0, noise_cov)``.

    ``coeff`` has shape ``(p, d, d)``.
    """

    coeff: np.ndarray
    noise_cov: np.ndarray
    spectral_radius: float = field(init=False)

    def __post_init__(self):
        coeff = np.array(self.coeff, dtype=float)
        if coeff.ndim == 2:
            coeff = coeff[None]
        noise = np.array(self.noise_cov, dtype=float)
        if coeff.ndim != 3 or coeff.shape[1] != coeff.shape[2] or coeff.shape[0] < 1:
            raise ValueError(f"coeff must have shape (p, d, d), got {coeff.shape}")
        d = coeff.shape[1]
        if noise.shape != (d, d):
            raise ValueError(f"noise_cov must be {d}x{d}, got {noise.shape}")
        if not (np.all(np.isfinite(coeff)) and np.all(np.isfinite(noise))):
            raise ValueError("model has non-finite entries")
        if np.max(np.abs(noise - noise.T)) > TOL.symmetry:
            raise ValueError("noise_cov is not symmetric")
        if np.min(np.linalg.eigvalsh(noise)) < -1e-12:
            raise ValueError("noise_cov is not positive semi-definite")
        coeff.setflags(write=False)
        noise.setflags(write=False)
        object.__setattr__(self, "coeff", coeff)
        object.__setattr__(self, "noise_cov", noise)
        object.__setattr__(self, "spectral_radius", spectral_radius(companion_form(self)[0]))

    @property
    def d(self) -> int:
        return self.coeff.shape[1]

    @property
    def p(self) -> int:
        return self.coeff.shape[0]

    @property
    def is_stationary(self) -> bool:
        return self.spectral_radius < 1.0 - TOL.stationarity_margin

    def model_class(self) -> "ModelClass":
        return ModelClass(self.coeff, self.d * self.noise_cov / np.trace(self.noise_cov))


@dataclass(frozen=True)
class ModelClass:
    """Coefficients plus a noise covariance normalized to trace ``d``."""

    coeff: np.ndarray
    noise_cov_normalized: np.ndarray

    def __post_init__(self):
        coeff = np.array(self.coeff, dtype=float)
        noise = np.array(self.noise_cov_normalized, dtype=float)
        d = noise.shape[0]
        if abs(np.trace(noise) - d) > 1e-9:
            raise ValueError(f"normalized noise trace is {np.trace(noise)}, expected {d}")
        object.__setattr__(self, "coeff", coeff)
        object.__setattr__(self, "noise_cov_normalized", noise)


@dataclass(frozen=True)
class MomentSet:
    """Lagged covariances ``gamma[tau] = E[z(t) z(t - tau)^T]`` and correlations.

    ``gamma`` is ``None`` when only correlations are known (binary estimators);
    ``sigmas`` may likewise be ``None``.
    """

    corr: np.ndarray
    gamma: np.ndarray | None = None
    sigmas: np.ndarray | None = None

    @classmethod
    def from_covariances(cls, gamma) -> "MomentSet":
        gamma = np.asarray(gamma, dtype=float)
        sigmas = np.sqrt(np.diag(gamma[0]))
        scale = np.outer(sigmas, sigmas)
        return cls(corr=gamma / scale, gamma=gamma, sigmas=sigmas)

    @property
    def max_lag(self) -> int:
        return self.corr.shape[0] - 1


def companion_form(m: VarModel) -> tuple[np.ndarray, np.ndarray]:
    """Block companion matrix and extended noise covariance of the stacked VAR(1)."""
    p, d = m.coeff.shape[0], m.coeff.shape[1]
    big = np.zeros((p * d, p * d))
    big[:d, :] = np.concatenate(list(m.coeff), axis=1)
    if p > 1:
        big[d:, :-d] = np.eye((p - 1) * d)
    noise = np.zeros((p * d, p * d))
    noise[:d, :d] = m.noise_cov
    return big, noise


def true_moments(m: VarModel, max_lag: int | None = None) -> MomentSet:
    """Exact lagged covariances for lags ``0..max_lag`` (default ``p``)."""
    if max_lag is None:
        max_lag = m.p
    if not m.is_stationary:
        raise NotStationary(f"spectral radius {m.spectral_radius:.6f}")
    d, p = m.d, m.p
    big, noise = companion_form(m)
    stacked = stationary_covariance(big, noise)
    gamma = np.zeros((max(max_lag, p - 1) + 1, d, d))
    # Block (0, k) of the stacked covariance is E[z(t) z(t - k)^T].
    for k in range(p):
        gamma[k] = stacked[:d, k * d:(k + 1) * d]
    for tau in range(p, max_lag + 1):
        gamma[tau] = sum(m.coeff[s] @ gamma[tau - 1 - s] for s in range(p))
    return MomentSet.from_covariances(gamma[: max_lag + 1])


def default_burn_in(m: VarModel) -> int:
    margin = max(1.0 - m.spectral_radius, 1e-3)
    return max(500, math.ceil(10 * m.p / margin))


def _noise_stream(seed, n: int, chol: np.ndarray) -> np.ndarray:
    rng = np.random.Generator(np.random.PCG64(seed))
    return rng.standard_normal((n, chol.shape[0])) @ chol.T


def simulate_batch(m: VarModel, T: int, seeds: Sequence, burn_in: int | None = None) -> np.ndarray:
    """Simulate one trajectory per seed; returns an array of shape ``(len(seeds), d, T)``.

    Each trajectory depends only on its own seed, so batching never changes results.
    Seeds may be ints or ``numpy.random.SeedSequence`` objects.
    """
    if not m.is_stationary:
        raise NotStationary(f"spectral radius {m.spectral_radius:.6f}")
    if T < 1:
        raise ValueError("T must be positive")
    if burn_in is None:
        burn_in = default_burn_in(m)
    d, p = m.d, m.p
    chol = cholesky(m.noise_cov)
    total = T + burn_in
    noise = np.stack([_noise_stream(s, total, chol) for s in seeds])  # (n, total, d)
    n = noise.shape[0]
    z = np.zeros((n, total + p, d))
    coeff_t = np.ascontiguousarray(np.transpose(m.coeff, (0, 2, 1)))
    for t in range(total):
        acc = noise[:, t].copy()
        for s in range(p):
            acc += z[:, t + p - 1 - s] @ coeff_t[s]
        z[:, t + p] = acc
    return np.transpose(z[:, p + burn_in:], (0, 2, 1)).copy()


def simulate(m: VarModel, T: int, burn_in: int | None = None, seed=0) -> np.ndarray:
    """Trajectory of shape ``(d, T)`` started from zero, with ``burn_in`` steps discarded."""
    return simulate_batch(m, T, [seed], burn_in)[0]


def random_model(
    d: int,
    seed=0,
    spectral_band: tuple[float, float] = (0.5, 0.85),
    max_draws: int = 100_000,
) -> VarModel:
    """Random VAR(d, 1) with identity noise, accepted when its spectral radius is in the band.

    Proposals have i.i.d. ``N(0, 1/d)`` entries.
    """
    lo, hi = spectral_band
    if not 0.0 < lo < hi < 1.0:
        raise ValueError(f"bad spectral band {spectral_band}")
    rng = np.random.Generator(np.random.PCG64(seed))
    scale = 1.0 / math.sqrt(d)
    for _ in range(max_draws):
        a = rng.standard_normal((d, d)) * scale
        rad = spectral_radius(a)
        if lo <= rad <= hi:
            return VarModel(a[None], np.eye(d))
    raise GenerationTimeout(f"no model in band {spectral_band} after {max_draws} draws")


def model_to_dict(m: VarModel) -> dict:
    return {
        "d": m.d,
        "p": m.p,
        "A": [a.tolist() for a in m.coeff],
        "Sigma_E": m.noise_cov.tolist(),
    }


def model_from_dict(obj: dict) -> VarModel:
    try:
        d, p = int(obj["d"]), int(obj["p"])
        coeff = np.array(obj["A"], dtype=float)
        noise = np.array(obj["Sigma_E"], dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"bad model object: {exc}") from exc
    if coeff.ndim == 2 and p == 1:
        coeff = coeff[None]
    if coeff.shape != (p, d, d) or noise.shape != (d, d):
        raise FormatError(f"model shapes {coeff.shape}, {noise.shape} disagree with d={d}, p={p}")
    return VarModel(coeff, noise)


def model_to_json(m: VarModel) -> str:
    return json.dumps(model_to_dict(m))


def model_from_json(text: str) -> VarModel:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"invalid JSON: {exc}") from exc
    return model_from_dict(obj)
