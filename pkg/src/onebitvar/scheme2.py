"""Threshold-free estimator from sign bits and pairwise magnitude comparisons.

Sign agreement frequencies give the correlations through the arcsine law; the
frequency of ``|z_i| >= |z_j|`` together with the lag-0 correlation gives the
ratio ``sigma_i / sigma_j``.  Only the model class (noise covariance up to a
positive factor) is identifiable; it is reported with the noise trace set to d.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import MissingEdge
from .gaussians import arcsine_correlation, predominance_inverse
from .linalg import sym_eig
from .model import ModelClass, MomentSet
from .quantize import BinaryRecord, SensorGraph
from .yulewalker import RatioMatrix, UnscaledEstimate, rescale, solve_correlation_system


class RatioVariant(str, enum.Enum):
    SIMPLE = "simple"
    OPTIMIZED = "optimized"
    EFFICIENT = "efficient"
    LOG_LSQ = "log_lsq"


@dataclass(frozen=True)
class Scheme2Result:
    corr_hat: MomentSet
    ratios: RatioMatrix
    unscaled: UnscaledEstimate
    model_class_hat: ModelClass
    variant: RatioVariant
    clamped_pairs: tuple[tuple[int, int], ...] = ()

    @property
    def coeff(self) -> np.ndarray:
        return self.model_class_hat.coeff

    @property
    def noise_cov(self) -> np.ndarray:
        return self.model_class_hat.noise_cov_normalized


def _agreement(bits: np.ndarray, tau: int) -> np.ndarray:
    T = bits.shape[1]
    if not 0 <= tau < T:
        raise ValueError(f"lag {tau} outside [0, {T})")
    x = bits.astype(float)
    now = x[:, tau:]
    past = x[:, : T - tau]
    ones = now @ past.T
    agree = 2.0 * ones + (T - tau) - now.sum(axis=1)[:, None] - past.sum(axis=1)[None, :]
    return agree / (T - tau)


def transition_mle(rec: BinaryRecord, i: int, j: int, tau: int) -> float:
    """Fraction of ``t`` with ``x_i(t) == x_j(t - tau)``."""
    return float(_agreement(rec.x_bits, tau)[i, j])


def estimate_correlations_s2(rec: BinaryRecord, max_lag: int) -> MomentSet:
    corr = np.stack([arcsine_correlation(_agreement(rec.x_bits, tau)) for tau in range(max_lag + 1)])
    corr[0][np.diag_indices(rec.d)] = 1.0
    return MomentSet(corr=corr)


def _clamp_frequency(q: float, T: int) -> tuple[float, bool]:
    lo, hi = 1.0 / (2 * T), 1.0 - 1.0 / (2 * T)
    if q < lo:
        return lo, True
    if q > hi:
        return hi, True
    return q, False


def _direct_ratios(rec: BinaryRecord, corr0: np.ndarray, pairs) -> tuple[dict, list]:
    out = {}
    clamped = []
    for i, j in pairs:
        q, hit = _clamp_frequency(float(rec.q_row(i, j).mean()), rec.T)
        if hit:
            clamped.append((i, j))
        rho = float(np.clip(corr0[i, j], -1.0 + 1e-12, 1.0 - 1e-12))
        out[(i, j)] = float(predominance_inverse(q, rho))
    return out, clamped


def chain_ratios(graph: SensorGraph, direct: dict) -> np.ndarray:
    """Full ratio matrix from measured edge ratios ``direct[(i, j)]`` (``i < j``).

    Unmeasured pairs multiply ratios along the BFS shortest path.
    """
    d = graph.d
    r = np.ones((d, d))

    def edge_ratio(a, b):
        return direct[(a, b)] if a < b else 1.0 / direct[(b, a)]

    for i in range(d):
        for j in range(d):
            if i == j:
                continue
            if graph.has_edge(i, j):
                r[i, j] = edge_ratio(i, j)
                continue
            path = graph.shortest_path(i, j)
            r[i, j] = np.prod([edge_ratio(a, b) for a, b in zip(path[:-1], path[1:])])
    return r


def estimate_ratios_simple(rec: BinaryRecord, corr_hat: MomentSet) -> tuple[RatioMatrix, list]:
    """One ratio per measured edge; reverse direction is the reciprocal.

    Pairs without an edge are chained along shortest paths. Returns the ratio
    matrix and the list of edges whose frequency had to be clamped.
    """
    graph = rec.graph
    if graph is None:
        raise MissingEdge("record has no predominance measurements")
    direct, clamped = _direct_ratios(rec, corr_hat.corr[0], graph.edges)
    return RatioMatrix(chain_ratios(graph, direct)), clamped


def ratio_loss_matrix(r) -> np.ndarray:
    """Symmetric ``M`` with ``sigma^T M sigma = sum_{i,j} (sigma_i - r_ij sigma_j)^2``."""
    r = np.asarray(r, dtype=float)
    d = r.shape[0]
    m = -(r + r.T)
    m[np.diag_indices(d)] = (d - 2) + np.sum(r**2, axis=0)
    return m


def optimal_sigmas(r) -> np.ndarray:
    """Unit vector minimizing the ratio loss, oriented so its largest entry is positive."""
    _, vecs = sym_eig(ratio_loss_matrix(r))
    v = vecs[:, 0]
    if v[np.argmax(np.abs(v))] < 0:
        v = -v
    return v


def estimate_ratios_optimized(simple: RatioMatrix) -> RatioMatrix:
    return RatioMatrix.from_sigmas(optimal_sigmas(simple.r))


def estimate_ratios_efficient(rec: BinaryRecord, corr_hat: MomentSet, center: int = 0) -> tuple[RatioMatrix, list]:
    """Ratios chained through one hub sensor: ``r_ij = r_{i,c} / r_{j,c}``."""
    d = rec.d
    spokes = [(min(center, j), max(center, j)) for j in range(d) if j != center]
    missing = [e for e in spokes if e not in rec.edges]
    if missing:
        raise MissingEdge(f"efficient ratios need edges {missing}")
    direct, clamped = _direct_ratios(rec, corr_hat.corr[0], spokes)
    to_center = np.ones(d)
    for j in range(d):
        if j == center:
            continue
        to_center[j] = direct[(j, center)] if j < center else 1.0 / direct[(center, j)]
    return RatioMatrix(to_center[:, None] / to_center[None, :]), clamped


def estimate_ratios_log_lsq(simple: RatioMatrix) -> RatioMatrix:
    """Least squares on ``log sigma_i - log sigma_j = log r_ij`` with ``sum log sigma = 0``."""
    logr = np.log(simple.r)
    d = logr.shape[0]
    # normal equations of sum_{i != j} (t_i - t_j - L_ij)^2 give 2 d t - 2 sum t = sum_j (L_ij - L_ji)
    theta = (logr.sum(axis=1) - logr.sum(axis=0)) / (2.0 * d)
    return RatioMatrix.from_sigmas(np.exp(theta - theta.mean()))


def estimate_model_s2(rec: BinaryRecord, p: int, variant: RatioVariant | str = RatioVariant.SIMPLE) -> Scheme2Result:
    variant = RatioVariant(variant)
    corr = estimate_correlations_s2(rec, p)
    unscaled = solve_correlation_system(corr.corr)
    if variant is RatioVariant.EFFICIENT:
        ratios, clamped = estimate_ratios_efficient(rec, corr)
    else:
        ratios, clamped = estimate_ratios_simple(rec, corr)
        if variant is RatioVariant.OPTIMIZED:
            ratios = estimate_ratios_optimized(ratios)
        elif variant is RatioVariant.LOG_LSQ:
            ratios = estimate_ratios_log_lsq(ratios)
    coeff, noise = rescale(unscaled, ratios)
    d = rec.d
    noise = d * noise / np.trace(noise)
    return Scheme2Result(
        corr_hat=corr,
        ratios=ratios,
        unscaled=unscaled,
        model_class_hat=ModelClass(coeff, noise),
        variant=variant,
        clamped_pairs=tuple(clamped),
    )


def predict_variance_indep(tilde_a, r, var_tilde, var_r, mean_r=None):
    """Variance of ``r_hat * a~_hat`` for independent factors.

    ``Var(a~) Var(r) + Var(a~) E(r)^2 + Var(r) a~^2``; ``E(r)`` defaults to ``r``.
    """
    mean_r = r if mean_r is None else mean_r
    return var_tilde * var_r + var_tilde * mean_r**2 + var_r * tilde_a**2


def predict_ratio_variance_chain(path_ratios, sigma_r2: float) -> tuple[float, float]:
    """Variance of a ratio obtained as a product of independent edge ratios.

    ``path_ratios`` are the true ratios ``r_{k_{l-1}, k_l}`` along the path, each
    estimated with variance ``sigma_r2``. Returns ``(first_order, exact)``.
    """
    r = np.asarray(path_ratios, dtype=float)
    if r.size == 0:
        return 0.0, 0.0
    if np.any(r <= 0):
        raise ValueError("ratios must be positive")
    total = float(np.prod(r))
    first = sigma_r2 * total**2 * float(np.sum(1.0 / r**2))
    exact = float(np.prod(sigma_r2 + r**2) - np.prod(r**2))
    return first, exact
