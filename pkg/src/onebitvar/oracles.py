"""Brute-force reference checks for the Gaussian functions and the moment equations.

These are slow, independent computations (adaptive quadrature, Monte-Carlo
frequencies, exact moments) that the fast implementations must agree with.
"""
from __future__ import annotations

import itertools

import numpy as np
from scipy import integrate

from .gaussians import (
    arcsine_probability,
    bivariate_pdf,
    predominance_inverse,
    predominance_probability,
    psi,
    psi_inverse,
    std_normal_cdf,
    std_normal_quantile,
)
from .model import VarModel, true_moments
from .yulewalker import solve_covariance_system

ETA_GRID = (-2.0, -1.0, 0.0, 0.5, 2.0)
RHO_GRID = (-0.99, -0.9, -0.6, -0.3, 0.0, 0.3, 0.6, 0.9, 0.99)


def psi_by_quadrature(eta1: float, eta2: float, rho: float) -> float:
    """Integral of the bivariate density over correlation, by adaptive quadrature."""
    if rho == 0.0:
        return 0.0
    val, _ = integrate.quad(lambda r: float(bivariate_pdf(eta1, eta2, r)), 0.0, rho,
                            epsabs=1e-14, epsrel=1e-12, limit=200)
    return val


def psi_quadrature_error(etas=ETA_GRID, rhos=RHO_GRID) -> float:
    worst = 0.0
    for e1, e2, r in itertools.product(etas, etas, rhos):
        worst = max(worst, abs(float(psi(e1, e2, r)) - psi_by_quadrature(e1, e2, r)))
    return worst


def _pairs(rng: np.random.Generator, rho: float, n: int) -> tuple[np.ndarray, np.ndarray]:
    u = rng.standard_normal(n)
    v = rng.standard_normal(n)
    return u, rho * u + np.sqrt(1.0 - rho**2) * v


def mc_psi_zscores(draws: int, seed: int = 0, etas=(-1.0, 0.0, 0.7), rhos=(-0.8, -0.3, 0.4, 0.9)) -> np.ndarray:
    """Monte-Carlo z-scores of ``2 psi`` as the excess agreement of thresholded bits."""
    rng = np.random.Generator(np.random.PCG64(seed))
    out = []
    for rho in rhos:
        z1, z2 = _pairs(rng, rho, draws)
        for e1, e2 in itertools.product(etas, etas):
            agree = (z1 >= e1) == (z2 >= e2)
            q1, q2 = 1 - std_normal_cdf(e1), 1 - std_normal_cdf(e2)
            base = q1 * q2 + (1 - q1) * (1 - q2)
            p = float(agree.mean())
            se = np.sqrt(max(p * (1 - p), 1e-300) / draws)
            out.append((p - base - 2.0 * float(psi(e1, e2, rho))) / se)
    return np.array(out)


def mc_arcsine_zscores(draws: int, seed: int = 1, rhos=(-0.9, -0.5, 0.0, 0.3, 0.8)) -> np.ndarray:
    rng = np.random.Generator(np.random.PCG64(seed))
    out = []
    for rho in rhos:
        z1, z2 = _pairs(rng, rho, draws)
        p_exact = float(arcsine_probability(rho))
        p = float(((z1 >= 0) & (z2 >= 0)).mean())
        out.append((p - p_exact) / np.sqrt(p_exact * (1 - p_exact) / draws))
    return np.array(out)


def mc_predominance_zscores(draws: int, seed: int = 2, ratios=(0.5, 1.0, 2.0), rhos=(-0.7, 0.0, 0.5)) -> np.ndarray:
    rng = np.random.Generator(np.random.PCG64(seed))
    out = []
    for rho in rhos:
        z1, z2 = _pairs(rng, rho, draws)
        for r in ratios:
            p_exact = float(predominance_probability(r, rho))
            p = float((np.abs(r * z1) >= np.abs(z2)).mean())
            out.append((p - p_exact) / np.sqrt(p_exact * (1 - p_exact) / draws))
    return np.array(out)


def round_trip_errors() -> dict[str, float]:
    """Largest round-trip error of each inverse map on fixed grids."""
    probs = np.concatenate([np.logspace(-12, -1, 12), np.linspace(0.05, 0.95, 19), 1 - np.logspace(-12, -1, 12)])
    quantile = float(np.max(np.abs(std_normal_cdf(std_normal_quantile(probs)) - probs) / probs.clip(max=1 - probs)))

    etas = np.array([-1.5, -0.5, 0.0, 0.3, 1.0])
    rhos = np.linspace(-0.9, 0.9, 13)
    e1, e2, rr = (a.ravel() for a in np.meshgrid(etas, etas, rhos, indexing="ij"))
    back, _ = psi_inverse(e1, e2, psi(e1, e2, rr))
    psi_err = float(np.max(np.abs(back - rr)))

    ratio = np.array([0.1, 0.5, 1.0, 1.7, 5.0, 20.0])
    cors = np.array([-0.95, -0.5, 0.0, 0.4, 0.95])
    r, c = (a.ravel() for a in np.meshgrid(ratio, cors, indexing="ij"))
    pred_err = float(np.max(np.abs(predominance_inverse(predominance_probability(r, c), c) - r) / r))
    return {"quantile": quantile, "psi_inverse": psi_err, "predominance_inverse": pred_err}


def random_stationary_model(d: int, p: int, rng: np.random.Generator, max_radius: float = 0.95) -> VarModel:
    """Random VAR with spectral radius below ``max_radius`` and a random SPD noise covariance."""
    while True:
        coeff = rng.standard_normal((p, d, d)) / (np.sqrt(d) * p)
        b = rng.standard_normal((d, d))
        noise = b @ b.T + 0.5 * np.eye(d)
        m = VarModel(coeff, noise)
        if m.spectral_radius < max_radius:
            return m


def yule_walker_recovery_error(count: int = 100, seed: int = 3, orders=(1, 2, 3)) -> float:
    rng = np.random.Generator(np.random.PCG64(seed))
    worst = 0.0
    for k in range(count):
        p = orders[k % len(orders)]
        d = int(rng.integers(2, 5))
        m = random_stationary_model(d, p, rng)
        coeff, noise = solve_covariance_system(true_moments(m).gamma)
        worst = max(worst, float(np.max(np.abs(coeff - m.coeff))), float(np.max(np.abs(noise - m.noise_cov))))
    return worst


def run_all(draws: int = 1_000_000, seed: int = 0):
    """Yield ``(name, passed, detail)`` for each oracle."""
    err = psi_quadrature_error()
    yield "psi vs adaptive quadrature", err <= 1e-7, f"max |diff| {err:.2e}"
    for name, fn, off in (("psi vs Monte-Carlo", mc_psi_zscores, 0),
                          ("arcsine law vs Monte-Carlo", mc_arcsine_zscores, 1),
                          ("predominance vs Monte-Carlo", mc_predominance_zscores, 2)):
        z = fn(draws, seed=seed + off)
        yield name, bool(np.max(np.abs(z)) <= 4.0), f"max |z| {np.max(np.abs(z)):.2f} over {z.size} cells"
    for name, e in round_trip_errors().items():
        yield f"{name} round trip", e <= 1e-8, f"max error {e:.2e}"
    e = yule_walker_recovery_error()
    yield "Yule-Walker exact recovery", e <= 1e-8, f"max error {e:.2e}"
