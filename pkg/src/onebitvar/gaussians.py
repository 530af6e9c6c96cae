"""Scalar and bivariate Gaussian functions used by both estimators.

The central object is the generalized arcsine function

    psi(eta1, eta2, rho) = integral_0^rho phi2(eta1, eta2 | x) dx,

which equals ``P(Z1 >= eta1, Z2 >= eta2) - P(Z1 >= eta1) P(Z2 >= eta2)`` for a
standard Gaussian pair with correlation ``rho``.  It is evaluated with
composite Gauss-Legendre rules anchored at 0, +1 and -1 and inverted by
bisection.

All functions broadcast over numpy arrays.
"""
from __future__ import annotations

import numpy as np
from scipy import special

from .errors import DomainError

_NODES, _WEIGHTS = np.polynomial.legendre.leggauss(5)
_PANELS = 8
_END_PANELS = 24
# Beyond this |rho| the integral is taken from the nearest endpoint.
_SWITCH = 0.5
# Bisection bracket for psi_inverse.
RHO_EDGE = 1e-12


def _composite_rule(n_panels: int = _PANELS) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights of a composite 5-point rule on [0, 1]."""
    edges = np.linspace(0.0, 1.0, n_panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    nodes = (mid[:, None] + half[:, None] * _NODES[None, :]).ravel()
    weights = (half[:, None] * _WEIGHTS[None, :]).ravel()
    return nodes, weights


_UNIT_NODES, _UNIT_WEIGHTS = _composite_rule()


def std_normal_cdf(x):
    return special.ndtr(x)


def std_normal_quantile(p):
    """Inverse of the standard normal CDF; raises outside the open interval (0, 1)."""
    p_arr = np.asarray(p, dtype=float)
    if np.any(~(p_arr > 0.0) | ~(p_arr < 1.0)):
        raise DomainError("std_normal_quantile needs 0 < p < 1")
    out = special.ndtri(p_arr)
    return out if np.ndim(out) else float(out)


def bivariate_pdf(eta1, eta2, rho):
    """Density of a standard Gaussian pair with correlation ``rho`` at (eta1, eta2)."""
    rho = np.asarray(rho, dtype=float)
    if np.any(np.abs(rho) >= 1.0):
        raise DomainError("bivariate_pdf needs |rho| < 1")
    eta1 = np.asarray(eta1, dtype=float)
    eta2 = np.asarray(eta2, dtype=float)
    one_m = 1.0 - rho * rho
    quad = eta1 * eta1 - 2.0 * rho * eta1 * eta2 + eta2 * eta2
    out = np.exp(-quad / (2.0 * one_m)) / (2.0 * np.pi * np.sqrt(one_m))
    return out if np.ndim(out) else float(out)


def psi_at_one(eta1, eta2):
    """psi(eta1, eta2, 1): the comonotone pair minus the independent product."""
    eta1 = np.asarray(eta1, dtype=float)
    eta2 = np.asarray(eta2, dtype=float)
    both = special.ndtr(-np.maximum(eta1, eta2))
    return both - special.ndtr(-eta1) * special.ndtr(-eta2)


def psi_at_minus_one(eta1, eta2):
    """psi(eta1, eta2, -1): P(eta1 <= Z <= -eta2) minus the independent product."""
    eta1 = np.asarray(eta1, dtype=float)
    eta2 = np.asarray(eta2, dtype=float)
    both = np.maximum(0.0, special.ndtr(-eta2) - special.ndtr(eta1))
    return both - special.ndtr(-eta1) * special.ndtr(-eta2)


def _from_zero(eta1, eta2, rho):
    x = rho[..., None] * _UNIT_NODES
    quad = eta1[..., None] ** 2 - 2.0 * x * (eta1 * eta2)[..., None] + eta2[..., None] ** 2
    one_m = 1.0 - x * x
    f = np.exp(-quad / (2.0 * one_m)) / (2.0 * np.pi * np.sqrt(one_m))
    return rho * (f @ _UNIT_WEIGHTS)


def _graded_rule(span, width):
    """Composite 5-point rule on [0, span] with geometrically growing panels.

    The first panel is ``[0, width]``; the rest grow by a constant ratio up to
    ``span``.  Returns per-element nodes and weights, shape ``(..., 5 * n)``.
    """
    width = np.minimum(width, span / _END_PANELS)
    ratio = (span / width) ** (1.0 / (_END_PANELS - 1))
    k = np.arange(_END_PANELS)
    edges = np.concatenate(
        [np.zeros(span.shape + (1,)), width[..., None] * ratio[..., None] ** k], axis=-1
    )
    edges[..., -1] = span
    half = 0.5 * np.diff(edges, axis=-1)
    mid = 0.5 * (edges[..., :-1] + edges[..., 1:])
    nodes = (mid[..., None] + half[..., None] * _NODES).reshape(span.shape + (5 * _END_PANELS,))
    weights = (half[..., None] * _WEIGHTS).reshape(span.shape + (5 * _END_PANELS,))
    return nodes, weights


def _from_end(eta1, eta2, rho, sign):
    # x = sign * (1 - u^2) removes the 1/sqrt(1 - x^2) endpoint singularity.  What
    # is left behaves like exp(-gap^2 / (4 u^2)), a step of width ~|gap| near u = 0,
    # so the panels are graded geometrically from that width.
    span = np.maximum(np.sqrt(np.maximum(0.0, 1.0 - sign * rho)), 1e-150)
    gap = np.abs(eta1 - sign * eta2)
    u, w = _graded_rule(span, np.maximum(gap / 16.0, 1e-9 * span))
    u2 = u * u
    two_m = 2.0 - u2
    prod = (eta1 * eta2)[..., None]
    expo = gap[..., None] ** 2 / (2.0 * u2 * two_m) + sign * prod / two_m
    g = np.exp(-expo) / (np.pi * np.sqrt(two_m))
    tail = np.sum(g * w, axis=-1)
    if sign > 0:
        return psi_at_one(eta1, eta2) - tail
    return psi_at_minus_one(eta1, eta2) + tail


def psi(eta1, eta2, rho):
    """Generalized arcsine function, strictly increasing in ``rho`` on [-1, 1]."""
    eta1, eta2, rho = np.broadcast_arrays(
        np.asarray(eta1, dtype=float), np.asarray(eta2, dtype=float), np.asarray(rho, dtype=float)
    )
    if np.any(np.abs(rho) > 1.0):
        raise DomainError("psi needs -1 <= rho <= 1")
    out = np.empty(rho.shape)
    up = rho > _SWITCH
    down = rho < -_SWITCH
    mid = ~(up | down)
    out[mid] = _from_zero(eta1[mid], eta2[mid], rho[mid])
    out[up] = _from_end(eta1[up], eta2[up], rho[up], 1.0)
    out[down] = _from_end(eta1[down], eta2[down], rho[down], -1.0)
    return out if out.ndim else float(out)


def psi_inverse(eta1, eta2, v, tol: float = 1e-15):
    """Invert ``psi`` in ``rho`` by bisection on ``[-1 + 1e-12, 1 - 1e-12]``.

    Values outside the reachable range are clamped to the bracket ends.
    Returns ``(rho, clamped)``; ``clamped`` marks those entries.
    """
    eta1, eta2, v = np.broadcast_arrays(
        np.asarray(eta1, dtype=float), np.asarray(eta2, dtype=float), np.asarray(v, dtype=float)
    )
    lo = np.full(v.shape, -1.0 + RHO_EDGE)
    hi = np.full(v.shape, 1.0 - RHO_EDGE)
    v_lo = psi(eta1, eta2, lo)
    v_hi = psi(eta1, eta2, hi)
    below = v <= v_lo
    above = v >= v_hi
    clamped = below | above
    for _ in range(200):
        if np.all(hi - lo <= tol):
            break
        mid = 0.5 * (lo + hi)
        go_up = psi(eta1, eta2, mid) < v
        lo = np.where(go_up, mid, lo)
        hi = np.where(go_up, hi, mid)
    rho = 0.5 * (lo + hi)
    rho = np.where(below, -1.0 + RHO_EDGE, np.where(above, 1.0 - RHO_EDGE, rho))
    if rho.ndim == 0:
        return float(rho), bool(clamped)
    return rho, clamped


def arcsine_probability(rho):
    """P(Z1 >= 0, Z2 >= 0) for a centered Gaussian pair with correlation ``rho``."""
    return 0.25 + np.arcsin(rho) / (2.0 * np.pi)


def arcsine_correlation(lam):
    """Correlation from the probability ``lam`` that two sign bits agree."""
    lam = np.asarray(lam, dtype=float)
    if np.any((lam < 0.0) | (lam > 1.0)):
        raise DomainError("arcsine_correlation needs 0 <= lambda <= 1")
    out = np.sin(np.pi * (lam - 0.5))
    return out if out.ndim else float(out)


def predominance_probability(r, rho):
    """P(|Z1| >= |Z2|) for centered Gaussians with ``sigma1/sigma2 = r``."""
    r = np.asarray(r, dtype=float)
    rho = np.asarray(rho, dtype=float)
    if np.any(np.abs(rho) >= 1.0) or np.any(r <= 0.0):
        raise DomainError("predominance_probability needs r > 0 and |rho| < 1")
    s = np.sqrt(1.0 - rho * rho)
    out = (np.arctan((r - rho) / s) + np.arctan((r + rho) / s)) / np.pi
    return out if out.ndim else float(out)


def predominance_inverse(p, rho):
    """Standard-deviation ratio from the predominance probability ``p``.

    Written with ``cot(pi p)`` so that ``p = 1/2`` gives exactly 1, and with the
    conjugate form for ``p < 1/2`` to avoid cancellation.
    """
    p = np.asarray(p, dtype=float)
    rho = np.asarray(rho, dtype=float)
    if np.any(~(p > 0.0) | ~(p < 1.0)) or np.any(np.abs(rho) >= 1.0):
        raise DomainError("predominance_inverse needs 0 < p < 1 and |rho| < 1")
    s = np.sqrt(1.0 - rho * rho)
    angle = np.pi * p
    x = s * np.cos(angle) / np.sin(angle)
    root = np.sqrt(x * x + 1.0)
    safe = np.where(x >= 0.0, root + x, 1.0)
    out = np.where(x >= 0.0, 1.0 / safe, root - x)
    return out if out.ndim else float(out)
