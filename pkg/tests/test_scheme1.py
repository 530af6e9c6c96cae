import math

import numpy as np
import pytest
from scipy.special import ndtri

from onebitvar.gaussians import psi, psi_inverse, std_normal_cdf
from onebitvar.model import VarModel, simulate, simulate_batch, true_moments
from onebitvar.quantize import BinaryRecord, threshold_quantize
from onebitvar.scheme1 import (
    CORR_CLAMP,
    SeriesFlag,
    binary_cross_moment,
    estimate_correlations_s1,
    estimate_model_s1,
    estimate_thresholds,
    failure_lower_bound,
)
from onebitvar.yulewalker import RatioMatrix, rescale, solve_correlation_system

MODEL = VarModel([[0.25, 1.0], [0.0, -0.2]], np.eye(2))


def record(bits, c=None):
    bits = np.asarray(bits, dtype=np.uint8)
    return BinaryRecord(x_bits=bits, thresholds=np.ones(bits.shape[0]) if c is None else c)


def test_threshold_inverse_consistency():
    T = 100_000
    k = round(T * std_normal_cdf(-1.0))
    bits = np.zeros((1, T), dtype=np.uint8)
    bits[0, :k] = 1
    eta, flags = estimate_thresholds(record(bits))
    assert flags == (SeriesFlag.OK,)
    # one count of rounding moves eta by about 1 / (T phi(1))
    assert eta[0] == pytest.approx(1.0, abs=1e-4)
    assert eta[0] == pytest.approx(-ndtri(k / T), abs=1e-15)


def test_degenerate_flags():
    bits = np.array([[0, 0, 0, 0], [1, 1, 1, 1], [1, 0, 1, 0], [1, 0, 0, 0]])
    eta, flags = estimate_thresholds(record(bits))
    assert flags == (SeriesFlag.ALL_ZERO, SeriesFlag.ALL_ONE, SeriesFlag.EXACT_HALF, SeriesFlag.OK)
    assert eta[0] == math.inf and eta[1] == -math.inf and eta[2] == 0.0
    res = estimate_model_s1(record(bits), 1)
    assert res.failed and res.coeff is None


def test_threshold_estimate_on_simulation():
    sig = true_moments(MODEL).sigmas
    rec = threshold_quantize(simulate(MODEL, 10_000, seed=1), sig / 2)
    eta, _ = estimate_thresholds(rec)
    assert np.all(np.abs(eta - 0.5) < 0.05)


def test_cross_moment_identical_half():
    bits = np.array([[1, 0] * 50, [1, 0] * 50])
    assert binary_cross_moment(record(bits), 0, 1, 0) == pytest.approx(0.5)


def test_cross_moment_independent_bits():
    T = 40_000
    bits = np.random.default_rng(0).integers(0, 2, (2, T))
    assert abs(binary_cross_moment(record(bits), 0, 1, 3)) <= 4 / math.sqrt(T)


def test_cross_moment_matches_two_pass():
    g = np.random.default_rng(1)
    bits = (g.random((3, 500)) < [[0.3], [0.5], [0.8]]).astype(np.uint8)
    rec = record(bits)
    x = bits.astype(float)
    m = x.mean(axis=1)
    T = x.shape[1]
    for tau in (0, 1, 4):
        for i in range(3):
            for j in range(3):
                a, b = x[i, tau:], x[j, : T - tau]
                naive = np.mean((a - m[i]) * (b - m[j])) + np.mean((1 - a - (1 - m[i])) * (1 - b - (1 - m[j])))
                direct = np.mean(a == b) - m[i] * m[j] - (1 - m[i]) * (1 - m[j])
                assert binary_cross_moment(rec, i, j, tau) == pytest.approx(direct, abs=1e-12)
                if tau == 0:
                    assert direct == pytest.approx(naive, abs=1e-12)


def test_correlations_perfect_and_independent():
    g = np.random.default_rng(2)
    row = (g.random(10_000) < 0.3).astype(np.uint8)
    rec = record(np.stack([row, row]))
    eta, _ = estimate_thresholds(rec)
    corr, clamped = estimate_correlations_s1(rec, eta, 1)
    assert corr.corr[0, 0, 1] == pytest.approx(1 - CORR_CLAMP)
    ind = record((g.random((2, 100_000)) < 0.4).astype(np.uint8))
    eta, _ = estimate_thresholds(ind)
    corr, _ = estimate_correlations_s1(ind, eta, 1)
    assert abs(corr.corr[0, 0, 1]) <= 0.02
    assert np.all(np.abs(corr.corr[1]) <= 0.02)


def test_correlations_long_simulation():
    mom = true_moments(MODEL, max_lag=2)
    rec = threshold_quantize(simulate(MODEL, 100_000, seed=3), mom.sigmas / 2)
    eta, _ = estimate_thresholds(rec)
    corr, _ = estimate_correlations_s1(rec, eta, 2)
    assert np.allclose(corr.corr, mom.corr, atol=0.02)
    assert np.allclose(corr.corr[0], corr.corr[0].T)


def test_exact_binary_moments_recover_model():
    m = VarModel([[0.9, 0.5], [-0.5, 0.7]], np.diag([1.0, 2.0]))
    mom = true_moments(m)
    eta = np.array([0.4, -0.7])
    e1, e2 = np.meshgrid(eta, eta, indexing="ij")
    halves = np.stack([psi(e1, e2, np.clip(r, -1, 1)) for r in mom.corr])
    corr = np.stack([psi_inverse(e1, e2, h)[0] for h in halves])
    np.fill_diagonal(corr[0], 1.0)
    coeff, _ = rescale(solve_correlation_system(corr), RatioMatrix.from_sigmas(mom.sigmas))
    assert np.allclose(coeff, m.coeff, atol=1e-6)


def test_estimate_long_run():
    sig = true_moments(MODEL).sigmas
    c = np.array([0.5, -0.3]) * sig
    res = estimate_model_s1(threshold_quantize(simulate(MODEL, 200_000, seed=4), c), 1)
    assert not res.failed
    assert np.allclose(res.coeff, MODEL.coeff, atol=0.02)
    assert np.allclose(res.sigma_hat, sig, rtol=0.02)
    assert np.allclose(res.noise_cov, MODEL.noise_cov, atol=0.05)


def test_scale_invariance():
    z = simulate(MODEL, 3000, seed=5)
    c = np.array([0.6, 0.4])
    a = estimate_model_s1(threshold_quantize(z, c), 1)
    b = estimate_model_s1(threshold_quantize(3.0 * z, 3.0 * c), 1)
    assert np.array_equal(a.coeff, b.coeff)
    assert np.allclose(b.noise_cov, 9 * a.noise_cov)


def test_large_thresholds_fail():
    sig = true_moments(MODEL).sigmas
    trajs = simulate_batch(MODEL, 10_000, list(range(40)))
    failed = [estimate_model_s1(threshold_quantize(z, 5 * sig), 1).failed for z in trajs]
    assert np.mean(failed) >= 0.95


def test_failure_lower_bound_values():
    assert failure_lower_bound(5.0, 10_000) == pytest.approx(0.99703, abs=1e-5)
    assert failure_lower_bound(1.0, 10_000) == pytest.approx(-2419, abs=1)
    assert failure_lower_bound(5.0, 1) == pytest.approx(1 - 2.97e-7, abs=1e-8)
    with pytest.raises(ValueError):
        failure_lower_bound(0.0, 10)


def test_needs_thresholds():
    with pytest.raises(ValueError):
        estimate_model_s1(BinaryRecord(x_bits=np.ones((2, 4))), 1)
