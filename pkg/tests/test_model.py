import json

import numpy as np
import pytest

from onebitvar.errors import FormatError, GenerationTimeout, NotStationary
from onebitvar.linalg import spectral_radius
from onebitvar.model import (
    ModelClass,
    MomentSet,
    VarModel,
    companion_form,
    default_burn_in,
    model_from_dict,
    model_from_json,
    model_to_json,
    random_model,
    simulate,
    simulate_batch,
    true_moments,
)

# two models whose second series differs by a factor 2 in scale
PAIR = (
    VarModel([[0.5, 1.0], [0.0, 0.5]], np.eye(2)),
    VarModel([[0.5, 0.5], [0.0, 0.5]], np.diag([1.0, 4.0])),
)


def test_validation():
    with pytest.raises(ValueError):
        VarModel(np.zeros((1, 2, 3)), np.eye(2))
    with pytest.raises(ValueError):
        VarModel(np.zeros((1, 2, 2)), np.eye(3))
    with pytest.raises(ValueError):
        VarModel(np.zeros((1, 2, 2)), [[1.0, 0.5], [0.0, 1.0]])
    with pytest.raises(ValueError):
        VarModel(np.zeros((1, 2, 2)), [[1.0, 2.0], [2.0, 1.0]])
    assert VarModel(np.eye(2), np.eye(2)).p == 1


def test_stationarity_flag():
    assert VarModel([[0.5]], [[1.0]]).is_stationary
    assert not VarModel([[1.0]], [[1.0]]).is_stationary


def test_model_class_normalizes_trace():
    mc = VarModel([[0.1, 0], [0, 0.2]], np.diag([2.0, 6.0])).model_class()
    assert np.trace(mc.noise_cov_normalized) == pytest.approx(2.0)
    assert np.allclose(mc.noise_cov_normalized, np.diag([0.5, 1.5]))
    with pytest.raises(ValueError):
        ModelClass(np.zeros((1, 2, 2)), np.eye(2) * 3)


def test_companion_p1_is_coefficient():
    a = np.array([[0.2, 0.1], [-0.3, 0.4]])
    big, noise = companion_form(VarModel(a, np.eye(2)))
    assert np.array_equal(big, a)


def test_companion_scalar_ar2():
    big, noise = companion_form(VarModel(np.array([[[0.5]], [[-0.3]]]), [[2.0]]))
    assert np.array_equal(big, [[0.5, -0.3], [1.0, 0.0]])
    assert np.array_equal(noise, [[2.0, 0.0], [0.0, 0.0]])


def test_companion_eigenvalues_are_inverse_polynomial_roots(rng):
    a1, a2 = rng.standard_normal((2, 2, 2)) * 0.4
    m = VarModel(np.stack([a1, a2]), np.eye(2))
    eig = np.linalg.eigvals(companion_form(m)[0])
    # det(I - A1 z - A2 z^2) as a polynomial in z, built from 2x2 determinant expansion
    def poly_entry(i, j):
        return np.array([-a2[i, j], -a1[i, j], 1.0 * (i == j)])
    det = np.polysub(np.polymul(poly_entry(0, 0), poly_entry(1, 1)), np.polymul(poly_entry(0, 1), poly_entry(1, 0)))
    roots = np.roots(det)
    assert np.allclose(np.sort_complex(1 / roots), np.sort_complex(eig), atol=1e-9)


def test_true_moments_white_noise():
    mom = true_moments(VarModel(np.zeros((1, 3, 3)), np.eye(3)), max_lag=3)
    assert np.allclose(mom.gamma[0], np.eye(3))
    assert np.allclose(mom.gamma[1:], 0.0)


def test_true_moments_scalar_ar1():
    mom = true_moments(VarModel([[0.5]], [[1.0]]), max_lag=5)
    assert np.allclose(mom.gamma[:, 0, 0], [0.5**k * 4 / 3 for k in range(6)])
    assert np.allclose(mom.corr[:, 0, 0], [0.5**k for k in range(6)])


def test_true_moments_satisfy_yule_walker(rng):
    coeff = rng.standard_normal((2, 3, 3)) * 0.25
    m = VarModel(coeff, np.diag([1.0, 2.0, 0.5]))
    assert m.is_stationary
    g = true_moments(m, max_lag=4).gamma
    for tau in range(1, 5):
        lagged = [g[tau - s] if tau - s >= 0 else g[s - tau].T for s in (1, 2)]
        assert np.allclose(g[tau], coeff[0] @ lagged[0] + coeff[1] @ lagged[1], atol=1e-12)
    assert np.allclose(g[0], coeff[0] @ g[1].T + coeff[1] @ g[2].T + m.noise_cov, atol=1e-12)


def test_pair_shares_correlations_not_covariances():
    m1, m2 = (true_moments(m) for m in PAIR)
    assert np.allclose(m1.corr, m2.corr, atol=1e-12)
    assert not np.allclose(m1.gamma, m2.gamma)
    assert m2.sigmas[1] / m1.sigmas[1] == pytest.approx(2.0)


def test_true_moments_rejects_nonstationary():
    with pytest.raises(NotStationary):
        true_moments(VarModel([[1.2]], [[1.0]]))


def test_moment_set_from_covariances():
    ms = MomentSet.from_covariances([[[4.0, 2.0], [2.0, 9.0]]])
    assert np.allclose(ms.sigmas, [2.0, 3.0])
    assert ms.corr[0, 0, 1] == pytest.approx(1 / 3)
    assert ms.max_lag == 0


def test_simulate_deterministic_and_batch_invariant():
    m = VarModel([[0.3, 0.2], [-0.1, 0.5]], np.eye(2))
    a = simulate(m, 300, seed=11)
    assert np.array_equal(a, simulate(m, 300, seed=11))
    batch = simulate_batch(m, 300, [5, 11, 7])
    assert np.array_equal(batch[1], a)
    assert not np.array_equal(batch[0], a)


def test_simulate_scaling_with_noise():
    eps = 1e-6
    z = simulate(VarModel(np.zeros((1, 2, 2)), eps * np.eye(2)), 20_000, seed=3)
    assert np.std(z) == pytest.approx(np.sqrt(eps), rel=0.03)


def test_simulated_covariance_matches_truth():
    m = VarModel([[0.25, 1.0], [0.0, -0.2]], np.eye(2))
    z = simulate(m, 1_000_000, seed=99)
    gamma0 = z @ z.T / z.shape[1]
    assert np.allclose(gamma0, true_moments(m).gamma[0], rtol=0.01, atol=0.01)


def test_burn_in_grows_near_unit_root():
    assert default_burn_in(VarModel([[0.5]], [[1.0]])) == 500
    assert default_burn_in(VarModel([[0.999]], [[1.0]])) == 10_000


def test_random_model_band():
    for d in (1, 2, 5, 8):
        for seed in range(5):
            m = random_model(d, seed=seed)
            assert 0.5 <= spectral_radius(m.coeff[0]) <= 0.85
            assert np.array_equal(m.noise_cov, np.eye(d))
    assert np.array_equal(random_model(3, seed=4).coeff, random_model(3, seed=4).coeff)


def test_random_model_timeout():
    with pytest.raises(GenerationTimeout):
        random_model(2, seed=0, spectral_band=(0.999, 0.9999), max_draws=10)


def test_json_round_trip():
    m = VarModel(np.array([[[0.1, 0.2], [0.3, 0.4]], [[0.0, 0.1], [0.0, 0.0]]]), [[1.0, 0.2], [0.2, 2.0]])
    back = model_from_json(model_to_json(m))
    assert np.array_equal(back.coeff, m.coeff)
    assert np.array_equal(back.noise_cov, m.noise_cov)
    assert json.loads(model_to_json(m))["p"] == 2


def test_json_errors():
    with pytest.raises(FormatError):
        model_from_json("{not json")
    with pytest.raises(FormatError):
        model_from_dict({"d": 2, "p": 1, "A": [[0.1]]})
    with pytest.raises(FormatError):
        model_from_dict({"d": 2, "p": 1, "A": [[0.1, 0], [0, 0.1]], "Sigma_E": [[1]]})
