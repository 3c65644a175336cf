import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy.spatial.distance import pdist, squareform
from scipy.special import expit

from data_handlers.network import EdgeKind, Network
from data_handlers.processors import geodesic_distances
from inference.initializer import classical_mds, empirical_shrinkage, init_regression, initialize_chain
from models.likelihood import pairwise_sq_distances
from models.prior import Hyperparams
from utils.validators import ValidationError


class TestClassicalMds:
    def test_collinear_points(self):
        x = np.array([[0.0], [1.0], [2.0]])
        coords = classical_mds(squareform(pdist(x)), 1)
        assert_allclose(pdist(coords), pdist(x), atol=1e-10)

    def test_random_cloud(self, rng):
        points = rng.standard_normal((15, 2))
        coords = classical_mds(squareform(pdist(points)), 2)
        assert_allclose(pdist(coords), pdist(points), atol=1e-8)

    def test_regular_simplex(self):
        D = np.ones((4, 4)) - np.eye(4)
        distances = pdist(classical_mds(D, 3))
        assert_allclose(distances, distances[0], atol=1e-10)

    def test_centered_with_sign_convention(self, small_binary):
        coords = classical_mds(geodesic_distances(small_binary), 3)
        assert_allclose(coords.mean(axis=0), 0.0, atol=1e-10)
        for col in coords.T:
            if np.any(col):
                assert col[np.argmax(np.abs(col))] > 0

    def test_dimension_bounds(self):
        with pytest.raises(ValidationError):
            classical_mds(np.ones((3, 3)) - np.eye(3), 3)


class TestInitRegression:
    def test_recovers_logistic_coefficients(self, rng):
        Z = rng.standard_normal((200, 2))
        q = expit(2.0 - 1.5 * pairwise_sq_distances(Z))
        edges = (rng.random(q.shape) < q).astype(int)
        np.fill_diagonal(edges, 0)
        estimate = init_regression(Network(edges, directed=True), Z, 'logit')
        assert not estimate.used_fallback
        assert estimate.alpha == pytest.approx(2.0, abs=0.3)
        assert estimate.beta == pytest.approx(1.5, abs=0.3)

    def test_all_zero_responses_fall_back(self):
        Z = np.arange(10, dtype=float).reshape(5, 2)
        estimate = init_regression(Network(np.zeros((5, 5))), Z, 'logit')
        assert estimate.used_fallback
        assert estimate.beta == 1.0

    def test_poisson_intercept(self, rng):
        Z = 0.5 * rng.standard_normal((60, 2))
        edges = np.round(np.exp(2.0 - pairwise_sq_distances(Z))).astype(int)
        np.fill_diagonal(edges, 0)
        estimate = init_regression(Network(edges, kind=EdgeKind.COUNT), Z, 'poisson')
        assert estimate.alpha == pytest.approx(2.0, abs=0.2)


class TestEmpiricalShrinkage:
    def test_reciprocal_variance(self):
        a = np.sqrt(0.125)
        Z = np.array([[-a, -3.0], [a, 3.0]])
        shrink = empirical_shrinkage(Z)
        assert shrink.omega[0] == pytest.approx(4.0)
        assert shrink.delta[0] == pytest.approx(4.0)
        # omega_2 < omega_1 clamps delta_2 at 1
        assert shrink.delta[1] == 1.0


class TestInitializeChain:
    def test_scaling_and_inflation(self, small_binary, rng):
        hp = Hyperparams(p=2)
        state = initialize_chain(small_binary, hp, 'logit', 1.5, rng)
        Z_mds = classical_mds(geodesic_distances(small_binary), 2)
        estimate = init_regression(small_binary, Z_mds, 'logit')
        assert_allclose(state.Z, np.sqrt(abs(estimate.beta)) * Z_mds)
        assert state.alpha == pytest.approx(1.5 * estimate.alpha)
        assert state.is_finite()
        assert state.iteration == 0

    def test_jitter_changes_positions(self, small_binary):
        hp = Hyperparams(p=2)
        plain = initialize_chain(small_binary, hp, 'logit', 1.5, np.random.default_rng(1))
        jittered = initialize_chain(small_binary, hp, 'logit', 1.5, np.random.default_rng(1), jitter_sd=0.1)
        assert not np.allclose(plain.Z, jittered.Z)

    def test_rejects_large_truncation_level(self, small_binary, rng):
        with pytest.raises(ValidationError):
            initialize_chain(small_binary, Hyperparams(p=6), 'logit', 1.5, rng)
