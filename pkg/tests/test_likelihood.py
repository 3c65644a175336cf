import math

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy import stats
from scipy.integrate import trapezoid

from data_handlers.network import EdgeKind, Network
from models.likelihood import (LatentNetworkModel, LinkKind, ModelParams, delta1_conditional_params,
                               deltah_conditional_params, edge_mean, log_full_conditional_Z,
                               log_likelihood, log_prior_Z, pairwise_sq_distances, sq_distance)
from models.prior import Hyperparams, ShrinkageState
from utils.validators import ValidationError


def naive_log_likelihood(y, Z, alpha, kind):
    n = y.shape[0]
    total = 0.0
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            eta = alpha - float(np.sum((Z[i] - Z[j]) ** 2))
            if kind == 'logit':
                total += eta * y[i, j] - math.log1p(math.exp(eta))
            else:
                total += eta * y[i, j] - math.exp(eta) - math.lgamma(y[i, j] + 1)
    return total


class TestDistances:
    def test_identical_rows(self):
        assert sq_distance(np.ones((2, 3)), 0, 1) == 0.0

    def test_unit_vectors(self):
        assert sq_distance(np.array([[1.0, 0.0], [0.0, 1.0]]), 0, 1) == 2.0

    def test_same_node_rejected(self):
        with pytest.raises(ValidationError):
            sq_distance(np.zeros((2, 2)), 1, 1)

    def test_matrix_matches_loop(self, rng):
        Z = rng.standard_normal((6, 5))
        d2 = pairwise_sq_distances(Z)
        for i in range(6):
            for j in range(6):
                expected = 0.0 if i == j else sq_distance(Z, i, j)
                assert d2[i, j] == pytest.approx(expected, rel=1e-12, abs=1e-12)


class TestEdgeMean:
    def test_logit_values(self):
        assert edge_mean(0.0, 0.0, 'logit') == 0.5
        assert edge_mean(3.0, 3.0, 'logit') == 0.5

    def test_log_value(self):
        assert edge_mean(3.0, 1.0, 'poisson') == pytest.approx(math.exp(2.0))


class TestLogLikelihood:
    def test_binary_dyad(self):
        net = Network(np.array([[0, 1], [1, 0]]))
        value = log_likelihood(net, np.zeros((2, 1)), ModelParams(0.0, LinkKind.LOGIT))
        assert value == pytest.approx(-2 * math.log(2), abs=1e-12)

    def test_count_dyad(self):
        net = Network(np.zeros((2, 2)), kind=EdgeKind.COUNT)
        assert log_likelihood(net, np.zeros((2, 1)), ModelParams(0.0, LinkKind.LOG)) == pytest.approx(-2.0)

    def test_empty_network_very_negative_alpha(self):
        net = Network(np.zeros((4, 4)))
        value = log_likelihood(net, np.zeros((4, 2)), ModelParams(-30.0, 'logit'))
        assert value < 0 and abs(value) < 1e-10

    @pytest.mark.parametrize('kind', ['logit', 'poisson'])
    def test_matches_naive_sum(self, kind, rng, small_binary, small_counts):
        net = small_binary if kind == 'logit' else small_counts
        Z = rng.standard_normal((net.n, 2))
        value = log_likelihood(net, Z, ModelParams(1.3, kind))
        assert value == pytest.approx(naive_log_likelihood(net.edges, Z, 1.3, kind), rel=1e-10)

    def test_rotation_invariance(self, rng, small_binary):
        Z = rng.standard_normal((small_binary.n, 3))
        Q, _ = np.linalg.qr(rng.standard_normal((3, 3)))
        params = ModelParams(0.5, 'logit')
        assert log_likelihood(small_binary, Z @ Q, params) == pytest.approx(
            log_likelihood(small_binary, Z, params), rel=1e-10)

    def test_kind_mismatch(self, small_binary):
        with pytest.raises(ValidationError):
            LatentNetworkModel(small_binary, 'poisson')

    def test_eta_clipping_counted(self, small_binary):
        model = LatentNetworkModel(small_binary, 'logit')
        model.log_likelihood(np.zeros((small_binary.n, 2)), 800.0)
        assert model.clip_count == small_binary.n * small_binary.n

    def test_node_contribution(self, rng, small_binary):
        model = LatentNetworkModel(small_binary, 'logit')
        Z = rng.standard_normal((small_binary.n, 2))
        Z2 = Z.copy()
        Z2[3] += 0.4
        d2, d2_new = pairwise_sq_distances(Z), pairwise_sq_distances(Z2)
        diff = model.node_log_likelihood(3, 0.7, d2_new[3]) - model.node_log_likelihood(3, 0.7, d2[3])
        assert diff == pytest.approx(model.log_likelihood(Z2, 0.7) - model.log_likelihood(Z, 0.7), rel=1e-9)

    @pytest.mark.parametrize('kind', ['logit', 'poisson'])
    def test_alpha_derivatives_match_finite_differences(self, kind, rng, small_binary, small_counts):
        net = small_binary if kind == 'logit' else small_counts
        model = LatentNetworkModel(net, kind)
        d2 = pairwise_sq_distances(rng.standard_normal((net.n, 2)))
        h = 1e-5
        f = lambda a: model.log_likelihood_from_d2(a, d2)  # noqa: E731
        score, info = model.alpha_score_info(0.4, d2)
        assert score == pytest.approx((f(0.4 + h) - f(0.4 - h)) / (2 * h), rel=1e-6, abs=1e-6)
        h2 = 1e-4
        assert info == pytest.approx(-(f(0.4 + h2) - 2 * f(0.4) + f(0.4 - h2)) / h2 ** 2, rel=1e-3)


class TestFullConditionals:
    def test_zero_configuration(self, small_binary):
        Z = np.zeros((small_binary.n, 2))
        shrink = ShrinkageState.from_delta([0.5, 1.1])
        params = ModelParams(0.2, 'logit')
        assert log_full_conditional_Z(small_binary, Z, params, shrink) == log_likelihood(small_binary, Z, params)

    def test_doubling_omega_changes_prior_only(self, rng):
        Z = rng.standard_normal((5, 2))
        omega = np.array([0.5, 0.8])
        doubled = omega * np.array([2.0, 1.0])
        change = log_prior_Z(Z, doubled) - log_prior_Z(Z, omega)
        assert change == pytest.approx(-0.5 * omega[0] * np.sum(Z[:, 0] ** 2))

    def test_delta1_zero(self, hp):
        shape, rate = delta1_conditional_params(np.zeros((4, 3)), [1.0, 1.5, 2.0], hp)
        assert (shape, rate) == (4 * 3 / 2 + hp.a1, hp.b1)

    def test_delta1_single_entry(self, hp):
        shape, rate = delta1_conditional_params(np.array([[2.0]]), [1.0], hp)
        assert shape == pytest.approx(1.6)
        assert rate == pytest.approx(3.0)

    def test_delta1_two_dimensions(self, hp):
        shape, rate = delta1_conditional_params(np.ones((2, 2)), [1.0, 2.0], hp)
        assert shape == pytest.approx(3.1)
        assert rate == pytest.approx(4.0)

    def test_delta1_matches_grid_normalised_joint(self, rng, hp):
        Z = rng.standard_normal((6, 3))
        rest = [1.4, 1.7]
        grid = np.linspace(1e-6, 10.0, 40_001)
        log_joint = np.array([
            (hp.a1 - 1) * math.log(d) - hp.b1 * d
            + 0.5 * Z.shape[0] * np.sum(np.log(np.cumprod([d, *rest])))
            + log_prior_Z(Z, np.cumprod([d, *rest]))
            for d in grid
        ])
        density = np.exp(log_joint - log_joint.max())
        density /= trapezoid(density, grid)

        shape, rate = delta1_conditional_params(Z, [1.0, *rest], hp)
        expected = stats.gamma(shape, scale=1.0 / rate).pdf(grid)
        assert np.max(np.abs(density - expected)) < 1e-4 * expected.max()

    def test_deltah_zero(self, hp):
        shape, rate, lower = deltah_conditional_params(2, np.zeros((4, 3)), [1.0, 1.5, 2.0], hp)
        assert (shape, rate, lower) == (4 * 2 / 2 + hp.a2, hp.b2, 1.0)

    def test_deltah_matches_triple_loop(self, rng):
        hp = Hyperparams(p=4)
        Z = rng.standard_normal((5, 4))
        delta = np.array([0.7, 1.3, 1.1, 2.0])
        for h in range(2, 5):
            expected = hp.b2
            for i in range(5):
                for ell in range(h, 5):
                    weight = 1.0
                    for m in range(1, ell + 1):
                        if m != h:
                            weight *= delta[m - 1]
                    expected += 0.5 * weight * Z[i, ell - 1] ** 2
            shape, rate, _ = deltah_conditional_params(h, Z, delta, hp)
            assert shape == pytest.approx(5 * (4 - h + 1) / 2 + hp.a2)
            assert rate == pytest.approx(expected, rel=1e-12)

    def test_deltah_range(self, hp):
        with pytest.raises(ValidationError):
            deltah_conditional_params(1, np.zeros((3, 2)), [1.0, 1.0], hp)


def test_logit_mean_in_unit_interval(rng):
    d2 = pairwise_sq_distances(rng.standard_normal((5, 2)))
    q = edge_mean(1.0, d2, LinkKind.LOGIT)
    assert np.all((q > 0) & (q < 1))
    assert_allclose(q, q.T)
