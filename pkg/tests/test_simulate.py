import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from constants.studies import STUDY3_ALPHAS, study_preset
from data_handlers.network import EdgeKind, Network
from data_handlers.processors import density
from models.likelihood import edge_mean_matrix
from simulation.generator import overdispersion_stats, simulate_network
from utils.validators import ValidationError


class TestSimulateNetwork:
    def test_density_matches_edge_probabilities(self):
        for seed in range(3):
            sim = simulate_network(100, 2, (0.5, 1.1), 3.0, 'logit', np.random.default_rng(seed))
            q = edge_mean_matrix(3.0, sim.Z_true, 'logit')
            expected = q[sim.network.offdiag_mask()].mean()
            assert density(sim.network) == pytest.approx(expected, abs=0.03)
            assert 0.1 < density(sim.network) < 0.5

    def test_metadata_variances(self, rng):
        sim = simulate_network(20, 2, (0.5, 1.1), 3.0, 'logit', rng)
        assert_allclose(sim.metadata['variances'], [2.0, 1.0 / 0.55])
        assert round(sim.metadata['variances'][1], 2) == 1.82
        assert sim.Z_true.shape == (20, 2)

    def test_very_negative_alpha(self, rng):
        sim = simulate_network(30, 2, (0.5, 1.1), -30.0, 'logit', rng)
        assert sim.network.edges.sum() == 0

    def test_undirected_by_default(self, rng):
        net = simulate_network(30, 2, (0.5, 1.1), 1.0, 'poisson', rng).network
        assert net.kind == EdgeKind.COUNT
        assert_array_equal(net.edges, net.edges.T)

    def test_directed(self, rng):
        net = simulate_network(30, 2, (0.5, 1.1), 1.0, 'logit', rng, directed=True).network
        assert net.directed
        assert not np.array_equal(net.edges, net.edges.T)

    def test_same_seed_same_network(self):
        a = simulate_network(25, 3, (0.5, 1.1, 1.05), 2.0, 'logit', np.random.default_rng(3))
        b = simulate_network(25, 3, (0.5, 1.1, 1.05), 2.0, 'logit', np.random.default_rng(3))
        assert a.network == b.network
        assert_array_equal(a.Z_true, b.Z_true)

    def test_delta_length_must_match(self, rng):
        with pytest.raises(ValidationError):
            simulate_network(20, 3, (0.5, 1.1), 1.0, 'logit', rng)

    def test_per_dimension_variance(self, rng):
        sim = simulate_network(3000, 2, (0.5, 1.1), -30.0, 'logit', rng)
        assert_allclose(sim.Z_true.var(axis=0), [2.0, 1.0 / 0.55], rtol=0.08)


class TestOverdispersion:
    def test_constant_counts(self):
        net = Network(2 * (np.ones((4, 4)) - np.eye(4)), kind=EdgeKind.COUNT)
        assert overdispersion_stats(net) == (2.0, 0.0)

    def test_hand_built(self):
        edges = np.array([[0, 1, 4], [1, 0, 0], [4, 0, 0]])
        mean, variance = overdispersion_stats(Network(edges, kind=EdgeKind.COUNT))
        values = np.array([1, 4, 1, 0, 4, 0], dtype=float)
        assert mean == pytest.approx(values.mean())
        assert variance == pytest.approx(values.var(ddof=1))

    def test_high_overdispersion_preset(self):
        [setting] = study_preset(4, 'high')
        sim = simulate_network(setting.n, setting.p_star, setting.delta, setting.alpha, 'poisson',
                               np.random.default_rng(0))
        mean, variance = overdispersion_stats(sim.network)
        assert variance > mean


class TestStudyPresets:
    def test_study1_sizes(self):
        settings = study_preset(1)
        assert [s.n for s in settings] == [20, 50, 100, 200]
        assert all(s.model == 'logit' for s in settings)
        assert [s.burn_in for s in settings] == [50_000, 50_000, 200_000, 200_000]

    def test_study1_poisson_burn_in(self):
        assert {s.burn_in for s in study_preset(1, model='poisson')} == {350_000}

    def test_study2_fit_levels(self):
        [setting] = study_preset(2)
        assert setting.fit_dims == (3, 4, 8)
        assert setting.p_star == 4
        assert setting.alpha == 6.0

    def test_study3_grid(self):
        settings = study_preset(3)
        assert tuple(s.alpha for s in settings) == STUDY3_ALPHAS
        assert study_preset(3, 'alpha12')[0].alpha == 12.0
        with pytest.raises(ValidationError):
            study_preset(3, model='poisson')

    def test_study4_high(self):
        [setting] = study_preset(4, 'high')
        assert setting.alpha == 5.0
        assert setting.delta == (0.1, 1.5)
        assert setting.model == 'poisson'

    def test_fit_dims_override(self):
        assert study_preset(2, fit_dims=[2, 6])[0].fit_dims == (2, 6)

    def test_unknown_inputs(self):
        with pytest.raises(ValidationError):
            study_preset(5)
        with pytest.raises(ValidationError):
            study_preset(1, 'n30')

    def test_labels_are_unique(self):
        labels = [s.label for sid in (1, 2, 3, 4) for s in study_preset(sid)]
        assert len(labels) == len(set(labels))
