from dataclasses import replace

import numpy as np
import pytest
from numpy.testing import assert_allclose

from constants.studies import study_preset
from inference.postprocess import (align_configuration, align_traces, autocorrelation, convergence_table,
                                   diagnostics, effective_dimensions, effective_sample_size, gelman_rubin,
                                   posterior_summary, procrustes_align, procrustes_correlation,
                                   select_reference, trace_series)
from inference.sampler import SamplerConfig, run_chains
from inference.state import ChainTrace
from models.prior import Hyperparams
from simulation.generator import simulate_network
from utils.validators import ValidationError


def make_trace(rng, chain_index=0, m=20, n=6, p=2, alpha=None, delta=None, Z=None, reference=None,
               reference_log_lik=0.0):
    delta = np.column_stack([rng.gamma(2.0, 0.5, m)] + [1.0 + rng.gamma(2.0, 0.5, m) for _ in range(p - 1)]) \
        if delta is None else np.asarray(delta, dtype=float)
    Z = rng.standard_normal((m, n, p)) if Z is None else Z
    return ChainTrace(
        chain_index=chain_index,
        seed=chain_index,
        kind='logit',
        iterations=np.arange(1, m + 1),
        Z=Z,
        alpha=rng.normal(1.0, 0.3, m) if alpha is None else np.asarray(alpha, dtype=float),
        delta=delta,
        omega=np.cumprod(delta, axis=1),
        log_lik=rng.normal(-50.0, 2.0, m),
        reference_Z=Z[0] if reference is None else reference,
        reference_log_lik=reference_log_lik,
        z_accepted=5,
        z_proposed=20,
        alpha_accepted=10,
        alpha_proposed=20,
    )


def random_rotation(rng, p):
    Q, _ = np.linalg.qr(rng.standard_normal((p, p)))
    return Q


class TestProcrustes:
    def test_correlation_invariant_to_rotation_and_shift(self, rng):
        A = rng.standard_normal((10, 3))
        B = A @ random_rotation(rng, 3) + np.array([1.0, -2.0, 0.5])
        assert procrustes_correlation(A, B) == pytest.approx(1.0, abs=1e-10)

    def test_correlation_pads_narrow_configuration(self, rng):
        A = rng.standard_normal((10, 2))
        assert procrustes_correlation(A, np.column_stack([A, np.zeros(10)])) == pytest.approx(1.0, abs=1e-10)

    def test_correlation_of_independent_noise_is_low(self, rng):
        for _ in range(20):
            A, B = rng.standard_normal((100, 2)), rng.standard_normal((100, 2))
            assert procrustes_correlation(A, B) < 0.5

    def test_alignment_never_increases_distance(self, rng):
        for _ in range(200):
            n, p = int(rng.integers(3, 30)), int(rng.integers(1, 5))
            reference = rng.standard_normal((n, p))
            Z = reference @ random_rotation(rng, p) + rng.normal(scale=rng.uniform(0.0, 3.0), size=(n, p))
            Z += rng.normal(scale=5.0, size=p)
            before = np.linalg.norm(Z - reference)
            after = np.linalg.norm(align_configuration(Z, reference) - reference)
            assert after <= before + 1e-9

    def test_align_recovers_reference(self, rng):
        reference = rng.standard_normal((8, 2))
        Z = np.stack([reference @ random_rotation(rng, 2) + rng.normal(size=2) for _ in range(5)])
        trace = make_trace(rng, m=5, n=8, Z=Z, reference=reference)
        aligned = procrustes_align(trace, reference)
        for draw in aligned.Z:
            assert_allclose(draw, reference, atol=1e-10)

    def test_reference_is_best_chain(self, rng):
        traces = [make_trace(rng, k, reference_log_lik=ll) for k, ll in enumerate([-30.0, -10.0, -20.0])]
        assert select_reference(traces) is traces[1].reference_Z
        aligned = align_traces(traces)
        assert len(aligned) == 3


class TestSummary:
    def test_constant_trace(self, rng):
        trace = make_trace(rng, alpha=np.full(20, 2.5))
        row = posterior_summary([trace]).table.loc['alpha']
        assert row['mean'] == 2.5
        assert row['width'] == 0.0

    def test_two_point_trace(self, rng):
        trace = make_trace(rng, m=2, alpha=[1.0, 3.0])
        assert posterior_summary(trace).table.loc['alpha', 'mean'] == 2.0

    def test_quantiles_pool_chains(self, rng):
        traces = [make_trace(rng, k) for k in range(2)]
        table = posterior_summary(traces).table
        pooled = np.concatenate([t.delta[:, 1] for t in traces])
        assert table.loc['delta_2', 'lower'] == pytest.approx(np.quantile(pooled, 0.025))
        assert table.loc['delta_2', 'upper'] == pytest.approx(np.quantile(pooled, 0.975))
        variances = np.concatenate([1.0 / t.omega[:, 0] for t in traces])
        assert table.loc['variance_1', 'median'] == pytest.approx(np.median(variances))

    def test_trace_series_names(self, rng):
        trace = make_trace(rng)
        assert_allclose(trace_series(trace, 'variance_2'), 1.0 / trace.omega[:, 1])
        with pytest.raises(ValidationError):
            trace_series(trace, 'delta_3')
        with pytest.raises(ValidationError):
            trace_series(trace, 'beta')

    def test_empty_traces(self, rng):
        with pytest.raises(ValidationError):
            posterior_summary([make_trace(rng, m=0, reference=np.zeros((6, 2)))])


class TestEffectiveDimension:
    def test_jump_after_second_dimension(self):
        result = effective_dimensions([0.5, 1.1, 9.0, 3.0, 2.5], [0.4, 0.6, 8.0, 3.0, 3.0])
        assert result.dimension == 2
        assert not result.at_least

    def test_no_jump(self):
        result = effective_dimensions([0.5, 0.8, 1.2, 1.5, 1.9], [0.5, 0.5, 0.5, 0.5, 0.5])
        assert result.dimension == 5
        assert result.at_least
        assert result.report.startswith('>= 5')

    def test_second_dimension_shrunk(self):
        assert effective_dimensions([0.5, 50.0], [0.3, 40.0]).dimension == 1

    def test_second_dimension_compared_to_truncation_floor(self):
        # delta_2 / delta_1 = 2.2 but delta_2 sits just above its floor of 1
        means, widths = [0.5, 1.1, 1.3, 8.0, 9.0], [0.12, 0.3, 0.3, 6.0, 6.0]
        assert effective_dimensions(means, widths).dimension == 3
        assert effective_dimensions(means, widths, floor=0.0).dimension == 1

    def test_large_first_delta_keeps_plain_ratio(self):
        assert effective_dimensions([3.0, 4.0, 20.0], [1.0, 1.5, 15.0]).dimension == 2
        assert effective_dimensions([3.0, 7.0, 20.0], [1.0, 3.0, 15.0]).dimension == 1

    def test_appending_shrunk_dimensions(self):
        means, widths = [0.5, 1.1, 9.0, 3.0, 2.5], [0.4, 0.6, 8.0, 3.0, 3.0]
        result = effective_dimensions(means + [40.0, 45.0], widths + [30.0, 30.0])
        assert result.dimension == effective_dimensions(means, widths).dimension == 2


class TestConvergence:
    def test_split_iid_stream(self, rng):
        stream = rng.standard_normal(20_000)
        value = gelman_rubin([stream[:10_000], stream[10_000:]])
        assert 0.99 <= value <= 1.02

    def test_disjoint_chains(self, rng):
        assert gelman_rubin([rng.standard_normal(500), 100 + rng.standard_normal(500)]) > 5

    def test_single_chain(self, rng):
        with pytest.raises(ValidationError):
            gelman_rubin([make_trace(rng)])

    def test_zero_within_variance(self):
        assert gelman_rubin([np.zeros(20), np.ones(20)]) == float('inf')
        assert gelman_rubin([np.ones(20), np.ones(20)]) == 1.0

    def test_convergence_table_single_chain(self, rng):
        table = convergence_table([make_trace(rng)])
        assert set(table) == {'alpha', 'delta_1', 'delta_2', 'loglik'}
        assert all(v is None for v in table.values())

    def test_convergence_table_short_chains(self, rng):
        table = convergence_table([make_trace(rng, 0, m=5), make_trace(rng, 1, m=5)])
        assert table['alpha'] is None


def ar1(rng, phi, size):
    x = np.empty(size)
    x[0] = rng.standard_normal()
    for t in range(1, size):
        x[t] = phi * x[t - 1] + rng.standard_normal()
    return x


class TestAutocorrelation:
    def test_white_noise(self, rng):
        series = rng.standard_normal(10_000)
        rho = autocorrelation(series, max_lag=50)
        assert rho[0] == pytest.approx(1.0)
        assert np.all(np.abs(rho[1:]) < 4 / np.sqrt(series.size))

    def test_ar1(self, rng):
        rho = autocorrelation(ar1(rng, 0.9, 20_000), max_lag=5)
        assert rho[1] == pytest.approx(0.9, abs=0.05)

    def test_short_series(self, rng):
        with pytest.raises(ValidationError):
            autocorrelation(rng.standard_normal(10), max_lag=50)

    def test_effective_sample_size(self, rng):
        white = rng.standard_normal(5000)
        assert 0.8 * 5000 <= effective_sample_size(white) <= 5000
        correlated = ar1(rng, 0.9, 20_000)
        assert 0.03 * 20_000 < effective_sample_size(correlated) < 0.08 * 20_000
        assert np.isnan(effective_sample_size(np.ones(100)))


def test_diagnostics_report(rng):
    traces = [make_trace(rng, k, m=30, reference_log_lik=-float(k)) for k in range(2)]
    report, summary, aligned = diagnostics(traces)
    assert report['chains'] == 2
    assert set(report['r_hat']) == {'alpha', 'delta_1', 'delta_2', 'loglik'}
    assert report['r_hat']['alpha'] is not None
    assert report['effective_dimension']['dimension'] in (1, 2)
    assert report['acceptance']['chain_0'] == {'z': 0.25, 'alpha': 0.5}
    assert summary.n_draws == 60
    assert aligned[0].Z.shape == traces[0].Z.shape


DESK = SamplerConfig(iterations=50_000, burn_in=10_000, thin=50)


def fit_simulated(n, delta, alpha, fit_p, seed, n_chains=1):
    rng = np.random.default_rng(seed)
    sim = simulate_network(n, len(delta), delta, alpha, 'logit', rng)
    traces = run_chains(sim.network, Hyperparams(p=fit_p), replace(DESK, seed=seed), 'logit', n_chains,
                        threads=n_chains)
    report, summary, _ = diagnostics(traces)
    return sim, report, summary


@pytest.fixture(scope='module')
def hundred_node_fits():
    return [fit_simulated(100, (0.5, 1.1), 3.0, 5, seed) for seed in range(10)]


@pytest.mark.slow
class TestRecoveryOnSimulatedNetworks:
    def test_two_effective_dimensions(self, hundred_node_fits):
        recovered = 0
        for _, report, summary in hundred_node_fits:
            means = summary.delta_means()
            if report['effective_dimension']['dimension'] == 2 and means[2] > 2 * means[1]:
                recovered += 1
        assert recovered >= 8

    def test_positions_recovered(self, hundred_node_fits):
        correlations = [procrustes_correlation(summary.Z_mean[:, :2], sim.Z_true)
                        for sim, _, summary in hundred_node_fits]
        assert sum(c >= 0.9 for c in correlations) >= 8

    def test_alpha_compensates_truncation_level(self):
        setting = study_preset(2)[0]
        below = above = 0
        for seed in range(5):
            for fit_p in (3, 8):
                _, _, summary = fit_simulated(setting.n, setting.delta, setting.alpha, fit_p, 100 + seed)
                alpha_mean = summary.table.loc['alpha', 'mean']
                if fit_p == 3:
                    below += alpha_mean < setting.alpha
                else:
                    above += alpha_mean > setting.alpha
        assert below >= 4
        assert above >= 4

    def test_multi_chain_r_hat(self):
        _, report, _ = fit_simulated(50, (0.5, 1.1), 3.0, 5, 7, n_chains=3)
        assert report['r_hat']['alpha'] < 1.1
