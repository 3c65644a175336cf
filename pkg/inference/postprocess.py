"""
Post-processing of chain traces: Procrustes identification, posterior summaries,
effective-dimension report and convergence diagnostics.
"""
import logging
from dataclasses import dataclass, replace

import numpy as np
import pandas as pd
from scipy.linalg import orthogonal_procrustes
from scipy.spatial import procrustes
from statsmodels.tsa.stattools import acf

from inference.state import ChainTrace
from utils.validators import ValidationError, validate_same_shape

logger = logging.getLogger('postprocess')

INTERVAL = (0.025, 0.975)
MIN_GR_LENGTH = 10


def align_configuration(Z, reference):
    """Rotate/reflect and translate Z onto reference (no scaling)."""
    validate_same_shape('Z', Z, 'reference', reference)
    ref_mean = reference.mean(axis=0)
    Zc = Z - Z.mean(axis=0)
    R, _ = orthogonal_procrustes(Zc, reference - ref_mean)
    return Zc @ R + ref_mean


def procrustes_align(trace, reference):
    """Copy of the trace with every Z draw aligned to the reference configuration."""
    reference = np.asarray(reference, dtype=float)
    validate_same_shape('trace configuration', trace.reference_Z, 'reference', reference)
    aligned = np.empty_like(trace.Z)
    for t, Z in enumerate(trace.Z):
        aligned[t] = align_configuration(Z, reference)
    return replace(trace, Z=aligned)


def select_reference(traces):
    """Highest burn-in log-likelihood configuration across chains."""
    if not traces:
        raise ValidationError("no traces to select a reference from")
    best = max(traces, key=lambda t: t.reference_log_lik)
    logger.debug(f"Procrustes reference from chain {best.chain_index} (loglik {best.reference_log_lik:.3f})")
    return best.reference_Z


def align_traces(traces, reference=None):
    """Align all chains to one shared reference."""
    reference = select_reference(traces) if reference is None else reference
    return [procrustes_align(trace, reference) for trace in traces]


def procrustes_correlation(A, B):
    """
    Procrustes correlation sqrt(1 - disparity) between two configurations.

    The narrower configuration is padded with zero columns.
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if A.shape[0] != B.shape[0]:
        raise ValidationError(f"configurations have {A.shape[0]} and {B.shape[0]} rows")
    p = max(A.shape[1], B.shape[1])
    A = np.pad(A, ((0, 0), (0, p - A.shape[1])))
    B = np.pad(B, ((0, 0), (0, p - B.shape[1])))
    try:
        _, _, disparity = procrustes(B, A)
    except ValueError as e:
        raise ValidationError(f"degenerate configuration: {e}") from e
    return float(np.sqrt(max(1.0 - disparity, 0.0)))


def trace_series(trace, parameter):
    """
    One scalar series from a trace.

    parameter: 'alpha', 'loglik', 'delta_h', 'omega_l' or 'variance_l' (1-based index)
    """
    if parameter == 'alpha':
        return trace.alpha
    if parameter == 'loglik':
        return trace.log_lik
    name, _, index = parameter.partition('_')
    if name in ('delta', 'omega', 'variance') and index.isdigit():
        col = int(index) - 1
        if not 0 <= col < trace.p:
            raise ValidationError(f"{parameter} out of range for p={trace.p}")
        if name == 'delta':
            return trace.delta[:, col]
        if name == 'omega':
            return trace.omega[:, col]
        return 1.0 / trace.omega[:, col]
    raise ValidationError(f"unknown trace parameter {parameter!r}")


def summary_parameters(p):
    return (['alpha'] + [f'delta_{h}' for h in range(1, p + 1)]
            + [f'variance_{h}' for h in range(1, p + 1)])


@dataclass
class PosteriorSummary:
    """Pooled posterior summary table (one row per parameter) and the posterior-mean Z."""
    table: pd.DataFrame
    Z_mean: np.ndarray
    n_draws: int

    def delta_means(self):
        return self.table.loc[[i for i in self.table.index if i.startswith('delta_')], 'mean'].to_numpy()

    def delta_widths(self):
        return self.table.loc[[i for i in self.table.index if i.startswith('delta_')], 'width'].to_numpy()

    def to_dict(self):
        return {
            'n_draws': self.n_draws,
            'parameters': {name: row.to_dict() for name, row in self.table.iterrows()},
        }


def posterior_summary(traces):
    """
    Means, medians and central 95% intervals for alpha, each delta_h and each
    omega_l^-1, pooled over chains, plus the posterior-mean configuration.
    """
    traces = [traces] if isinstance(traces, ChainTrace) else list(traces)
    if not traces or sum(len(t) for t in traces) == 0:
        raise ValidationError("posterior summary needs at least one recorded draw")

    p = traces[0].p
    rows = {}
    for parameter in summary_parameters(p):
        draws = np.concatenate([trace_series(t, parameter) for t in traces])
        lower, upper = np.quantile(draws, INTERVAL)
        rows[parameter] = {
            'mean': float(np.mean(draws)),
            'median': float(np.median(draws)),
            'lower': float(lower),
            'upper': float(upper),
            'width': float(upper - lower),
        }

    Z_all = np.concatenate([t.Z for t in traces])
    return PosteriorSummary(
        table=pd.DataFrame.from_dict(rows, orient='index'),
        Z_mean=Z_all.mean(axis=0),
        n_draws=int(Z_all.shape[0]),
    )


@dataclass(frozen=True)
class EffectiveDimension:
    dimension: int
    at_least: bool
    report: str

    def to_dict(self):
        return {'dimension': self.dimension, 'at_least': self.at_least, 'report': self.report}


def effective_dimensions(delta_means, delta_widths, jump_factor=2.0, width_factor=2.0, floor=1.0):
    """
    Effective dimension from posterior delta summaries.

    The first h >= 2 whose posterior mean delta_h exceeds jump_factor times that of
    delta_{h-1} and whose interval width exceeds width_factor times that of
    delta_{h-1} marks the switch to shrunk dimensions; the effective dimension is h - 1.

    delta_2.. are truncated below at floor while delta_1 is not, so the mean baseline
    for h = 2 is max(delta_1, floor).
    """
    means = np.asarray(delta_means, dtype=float)
    widths = np.asarray(delta_widths, dtype=float)
    validate_same_shape('delta_means', means, 'delta_widths', widths)
    p = means.size

    for h in range(2, p + 1):
        baseline = max(means[0], floor) if h == 2 else means[h - 2]
        if means[h - 1] > jump_factor * baseline and widths[h - 1] > width_factor * widths[h - 2]:
            return EffectiveDimension(
                dimension=h - 1,
                at_least=False,
                report=f"effective dimension {h - 1}: delta_{h} jumps from {means[h - 2]:.3g} to {means[h - 1]:.3g}",
            )
    return EffectiveDimension(
        dimension=p,
        at_least=True,
        report=f">= {p}: no shrinkage jump up to the truncation level, raise p",
    )


def gelman_rubin(traces, parameter='alpha'):
    """
    Potential scale reduction factor R-hat = sqrt(V / W) for one parameter.

    V = (N-1)/N W + B/N with W the mean within-chain variance and B/N the
    variance of the chain means.
    """
    if len(traces) < 2:
        raise ValidationError(f"Gelman-Rubin needs at least 2 chains, got {len(traces)}")
    series = [np.asarray(trace_series(t, parameter) if isinstance(t, ChainTrace) else t, dtype=float)
              for t in traces]
    lengths = {len(s) for s in series}
    if len(lengths) != 1:
        raise ValidationError(f"chains have unequal lengths {sorted(lengths)}")
    N = lengths.pop()
    if N < MIN_GR_LENGTH:
        raise ValidationError(f"chains need at least {MIN_GR_LENGTH} draws, got {N}")

    chains = np.vstack(series)
    W = float(np.mean(np.var(chains, axis=1, ddof=1)))
    B = N * float(np.var(chains.mean(axis=1), ddof=1))
    if W == 0:
        return float('inf') if B > 0 else 1.0
    V = (N - 1) / N * W + B / N
    return float(np.sqrt(V / W))


def convergence_table(traces):
    """R-hat for alpha, every delta_h and the log-likelihood; None for a single chain or short chains."""
    parameters = ['alpha'] + [f'delta_{h}' for h in range(1, traces[0].p + 1)] + ['loglik']
    if len(traces) < 2:
        return {name: None for name in parameters}
    if min(len(t) for t in traces) < MIN_GR_LENGTH:
        logger.warning(f"R-hat skipped: chains have fewer than {MIN_GR_LENGTH} recorded draws")
        return {name: None for name in parameters}
    return {name: gelman_rubin(traces, name) for name in parameters}


def autocorrelation(trace, parameter='alpha', max_lag=50):
    """Sample autocorrelation at lags 0..max_lag."""
    series = trace_series(trace, parameter) if isinstance(trace, ChainTrace) else trace
    series = np.asarray(series, dtype=float)
    if series.size <= max_lag:
        raise ValidationError(f"series of length {series.size} is too short for max_lag={max_lag}")
    if np.ptp(series) == 0:
        raise ValidationError("autocorrelation of a constant series is undefined")
    return acf(series, nlags=max_lag, fft=True)


def effective_sample_size(series):
    """
    N / (1 + 2 sum of autocorrelations), summed until the first negative lag.

    Returns NaN for constant series.
    """
    series = np.asarray(series, dtype=float)
    N = series.size
    if N < 2 or np.ptp(series) == 0:
        return float('nan')
    rho = acf(series, nlags=N - 1, fft=True)[1:]
    negative = np.flatnonzero(rho < 0)
    cutoff = negative[0] if negative.size else rho.size
    tau = 1.0 + 2.0 * float(rho[:cutoff].sum())
    return float(N / max(tau, 1e-12))


def diagnostics(traces, jump_factor=2.0, width_factor=2.0):
    """
    Full diagnosis of a fit: aligned traces, pooled summary, effective dimension,
    R-hat and ESS per parameter, acceptance rates.

    Returns:
        (report dict, PosteriorSummary, aligned traces)
    """
    aligned = align_traces(traces)
    summary = posterior_summary(aligned)
    effective = effective_dimensions(summary.delta_means(), summary.delta_widths(),
                                     jump_factor=jump_factor, width_factor=width_factor)
    r_hat = convergence_table(aligned)
    # pooled ESS is the sum over chains
    ess = {name: float(np.sum([effective_sample_size(trace_series(t, name)) for t in aligned]))
           for name in r_hat}

    report = {
        'chains': len(aligned),
        'summary': summary.to_dict(),
        'effective_dimension': effective.to_dict(),
        'r_hat': r_hat,
        'ess': {k: (None if np.isnan(v) else v) for k, v in ess.items()},
        'acceptance': {
            f'chain_{t.chain_index}': {'z': t.z_acceptance_rate, 'alpha': t.alpha_acceptance_rate}
            for t in aligned
        },
    }
    logger.info(f"Diagnosis: {effective.report}; R-hat(alpha)={r_hat['alpha']}")
    return report, summary, aligned
