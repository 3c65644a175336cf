"""
Posterior predictive checks: replicate networks from posterior draws and compare
them with the observed network.
"""
import logging
from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from scipy.spatial.distance import pdist
from scipy.special import xlogy

from data_handlers.network import EdgeKind
from data_handlers.processors import binarize, density, transitivity
from inference.postprocess import align_traces
from models.likelihood import LinkKind, edge_mean_matrix
from simulation.generator import draw_edges
from utils.validators import ValidationError

logger = logging.getLogger('ppc')

BAND = (0.025, 0.975)
PPC_MODES = ('pooled', 'per_chain')


class UndefinedMetricError(ValueError):
    """Metric has no defined value for this input."""


def replicate_network(draw, kind, rng, directed=True):
    """
    Replicate network from one posterior draw (Z, alpha).

    Args:
        draw: (Z, alpha)
        kind: LinkKind or model name
        rng: numpy Generator
        directed: False mirrors the i < j draws
    """
    Z, alpha = draw
    return draw_edges(edge_mean_matrix(alpha, Z, kind), kind, rng, directed=directed)


def _check_pair(obs, rep, binary):
    if obs.n != rep.n:
        raise ValidationError(f"networks differ in size: {obs.n} vs {rep.n}")
    if binary and (obs.kind != EdgeKind.BINARY or rep.kind != EdgeKind.BINARY):
        raise ValidationError("metric is defined for binary networks only")


def accuracy_f1(obs, rep):
    """Accuracy and F1 of rep against obs over ordered pairs i != j."""
    _check_pair(obs, rep, binary=True)
    y = obs.offdiag_values().astype(bool)
    r = rep.offdiag_values().astype(bool)
    tp = int(np.sum(y & r))
    tn = int(np.sum(~y & ~r))
    fp = int(np.sum(~y & r))
    fn = int(np.sum(y & ~r))

    accuracy = (tp + tn) / obs.n_pairs
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return accuracy, f1


def hamming(obs, rep):
    """Normalised Hamming distance over ordered pairs."""
    _check_pair(obs, rep, binary=True)
    return float(np.count_nonzero(obs.offdiag_values() != rep.offdiag_values())) / obs.n_pairs


def count_frequency_table(net, max_count=10):
    """Frequencies of off-diagonal values 0..max_count; the last entry counts values above max_count."""
    values = np.minimum(net.offdiag_values(), max_count + 1)
    return np.bincount(values, minlength=max_count + 2)


def mean_absolute_difference(obs, rep):
    _check_pair(obs, rep, binary=False)
    diff = np.abs(obs.offdiag_values() - rep.offdiag_values())
    return float(diff.sum()) / obs.n_pairs


def pseudo_r2(obs, lambda_hat):
    """
    Deviance-based R^2 for counts: 1 for the saturated fit, 0 for the constant-rate fit.

    y log y is taken as 0 at y = 0.

    Raises:
        UndefinedMetricError: when all counts are equal
    """
    mask = obs.offdiag_mask()
    y = obs.edges[mask].astype(float)
    lam = np.asarray(lambda_hat, dtype=float)[mask]
    y_bar = y.mean()

    denominator = float(np.sum(xlogy(y, y / y_bar))) if y_bar > 0 else 0.0
    if denominator == 0:
        raise UndefinedMetricError("pseudo R^2 undefined: all observed counts are equal")
    numerator = float(np.sum(xlogy(y, lam / y_bar))) + float(np.sum(y_bar - lam))
    return numerator / denominator


def distance_ratio_distribution(Z_hat, Z_true):
    """Ratios of Euclidean pairwise distances, estimate over truth, for the n(n-1)/2 pairs."""
    Z_hat = np.asarray(Z_hat, dtype=float)
    Z_true = np.asarray(Z_true, dtype=float)
    if Z_hat.shape[0] != Z_true.shape[0]:
        raise ValidationError(f"configurations have {Z_hat.shape[0]} and {Z_true.shape[0]} rows")
    true_dist = pdist(Z_true)
    if np.any(true_dist == 0):
        raise ValidationError("true configuration has coincident nodes (zero distance)")
    return pdist(Z_hat) / true_dist


@dataclass
class PpcReport:
    """Per-replicate metric records with aggregate bands and observed values."""
    model: str
    mode: str
    n_replicates: int
    records: pd.DataFrame
    observed: dict
    bands: dict = field(default_factory=dict)
    pseudo_r2: object = None
    pseudo_r2_per_chain: dict = field(default_factory=dict)
    distance_ratios: dict = None
    notes: list = field(default_factory=list)

    def to_dict(self):
        return {
            'model': self.model,
            'mode': self.mode,
            'n_replicates': self.n_replicates,
            'n_records': len(self.records),
            'observed': self.observed,
            'bands': self.bands,
            'pseudo_r2': self.pseudo_r2,
            'pseudo_r2_per_chain': self.pseudo_r2_per_chain,
            'distance_ratios': self.distance_ratios,
            'notes': self.notes,
        }


def _observed_metrics(obs, kind, max_count):
    observed = {'density': density(obs), 'transitivity': transitivity(obs)}
    if kind is LinkKind.LOG:
        values = obs.offdiag_values().astype(float)
        observed['count_mean'] = float(values.mean())
        observed['count_variance'] = float(values.var(ddof=1))
        observed['count_frequencies'] = count_frequency_table(obs, max_count).tolist()
    return observed


def replicate_metrics(obs, rep, kind, max_count=10):
    """Metric record for one replicate."""
    record = {'density': density(rep), 'transitivity': transitivity(rep)}
    if kind is LinkKind.LOGIT:
        record['accuracy'], record['f1'] = accuracy_f1(obs, rep)
        record['hamming'] = hamming(obs, rep)
        return record

    values = rep.offdiag_values().astype(float)
    record['mean_abs_diff'] = mean_absolute_difference(obs, rep)
    record['count_mean'] = float(values.mean())
    record['count_variance'] = float(values.var(ddof=1))
    freq = count_frequency_table(rep, max_count)
    for c in range(max_count + 1):
        record[f'freq_{c}'] = int(freq[c])
    record['freq_over'] = int(freq[-1])
    return record


def _draw_positions(traces, n_replicates, mode, rng):
    """(chain, draw) positions of the states used for replicates."""
    if mode == 'pooled':
        offsets = np.cumsum([0] + [len(t) for t in traces])
        flat = rng.integers(offsets[-1], size=n_replicates)
        chains = np.searchsorted(offsets, flat, side='right') - 1
        return [(int(c), int(f - offsets[c])) for c, f in zip(chains, flat)]
    return [(c, int(d)) for c, t in enumerate(traces) for d in rng.integers(len(t), size=n_replicates)]


def _posterior_mean_rates(traces, kind):
    total, count = None, 0
    for t in traces:
        for Z, alpha in zip(t.Z, t.alpha):
            rates = edge_mean_matrix(alpha, Z, kind)
            total = rates if total is None else total + rates
            count += 1
    return total / count


def _bands(records):
    bands = {}
    for column in records.columns:
        if column in ('chain', 'draw', 'replicate'):
            continue
        values = records[column].to_numpy(dtype=float)
        lower, upper = np.quantile(values, BAND)
        bands[column] = {'mean': float(values.mean()), 'lower': float(lower), 'upper': float(upper)}
    return bands


def run_ppc(traces, net, kind, n_replicates, rng, mode='pooled', max_count=10, Z_true=None):
    """
    Posterior predictive check of a fit.

    Args:
        traces: List of ChainTrace (raw or aligned)
        net: Observed Network; count networks are binarized for the logit model
        kind: LinkKind or model name
        n_replicates: Replicates in total ('pooled') or per chain ('per_chain')
        rng: numpy Generator; each replicate gets a spawned child stream
        mode: 'pooled' or 'per_chain'
        max_count: Largest count tabulated separately in frequency tables
        Z_true: Optional true positions for the distance-ratio distribution

    Returns:
        PpcReport
    """
    kind = LinkKind.from_model(kind)
    if not traces or sum(len(t) for t in traces) == 0:
        raise ValidationError("posterior predictive check needs at least one recorded draw")
    if mode not in PPC_MODES:
        raise ValidationError(f"ppc mode must be one of {PPC_MODES}, got {mode!r}")
    if int(n_replicates) != n_replicates or n_replicates < 0:
        raise ValidationError(f"n_replicates must be a non-negative integer, got {n_replicates!r}")

    obs = binarize(net) if kind is LinkKind.LOGIT else net
    if kind.edge_kind != obs.kind:
        raise ValidationError(f"{kind.model_name} checks need a {kind.edge_kind.value} network")

    positions = _draw_positions(traces, int(n_replicates), mode, rng)
    streams = rng.spawn(len(positions)) if positions else []
    rows = []
    for r, ((c, d), stream) in enumerate(zip(positions, streams)):
        trace = traces[c]
        rep = replicate_network((trace.Z[d], trace.alpha[d]), kind, stream, directed=obs.directed)
        rows.append({'replicate': r, 'chain': trace.chain_index, 'draw': d,
                     **replicate_metrics(obs, rep, kind, max_count)})
    records = pd.DataFrame(rows)

    report = PpcReport(
        model=kind.model_name,
        mode=mode,
        n_replicates=int(n_replicates),
        records=records,
        observed=_observed_metrics(obs, kind, max_count),
        bands=_bands(records) if rows else {},
    )
    if rows:
        band = report.bands['density']
        report.observed['density_in_band'] = bool(band['lower'] <= report.observed['density'] <= band['upper'])

    if kind is LinkKind.LOG:
        try:
            report.pseudo_r2 = pseudo_r2(obs, _posterior_mean_rates(traces, kind))
            report.pseudo_r2_per_chain = {
                f'chain_{t.chain_index}': pseudo_r2(obs, _posterior_mean_rates([t], kind))
                for t in traces if len(t)
            }
        except UndefinedMetricError as e:
            report.notes.append(str(e))
            logger.warning(str(e))

    if Z_true is not None:
        aligned = align_traces(traces)
        Z_mean = np.concatenate([t.Z for t in aligned]).mean(axis=0)
        ratios = distance_ratio_distribution(Z_mean, Z_true)
        report.distance_ratios = {
            'mean': float(ratios.mean()),
            'median': float(np.median(ratios)),
            'lower': float(np.quantile(ratios, BAND[0])),
            'upper': float(np.quantile(ratios, BAND[1])),
        }

    logger.info(f"PPC: {len(rows)} replicates ({mode}), observed density {report.observed['density']:.4f}")
    return report
