"""
Generative model: latent positions from the shrinkage prior, edges from the link model.
"""
import logging
from typing import NamedTuple

import numpy as np

from data_handlers.network import EdgeKind, Network
from models.likelihood import LinkKind, edge_mean_matrix
from models.prior import ShrinkageState
from utils.validators import ValidationError

logger = logging.getLogger('simulation')


class SimulatedNetwork(NamedTuple):
    network: Network
    Z_true: np.ndarray
    metadata: dict


def draw_edges(mean, kind, rng, directed=True):
    """
    Bernoulli(q_ij) or Poisson(lambda_ij) draws for every ordered pair.

    Undirected networks draw the pairs i < j and mirror them.
    """
    kind = LinkKind.from_model(kind)
    n = mean.shape[0]
    if kind is LinkKind.LOGIT:
        edges = (rng.random((n, n)) < mean).astype(np.int64)
    else:
        edges = rng.poisson(mean).astype(np.int64)
    np.fill_diagonal(edges, 0)
    if not directed:
        upper = np.triu(edges, k=1)
        edges = upper + upper.T
    return Network(edges, kind=kind.edge_kind, directed=directed)


def simulate_network(n, p_star, delta, alpha, kind, rng, directed=False):
    """
    Simulate a network from the latent shrinkage position model.

    Args:
        n: Number of nodes
        p_star: Number of latent dimensions (length of delta)
        delta: Shrinkage strengths, delta_1 > 0, delta_h >= 1
        alpha: Global connectivity
        kind: 'logit'/'poisson' or LinkKind
        rng: numpy Generator
        directed: Draw both directions independently

    Returns:
        SimulatedNetwork(network, Z_true, metadata)
    """
    if int(n) != n or n < 2:
        raise ValidationError(f"n must be an integer >= 2, got {n!r}")
    delta = np.asarray(delta, dtype=float)
    if delta.size != p_star:
        raise ValidationError(f"delta has {delta.size} entries but p_star={p_star}")
    shrink = ShrinkageState.from_delta(delta)
    kind = LinkKind.from_model(kind)

    Z = rng.standard_normal((int(n), int(p_star))) / np.sqrt(shrink.omega)
    net = draw_edges(edge_mean_matrix(alpha, Z, kind), kind, rng, directed=directed)

    metadata = {
        'n': int(n),
        'p_star': int(p_star),
        'alpha': float(alpha),
        'delta': shrink.delta.tolist(),
        'omega': shrink.omega.tolist(),
        'variances': shrink.variances.tolist(),
        'model': kind.model_name,
        'directed': bool(directed),
        'density': float(np.count_nonzero(net.offdiag_values())) / net.n_pairs,
    }
    if kind is LinkKind.LOG:
        metadata['count_mean'], metadata['count_variance'] = overdispersion_stats(net)
    return SimulatedNetwork(net, Z, metadata)


def overdispersion_stats(net):
    """Sample mean and variance (ddof=1) of the off-diagonal counts."""
    if net.kind != EdgeKind.COUNT:
        logger.warning("overdispersion_stats on a binary network")
    values = net.offdiag_values().astype(float)
    variance = float(values.var(ddof=1)) if values.size > 1 else 0.0
    return float(values.mean()), variance
