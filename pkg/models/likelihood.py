"""
Distance-model likelihood (logit link for binary edges, log link for counts)
and the full conditionals used by the sampler.

eta_ij = alpha - ||z_i - z_j||^2 over ordered pairs i != j.
"""
import logging
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.spatial.distance import cdist
from scipy.special import expit, gammaln

from data_handlers.network import EdgeKind
from utils.validators import ValidationError

logger = logging.getLogger('likelihood')

ETA_CLIP = 700.0


class LinkKind(str, Enum):
    LOGIT = 'logit'
    LOG = 'log'

    @classmethod
    def from_model(cls, name):
        """Accept CLI model names ('logit', 'poisson') as well as link names."""
        if isinstance(name, cls):
            return name
        aliases = {'logit': cls.LOGIT, 'logistic': cls.LOGIT, 'poisson': cls.LOG, 'log': cls.LOG}
        try:
            return aliases[str(name).lower()]
        except KeyError:
            raise ValidationError(f"unknown model {name!r}, expected 'logit' or 'poisson'") from None

    @classmethod
    def for_edges(cls, edge_kind):
        return cls.LOGIT if EdgeKind(edge_kind) == EdgeKind.BINARY else cls.LOG

    @property
    def edge_kind(self):
        return EdgeKind.BINARY if self is LinkKind.LOGIT else EdgeKind.COUNT

    @property
    def model_name(self):
        return 'logit' if self is LinkKind.LOGIT else 'poisson'


# n x p latent positions, row i = z_i
LatentConfig = np.ndarray


@dataclass(frozen=True)
class ModelParams:
    alpha: float
    kind: LinkKind = LinkKind.LOGIT

    def __post_init__(self):
        if not np.isfinite(self.alpha):
            raise ValidationError(f"alpha must be finite, got {self.alpha}")
        object.__setattr__(self, 'kind', LinkKind.from_model(self.kind))


def sq_distance(Z, i, j):
    """Squared Euclidean distance between rows i and j of Z."""
    if i == j:
        raise ValidationError(f"sq_distance needs two distinct nodes, got i = j = {i}")
    diff = Z[i] - Z[j]
    return float(np.sum(diff * diff))


def pairwise_sq_distances(Z):
    """n x n matrix of squared Euclidean distances (zero diagonal)."""
    Z = np.asarray(Z, dtype=float)
    d2 = cdist(Z, Z, 'sqeuclidean')
    np.fill_diagonal(d2, 0.0)
    return d2


def edge_mean(alpha, d2, kind):
    """Edge probability (logit) or Poisson rate (log) at squared distance d2."""
    eta = np.clip(alpha - np.asarray(d2, dtype=float), -ETA_CLIP, ETA_CLIP)
    if LinkKind.from_model(kind) is LinkKind.LOGIT:
        mean = expit(eta)
    else:
        mean = np.exp(eta)
    return float(mean) if np.ndim(mean) == 0 else mean


def edge_mean_matrix(alpha, Z, kind):
    """n x n matrix of q_ij or lambda_ij with zero diagonal."""
    mean = edge_mean(alpha, pairwise_sq_distances(Z), kind)
    np.fill_diagonal(mean, 0.0)
    return mean


class LatentNetworkModel:
    """
    Likelihood of one observed network under a link kind.

    Holds the data-dependent constants (off-diagonal mask, sum of y, log y!) so the
    sampler only recomputes the distance-dependent parts.
    """

    def __init__(self, net, kind=None):
        kind = LinkKind.for_edges(net.kind) if kind is None else LinkKind.from_model(kind)
        if kind.edge_kind != net.kind:
            raise ValidationError(
                f"{kind.model_name} model needs a {kind.edge_kind.value} network, got {net.kind.value}"
            )
        self.net = net
        self.kind = kind
        self.n = net.n
        self.y = net.edges.astype(float)
        self.mask = net.offdiag_mask()
        self.sum_y = float(self.y[self.mask].sum())
        self.n_pairs = net.n_pairs
        # log(y!) is constant across iterations
        self.log_factorial = gammaln(self.y + 1.0) if kind is LinkKind.LOG else np.zeros_like(self.y)
        self.clip_count = 0

    def eta(self, alpha, d2):
        eta = alpha - d2
        clipped = np.abs(eta) > ETA_CLIP
        if clipped.any():
            self.clip_count += int(np.count_nonzero(clipped))
            eta = np.clip(eta, -ETA_CLIP, ETA_CLIP)
        return eta

    def _terms(self, eta, y, log_factorial):
        if self.kind is LinkKind.LOGIT:
            return eta * y - np.logaddexp(0.0, eta)
        return eta * y - np.exp(eta) - log_factorial

    def log_likelihood_from_d2(self, alpha, d2):
        """Sum over ordered pairs i != j in row-major order."""
        terms = self._terms(self.eta(alpha, d2), self.y, self.log_factorial)
        return float(terms[self.mask].sum())

    def log_likelihood(self, Z, alpha):
        return self.log_likelihood_from_d2(alpha, pairwise_sq_distances(Z))

    def node_log_likelihood(self, i, alpha, d2_row):
        """Contribution of the pairs (i, j) and (j, i), j != i, given row i of the distances."""
        eta = self.eta(alpha, d2_row)
        keep = np.arange(self.n) != i
        out_terms = self._terms(eta, self.y[i], self.log_factorial[i])
        in_terms = self._terms(eta, self.y[:, i], self.log_factorial[:, i])
        return float(out_terms[keep].sum() + in_terms[keep].sum())

    def alpha_score_info(self, alpha, d2):
        """
        First derivative and negative second derivative of the log-likelihood in alpha.

        Returns:
            (score, information)
        """
        eta = self.eta(alpha, d2)[self.mask]
        if self.kind is LinkKind.LOGIT:
            q = expit(eta)
            return self.sum_y - float(q.sum()), float((q * (1.0 - q)).sum())
        rate = np.exp(eta)
        total = float(rate.sum())
        return self.sum_y - total, total


def log_likelihood(net, Z, params):
    """log L(Y | Z, alpha) summed over ordered pairs i != j."""
    return LatentNetworkModel(net, params.kind).log_likelihood(Z, params.alpha)


def log_prior_Z(Z, omega):
    """sum_i sum_l -omega_l z_il^2 / 2"""
    return float(-0.5 * np.sum(omega * np.square(Z)))


def log_full_conditional_Z(net, Z, params, shrink):
    """Log full conditional of Z up to an additive constant."""
    return log_likelihood(net, Z, params) + log_prior_Z(Z, shrink.omega)


def delta1_conditional_params(Z, delta, hp):
    """
    Shape and rate of the gamma full conditional of delta_1.

    rate = b1 + 1/2 sum_{i,l} (prod_{m=2..l} delta_m) z_il^2
    """
    Z = np.asarray(Z, dtype=float)
    n, p = Z.shape
    delta = np.asarray(delta, dtype=float)
    weights = np.concatenate(([1.0], np.cumprod(delta[1:])))
    col_ss = np.square(Z).sum(axis=0)
    shape = n * p / 2.0 + hp.a1
    rate = hp.b1 + 0.5 * float(np.dot(weights, col_ss))
    return shape, rate


def deltah_conditional_params(h, Z, delta, hp):
    """
    Shape, rate and truncation point of the full conditional of delta_h, h >= 2 (1-based).

    rate = b2 + 1/2 sum_i sum_{l=h..p} (prod_{m<=l, m!=h} delta_m) z_il^2
    """
    Z = np.asarray(Z, dtype=float)
    n, p = Z.shape
    if int(h) != h or not 2 <= h <= p:
        raise ValidationError(f"dimension h must lie in [2, {p}], got {h!r}")
    h = int(h)
    leave_out = np.array(delta, dtype=float)
    leave_out[h - 1] = 1.0
    weights = np.cumprod(leave_out)[h - 1:]
    col_ss = np.square(Z[:, h - 1:]).sum(axis=0)
    shape = n * (p - h + 1) / 2.0 + hp.a2
    rate = hp.b2 + 0.5 * float(np.dot(weights, col_ss))
    return shape, rate, hp.c2
