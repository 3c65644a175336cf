"""
Chain initialization: classical MDS on geodesic distances, a GLM fit of
alpha - beta * d^2 for the intercept and scale, then empirical shrinkage.
"""
import logging
import warnings
from typing import NamedTuple

import numpy as np
import statsmodels.api as sm
from scipy.special import logit
from statsmodels.tools.sm_exceptions import PerfectSeparationWarning

from data_handlers.processors import geodesic_distances
from inference.state import ChainState
from models.likelihood import LatentNetworkModel, LinkKind, pairwise_sq_distances
from models.prior import ShrinkageState
from utils.validators import ValidationError

logger = logging.getLogger('initializer')

IRLS_TOL = 1e-8
IRLS_MAXITER = 100
VARIANCE_FLOOR = 1e-6
MEAN_CLIP = 1e-6


class RegressionEstimate(NamedTuple):
    alpha: float
    beta: float
    used_fallback: bool


def classical_mds(D, p):
    """
    Classical (Torgerson) multidimensional scaling.

    Args:
        D: n x n symmetric distance matrix
        p: Number of dimensions, p < n

    Returns:
        n x p centered coordinates. Each column's largest-magnitude entry is positive;
        columns for non-positive eigenvalues are zero.
    """
    D = np.asarray(D, dtype=float)
    n = D.shape[0]
    if D.ndim != 2 or D.shape[1] != n:
        raise ValidationError(f"distance matrix must be square, got shape {D.shape}")
    if int(p) != p or not 1 <= p < n:
        raise ValidationError(f"MDS dimension p={p} must satisfy 1 <= p < n={n}")

    J = np.eye(n) - np.ones((n, n)) / n
    B = -0.5 * J @ np.square(D) @ J
    B = (B + B.T) / 2

    evals, evecs = np.linalg.eigh(B)
    order = np.argsort(evals)[::-1][:p]

    coords = np.zeros((n, p))
    for col, k in enumerate(order):
        if evals[k] <= 0:
            continue
        v = evecs[:, k]
        if v[np.argmax(np.abs(v))] < 0:
            v = -v
        coords[:, col] = v * np.sqrt(evals[k])

    return coords - coords.mean(axis=0)


def _fallback_estimate(y, kind, reason):
    mean = float(np.mean(y))
    if kind is LinkKind.LOGIT:
        alpha = float(logit(np.clip(mean, MEAN_CLIP, 1.0 - MEAN_CLIP)))
    else:
        alpha = float(np.log(max(mean, MEAN_CLIP)))
    logger.warning(f"Regression init fallback ({reason}): alpha_hat={alpha:.4f}, beta_hat=1")
    return RegressionEstimate(alpha, 1.0, True)


def init_regression(net, Z0, kind):
    """
    Fit link(E[y_ij]) = alpha - beta * ||z_i - z_j||^2 by IRLS over ordered pairs i != j.

    Falls back to (link(mean response), 1) on separation, singular designs or
    non-convergence.

    Returns:
        RegressionEstimate(alpha, beta, used_fallback)
    """
    kind = LinkKind.from_model(kind)
    mask = net.offdiag_mask()
    y = net.edges[mask].astype(float)
    d2 = pairwise_sq_distances(Z0)[mask]

    if np.ptp(y) == 0:
        return _fallback_estimate(y, kind, 'constant responses')
    if np.ptp(d2) == 0:
        return _fallback_estimate(y, kind, 'degenerate distances')

    family = sm.families.Binomial() if kind is LinkKind.LOGIT else sm.families.Poisson()
    X = np.column_stack([np.ones_like(d2), -d2])

    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter('always')
        try:
            result = sm.GLM(y, X, family=family).fit(method='IRLS', tol=IRLS_TOL, maxiter=IRLS_MAXITER)
        except (np.linalg.LinAlgError, ValueError) as e:
            return _fallback_estimate(y, kind, str(e)[:50])

    if any(issubclass(w.category, PerfectSeparationWarning) for w in caught):
        return _fallback_estimate(y, kind, 'perfect separation')
    params = np.asarray(result.params, dtype=float)
    if not getattr(result, 'converged', True) or not np.all(np.isfinite(params)):
        return _fallback_estimate(y, kind, 'IRLS did not converge')

    alpha_hat, beta_hat = float(params[0]), float(params[1])
    logger.info(f"Regression init: alpha_hat={alpha_hat:.4f}, beta_hat={beta_hat:.4f}")
    return RegressionEstimate(alpha_hat, beta_hat, False)


def empirical_shrinkage(Z):
    """
    Shrinkage state from column variances of Z.

    omega_l = 1/var(column l); delta_1 = omega_1, delta_h = omega_h/omega_{h-1} clamped at 1.
    """
    variances = np.maximum(np.var(Z, axis=0, ddof=1), VARIANCE_FLOOR)
    omega = 1.0 / variances
    delta = np.empty_like(omega)
    delta[0] = omega[0]
    delta[1:] = np.maximum(omega[1:] / omega[:-1], 1.0)
    return ShrinkageState.from_delta(delta)


def initialize_chain(net, hp, kind, alpha_inflation, rng, jitter_sd=0.0):
    """
    Starting state for one chain.

    Args:
        net: Observed Network
        hp: Hyperparams (hp.p sets the latent dimension)
        kind: LinkKind or model name
        alpha_inflation: Multiplier applied to the regression intercept
        rng: numpy Generator, used only for the optional jitter
        jitter_sd: sd of Gaussian noise added to the scaled MDS coordinates

    Returns:
        ChainState at iteration 0
    """
    model = LatentNetworkModel(net, kind)
    hp.validate_for(net.n)

    Z_mds = classical_mds(geodesic_distances(net), hp.p)
    estimate = init_regression(net, Z_mds, model.kind)

    Z0 = np.sqrt(abs(estimate.beta)) * Z_mds
    if jitter_sd > 0:
        Z0 = Z0 + rng.normal(0.0, jitter_sd, size=Z0.shape)

    shrink = empirical_shrinkage(Z0)
    alpha0 = estimate.alpha * alpha_inflation
    d2 = pairwise_sq_distances(Z0)

    return ChainState(
        Z=Z0,
        alpha=float(alpha0),
        shrink=shrink,
        log_lik=model.log_likelihood_from_d2(alpha0, d2),
        iteration=0,
        d2=d2,
    )
