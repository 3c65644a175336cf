"""
Multiplicative truncated gamma process prior on the latent-space precisions.

delta_1 ~ Gam(a1, b1), delta_h ~ Gam^T(a2, b2, c2) for h >= 2 (left-truncated at c2 = 1),
omega_l = prod_{h<=l} delta_h is the precision of latent dimension l.
"""
import logging
import math
from dataclasses import asdict, dataclass, fields, replace

import numpy as np
import pandas as pd
from scipy import integrate
from scipy.special import gammainc, gammaincinv

from utils.validators import ValidationError, validate_positive, validate_truncation_level

logger = logging.getLogger('prior')

# F(lower) above this -> inverse CDF loses precision, use the tail sampler
TAIL_THRESHOLD = 1.0 - 1e-12


@dataclass(frozen=True)
class Hyperparams:
    """Prior hyperparameters. Defaults follow config.DEFAULT_PRIOR."""
    a1: float = 1.1
    b1: float = 1.0
    a2: float = 2.0
    b2: float = 1.0
    c2: float = 1.0
    mu_alpha: float = 0.0
    sigma2_alpha: float = 9.0
    p: int = 5

    def __post_init__(self):
        for name in ('a1', 'b1', 'a2', 'b2', 'sigma2_alpha'):
            validate_positive(name, getattr(self, name))
        if not self.a1 > 1:
            raise ValidationError(f"a1 must exceed 1 for finite expected distances, got {self.a1}")
        if self.c2 != 1:
            raise ValidationError(f"truncation point c2 must be 1, got {self.c2}")
        if not math.isfinite(self.mu_alpha):
            raise ValidationError(f"mu_alpha must be finite, got {self.mu_alpha}")
        object.__setattr__(self, 'p', validate_truncation_level(self.p, None))

    @classmethod
    def from_mapping(cls, mapping):
        """Build from a config section; unknown keys are ignored, missing keys keep defaults."""
        known = {f.name for f in fields(cls)}
        values = {k: v for k, v in (mapping or {}).items() if k in known}
        return cls(**values)

    def validate_for(self, n):
        """Check the truncation level against a network size (p < n/2)."""
        validate_truncation_level(self.p, n)
        return self

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True, eq=False)
class ShrinkageState:
    """
    Shrinkage strengths delta and the precisions omega = cumprod(delta).

    omega is always derived from delta, never stored independently.
    """
    delta: np.ndarray
    omega: np.ndarray

    @classmethod
    def from_delta(cls, delta):
        delta = np.array(delta, dtype=float)
        if delta.ndim != 1 or delta.size < 1:
            raise ValidationError(f"delta must be a non-empty vector, got shape {delta.shape}")
        if not np.all(np.isfinite(delta)):
            raise ValidationError("delta must be finite")
        if not delta[0] > 0:
            raise ValidationError(f"delta_1 must be positive, got {delta[0]}")
        if np.any(delta[1:] < 1):
            raise ValidationError(f"delta_h must be >= 1 for h >= 2, got {delta[1:].tolist()}")
        omega = np.cumprod(delta)
        delta.setflags(write=False)
        omega.setflags(write=False)
        return cls(delta=delta, omega=omega)

    @property
    def p(self):
        return self.delta.size

    @property
    def variances(self):
        """Latent-position variance per dimension, 1/omega."""
        return 1.0 / self.omega

    def __repr__(self):
        return f"ShrinkageState(delta={np.round(self.delta, 4).tolist()})"


def sample_truncated_gamma(shape, rate, lower, rng):
    """
    Draw from Gamma(shape, rate) conditioned on x >= lower.

    Inverse CDF on the regularized incomplete gamma function; when nearly all mass
    lies below `lower` an exact rejection sampler with a shifted exponential
    envelope takes over.

    Args:
        shape: Gamma shape (> 0)
        rate: Gamma rate (> 0)
        lower: Truncation point (>= 0)
        rng: numpy Generator

    Returns:
        float >= lower
    """
    validate_positive('shape', shape)
    validate_positive('rate', rate)
    if lower <= 0:
        return float(rng.gamma(shape, 1.0 / rate))

    f_lower = gammainc(shape, rate * lower)
    if f_lower <= TAIL_THRESHOLD:
        u = rng.uniform(f_lower, 1.0)
        return max(float(gammaincinv(shape, u) / rate), float(lower))

    return _sample_gamma_tail(shape, rate, lower, rng)


def _sample_gamma_tail(shape, rate, lower, rng):
    # target density on x >= L is proportional to x^(a-1) exp(-b x)
    a, b, L = shape, rate, lower
    lam = b - max(a - 1.0, 0.0) / L
    if lam <= 0:
        while True:
            x = rng.gamma(a, 1.0 / b)
            if x >= L:
                return float(x)

    while True:
        x = L + rng.exponential(1.0 / lam)
        log_accept = (a - 1.0) * math.log(x / L) - (b - lam) * (x - L)
        if math.log(rng.random()) <= log_accept:
            return float(x)


def incomplete_gamma_ratio(a2):
    """
    Gamma(a2 - 1, 1) / Gamma(a2, 1) with Gamma(s, 1) the upper incomplete gamma function.

    Both integrals start at 1, so the ratio is finite for every a2 > 0.
    """
    validate_positive('a2', a2)

    def upper(s):
        value, _ = integrate.quad(lambda t: t ** (s - 1.0) * math.exp(-t), 1.0, np.inf,
                                  epsabs=0.0, epsrel=1e-12, limit=200)
        return value

    return upper(a2 - 1.0) / upper(a2)


def expected_sq_distance_dim(ell, hp):
    """Prior expected squared distance between two nodes within dimension ell (1-based)."""
    if int(ell) != ell or ell < 1:
        raise ValidationError(f"dimension index must be a positive integer, got {ell!r}")
    r = incomplete_gamma_ratio(hp.a2)
    return 2.0 * hp.b1 / (hp.a1 - 1.0) * r ** (ell - 1)


def expected_sq_distance_total(hp, p=None):
    """
    Prior expected squared distance summed over dimensions 1..p.

    p defaults to hp.p; p=math.inf returns the geometric limit.
    """
    p = hp.p if p is None else p
    base = 2.0 * hp.b1 / (hp.a1 - 1.0)
    r = incomplete_gamma_ratio(hp.a2)
    if math.isinf(p):
        return base / (1.0 - r)
    return base * (1.0 - r ** p) / (1.0 - r)


def sample_prior_shrinkage(hp, rng):
    """Forward draw of a ShrinkageState from the prior."""
    delta = np.empty(hp.p)
    delta[0] = rng.gamma(hp.a1, 1.0 / hp.b1)
    for h in range(1, hp.p):
        delta[h] = sample_truncated_gamma(hp.a2, hp.b2, hp.c2, rng)
    return ShrinkageState.from_delta(delta)


def expected_distance_table(hp, a2_values=None, p_max=None):
    """
    Per-dimension and cumulative prior expected squared distances across a2 values.

    Returns:
        DataFrame with columns a2, ratio, dimension, expected_sq_distance, cumulative
    """
    a2_values = [hp.a2] if a2_values is None else list(a2_values)
    p_max = hp.p if p_max is None else int(p_max)

    rows = []
    for a2 in a2_values:
        hp_a2 = replace(hp, a2=float(a2))
        r = incomplete_gamma_ratio(hp_a2.a2)
        cumulative = 0.0
        for ell in range(1, p_max + 1):
            value = expected_sq_distance_dim(ell, hp_a2)
            cumulative += value
            rows.append({
                'a2': hp_a2.a2,
                'ratio': r,
                'dimension': ell,
                'expected_sq_distance': value,
                'cumulative': cumulative,
            })
    logger.debug(f"Expected distance table: {len(a2_values)} a2 values x {p_max} dimensions")
    return pd.DataFrame(rows)
