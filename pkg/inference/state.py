"""
Sampler state and recorded chain output.
"""
from dataclasses import dataclass, field

import numpy as np

from models.likelihood import pairwise_sq_distances


@dataclass
class ChainState:
    """
    Full sampler state at one iteration.

    log_lik caches log L(Y | Z, alpha); d2 caches the squared distance matrix of Z.
    """
    Z: np.ndarray
    alpha: float
    shrink: object  # models.prior.ShrinkageState
    log_lik: float
    iteration: int = 0
    d2: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        if self.d2 is None:
            self.d2 = pairwise_sq_distances(self.Z)

    @property
    def n(self):
        return self.Z.shape[0]

    @property
    def p(self):
        return self.Z.shape[1]

    def is_finite(self):
        return bool(np.isfinite(self.alpha) and np.isfinite(self.log_lik)
                    and np.all(np.isfinite(self.Z))
                    and np.all(np.isfinite(self.shrink.omega)))


@dataclass
class ChainTrace:
    """
    Thinned post-burn-in draws of one chain plus its acceptance counters.

    Arrays are indexed by recorded draw: Z (m, n, p), alpha (m,), delta/omega (m, p), log_lik (m,).
    reference_Z is the highest log-likelihood configuration seen during burn-in.
    """
    chain_index: int
    seed: int
    kind: str
    iterations: np.ndarray
    Z: np.ndarray
    alpha: np.ndarray
    delta: np.ndarray
    omega: np.ndarray
    log_lik: np.ndarray
    reference_Z: np.ndarray
    reference_log_lik: float
    z_accepted: int = 0
    z_proposed: int = 0
    alpha_accepted: int = 0
    alpha_proposed: int = 0
    clip_count: int = 0
    wall_time: float = 0.0
    # Z step factor in force after burn-in
    step_z: float = None

    def __len__(self):
        return len(self.alpha)

    @property
    def n(self):
        return self.reference_Z.shape[0]

    @property
    def p(self):
        return self.reference_Z.shape[1]

    @property
    def z_acceptance_rate(self):
        return self.z_accepted / self.z_proposed if self.z_proposed else 0.0

    @property
    def alpha_acceptance_rate(self):
        return self.alpha_accepted / self.alpha_proposed if self.alpha_proposed else 0.0

    def run_info(self):
        """Per-chain record for run manifests."""
        return {
            'chain': self.chain_index,
            'seed': self.seed,
            'draws': len(self),
            'z_acceptance': self.z_acceptance_rate,
            'alpha_acceptance': self.alpha_acceptance_rate,
            'eta_clips': self.clip_count,
            'step_z': self.step_z,
            'wall_time_sec': round(self.wall_time, 3),
        }
