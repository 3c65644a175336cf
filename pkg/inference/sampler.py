"""
Metropolis-within-Gibbs sampler for the latent shrinkage position model.

One iteration: random-walk Metropolis move on Z (whole matrix or node by node),
informed Metropolis-Hastings move on alpha, Gibbs draws of delta_1..delta_p,
then omega = cumprod(delta).
"""
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from enum import Enum
from typing import NamedTuple

import numpy as np
from scipy.spatial.distance import cdist
from scipy.stats import norm
from tqdm import tqdm

from config import DEFAULT_STEP_Z, sampler_burn_in, sampler_step_z
from inference.initializer import initialize_chain
from inference.state import ChainState, ChainTrace
from models.likelihood import LatentNetworkModel, LinkKind, log_prior_Z, pairwise_sq_distances
from models.likelihood import delta1_conditional_params, deltah_conditional_params
from models.prior import ShrinkageState, sample_truncated_gamma
from utils.validators import ValidationError, validate_step_size

logger = logging.getLogger('sampler')

__all__ = [
    'ZUpdateMode', 'SamplerConfig', 'ChainState', 'ChainTrace', 'ChainDivergenceError',
    'propose_Z', 'tune_step_z', 'accept_Z', 'informed_alpha_proposal', 'accept_alpha', 'update_alpha',
    'gibbs_update_deltas', 'gibbs_cycle', 'run_chain', 'run_chains',
]

# jitter applied to multi-chain runs when none is configured
MULTI_CHAIN_JITTER_SD = 0.1
LOGLIK_DRIFT_TOL = 1e-6
# bounds for the burn-in tuned Z step
MIN_STEP_Z = 1e-10
MAX_STEP_Z = 10.0


class ZUpdateMode(str, Enum):
    WHOLE = 'whole'
    PERNODE = 'pernode'


@dataclass(frozen=True)
class SamplerConfig:
    iterations: int
    burn_in: int
    thin: int = 1
    step_z: float = None
    step_alpha: float = 1.0
    z_update: ZUpdateMode = ZUpdateMode.WHOLE
    seed: int = 0
    alpha_inflation: float = 1.5
    init_jitter_sd: float = 0.0
    check_every: int = 1_000
    adapt_z: bool = True
    target_z_accept: float = 0.3
    adapt_every: int = 50
    progress: bool = False
    chain_index: int = 0

    def __post_init__(self):
        try:
            mode = ZUpdateMode(self.z_update)
        except ValueError:
            raise ValidationError(f"z_update must be 'whole' or 'pernode', got {self.z_update!r}") from None
        object.__setattr__(self, 'z_update', mode)

        if int(self.iterations) != self.iterations or self.iterations < 1:
            raise ValidationError(f"iterations must be a positive integer, got {self.iterations!r}")
        if int(self.burn_in) != self.burn_in or not 0 <= self.burn_in < self.iterations:
            raise ValidationError(
                f"burn_in must satisfy 0 <= burn_in < iterations ({self.iterations}), got {self.burn_in!r}"
            )
        if int(self.thin) != self.thin or self.thin < 1:
            raise ValidationError(f"thin must be an integer >= 1, got {self.thin!r}")
        if int(self.check_every) != self.check_every or self.check_every < 1:
            raise ValidationError(f"check_every must be an integer >= 1, got {self.check_every!r}")
        if self.alpha_inflation <= 0:
            raise ValidationError(f"alpha_inflation must be positive, got {self.alpha_inflation}")
        if self.init_jitter_sd < 0:
            raise ValidationError(f"init_jitter_sd must be non-negative, got {self.init_jitter_sd}")
        if not 0 < self.target_z_accept < 1:
            raise ValidationError(f"target_z_accept must lie in (0, 1), got {self.target_z_accept}")
        if int(self.adapt_every) != self.adapt_every or self.adapt_every < 1:
            raise ValidationError(f"adapt_every must be an integer >= 1, got {self.adapt_every!r}")

        step_z = DEFAULT_STEP_Z[mode.value] if self.step_z is None else float(self.step_z)
        if not (math.isfinite(step_z) and 0 < step_z <= MAX_STEP_Z):
            raise ValidationError(f"step_z must lie in (0, {MAX_STEP_Z:g}], got {step_z!r}")
        object.__setattr__(self, 'step_z', step_z)
        object.__setattr__(self, 'step_alpha', validate_step_size('step_alpha', self.step_alpha))

    @property
    def n_recorded(self):
        return (self.iterations - self.burn_in) // self.thin

    @classmethod
    def from_settings(cls, sampler_settings, model):
        """Build from the resolved [sampler] section for a model name."""
        s = sampler_settings
        return cls(
            iterations=int(s['iterations']),
            burn_in=sampler_burn_in(s, LinkKind.from_model(model).model_name),
            thin=int(s['thin']),
            step_z=sampler_step_z(s),
            step_alpha=float(s['step_alpha']),
            z_update=s['z_update'],
            seed=int(s['seed']),
            alpha_inflation=float(s['alpha_inflation']),
            init_jitter_sd=float(s['init_jitter_sd']),
            check_every=int(s['check_every']),
            adapt_z=bool(s.get('adapt_z', True)),
            target_z_accept=float(s.get('target_z_accept', 0.3)),
            adapt_every=int(s.get('adapt_every', 50)),
            progress=bool(s.get('progress', False)),
        )


class ChainDivergenceError(RuntimeError):
    """A chain produced a non-finite state; carries the last finite state."""

    def __init__(self, chain_index, iteration, last_good_state, message=None):
        self.chain_index = chain_index
        self.iteration = iteration
        self.last_good_state = last_good_state
        super().__init__(message or f"chain {chain_index} diverged at iteration {iteration}")

    def __reduce__(self):
        return (self.__class__, (self.chain_index, self.iteration, self.last_good_state, str(self)))


class CycleResult(NamedTuple):
    state: ChainState
    z_accepted: int
    z_proposed: int
    alpha_accepted: int


def _metropolis_accept(log_ratio, rng):
    if math.isnan(log_ratio):
        raise FloatingPointError("non-finite Metropolis-Hastings log ratio")
    return rng.random() < math.exp(min(0.0, log_ratio))


def propose_Z(state, cfg, rng, node=None):
    """
    Gaussian random-walk candidate: z_il + sqrt(k/omega_l) * N(0, 1).

    In per-node mode only row `node` is perturbed (a random node when None).
    """
    sd = np.sqrt(cfg.step_z / state.shrink.omega)
    if cfg.z_update is ZUpdateMode.WHOLE:
        return state.Z + rng.standard_normal(state.Z.shape) * sd

    if node is None:
        node = int(rng.integers(state.n))
    candidate = state.Z.copy()
    candidate[node] = state.Z[node] + rng.standard_normal(state.p) * sd
    return candidate


def tune_step_z(step_z, acceptance_rate, target, window):
    """
    One burn-in update of the Z step factor on the log scale.

    The step grows when the last window accepted more often than target and shrinks
    otherwise; the gain 0.5 / (1 + window)^0.6 decays so the step settles.
    """
    direction = 1.0 if acceptance_rate > target else -1.0
    step = math.exp(math.log(step_z) + 0.5 * direction / (1 + window) ** 0.6)
    return min(max(step, MIN_STEP_Z), MAX_STEP_Z)


def accept_Z(state, candidate, model, rng, node=None):
    """
    Metropolis step for a Z candidate: likelihood ratio times the N(0, Omega^-1) prior ratio.

    With `node` set only row `node` differs and only its pairs are re-evaluated.

    Returns:
        (state, accepted)
    """
    omega = state.shrink.omega
    if node is None:
        d2_new = pairwise_sq_distances(candidate)
        ll_new = model.log_likelihood_from_d2(state.alpha, d2_new)
        log_prior_diff = log_prior_Z(candidate, omega) - log_prior_Z(state.Z, omega)
    else:
        row = cdist(candidate[node:node + 1], candidate, 'sqeuclidean')[0]
        row[node] = 0.0
        ll_new = state.log_lik + (model.node_log_likelihood(node, state.alpha, row)
                                  - model.node_log_likelihood(node, state.alpha, state.d2[node]))
        log_prior_diff = log_prior_Z(candidate[node], omega) - log_prior_Z(state.Z[node], omega)

    if not _metropolis_accept(ll_new - state.log_lik + log_prior_diff, rng):
        return state, False

    if node is not None:
        d2_new = state.d2.copy()
        d2_new[node, :] = row
        d2_new[:, node] = row
    return replace(state, Z=candidate, log_lik=ll_new, d2=d2_new), True


def informed_alpha_proposal(state, model, hp, cfg):
    """
    Gaussian proposal for alpha from a quadratic expansion of the log full conditional at alpha.

    The mean is one Newton step from the current alpha; the variance is the inverse
    curvature scaled by step_alpha.

    Returns:
        (mean, variance)
    """
    score, info = model.alpha_score_info(state.alpha, state.d2)
    newton_var = 1.0 / (info + 1.0 / hp.sigma2_alpha)
    mean = state.alpha + newton_var * (score + (hp.mu_alpha - state.alpha) / hp.sigma2_alpha)
    return mean, cfg.step_alpha * newton_var


def _log_prior_alpha(alpha, hp):
    return -0.5 * (alpha - hp.mu_alpha) ** 2 / hp.sigma2_alpha


def accept_alpha(state, candidate_alpha, forward, reverse, model, hp, rng):
    """
    Metropolis-Hastings step for alpha with the asymmetric proposal correction.

    Args:
        forward: (mean, variance) of the proposal built at the current alpha
        reverse: (mean, variance) of the proposal built at the candidate

    Returns:
        (state, accepted)
    """
    ll_new = model.log_likelihood_from_d2(candidate_alpha, state.d2)
    log_q_forward = norm.logpdf(candidate_alpha, forward[0], math.sqrt(forward[1]))
    log_q_reverse = norm.logpdf(state.alpha, reverse[0], math.sqrt(reverse[1]))
    log_ratio = (ll_new - state.log_lik
                 + _log_prior_alpha(candidate_alpha, hp) - _log_prior_alpha(state.alpha, hp)
                 + log_q_reverse - log_q_forward)

    if not _metropolis_accept(float(log_ratio), rng):
        return state, False
    return replace(state, alpha=float(candidate_alpha), log_lik=ll_new), True


def update_alpha(state, model, hp, cfg, rng):
    """Draw an informed candidate for alpha and accept or reject it."""
    forward = informed_alpha_proposal(state, model, hp, cfg)
    candidate = float(rng.normal(forward[0], math.sqrt(forward[1])))
    reverse = informed_alpha_proposal(replace(state, alpha=candidate), model, hp, cfg)
    return accept_alpha(state, candidate, forward, reverse, model, hp, rng)


def gibbs_update_deltas(state, hp, rng):
    """
    Draw delta_1 then delta_2..delta_p in order, each conditional on the values
    already drawn this sweep; omega follows as the cumulative product.
    """
    delta = np.array(state.shrink.delta, dtype=float)
    shape, rate = delta1_conditional_params(state.Z, delta, hp)
    delta[0] = rng.gamma(shape, 1.0 / rate)
    for h in range(2, delta.size + 1):
        shape, rate, lower = deltah_conditional_params(h, state.Z, delta, hp)
        delta[h - 1] = sample_truncated_gamma(shape, rate, lower, rng)
    return ShrinkageState.from_delta(delta)


def gibbs_cycle(state, model, hp, cfg, rng):
    """One full sweep Z -> alpha -> delta -> omega."""
    z_accepted = 0
    if cfg.z_update is ZUpdateMode.WHOLE:
        state, ok = accept_Z(state, propose_Z(state, cfg, rng), model, rng)
        z_accepted, z_proposed = int(ok), 1
    else:
        for i in range(state.n):
            state, ok = accept_Z(state, propose_Z(state, cfg, rng, node=i), model, rng, node=i)
            z_accepted += int(ok)
        z_proposed = state.n

    state, alpha_ok = update_alpha(state, model, hp, cfg, rng)
    shrink = gibbs_update_deltas(state, hp, rng)
    state = replace(state, shrink=shrink, iteration=state.iteration + 1)
    return CycleResult(state, z_accepted, z_proposed, int(alpha_ok))


def run_chain(net, hp, cfg, kind=None, init_state=None):
    """
    Run one chain: initialize, iterate, keep thinned post-burn-in draws.

    Iteration s (1-based) is recorded when s > burn_in and (s - burn_in) % thin == 0.
    The cached log-likelihood is recomputed every cfg.check_every iterations.
    With cfg.adapt_z the Z step is tuned towards cfg.target_z_accept once per
    cfg.adapt_every burn-in iterations and held fixed afterwards.

    Args:
        net: Observed Network
        hp: Hyperparams
        cfg: SamplerConfig (cfg.seed seeds this chain, cfg.chain_index labels it)
        kind: LinkKind or model name; defaults to the network's edge kind
        init_state: Optional ChainState to start from instead of the MDS initialization

    Returns:
        ChainTrace

    Raises:
        ChainDivergenceError: when the state becomes non-finite
    """
    model = LatentNetworkModel(net, kind)
    hp.validate_for(net.n)
    k = cfg.chain_index
    rng = np.random.default_rng(cfg.seed)
    started = time.perf_counter()

    if init_state is None:
        state = initialize_chain(net, hp, model.kind, cfg.alpha_inflation, rng, jitter_sd=cfg.init_jitter_sd)
    else:
        d2 = pairwise_sq_distances(init_state.Z)
        state = replace(init_state, d2=d2, log_lik=model.log_likelihood_from_d2(init_state.alpha, d2))
    if state.p != hp.p:
        raise ValidationError(f"initial state has {state.p} dimensions, prior expects p={hp.p}")

    logger.info(f"Chain {k}: n={net.n}, p={hp.p}, {model.kind.model_name}, "
                f"S={cfg.iterations}, burn-in={cfg.burn_in}, thin={cfg.thin}, seed={cfg.seed}, "
                f"alpha0={state.alpha:.4f}")

    m, n, p = cfg.n_recorded, net.n, hp.p
    iterations = np.empty(m, dtype=np.int64)
    Z_draws = np.empty((m, n, p))
    alpha_draws = np.empty(m)
    delta_draws = np.empty((m, p))
    omega_draws = np.empty((m, p))
    loglik_draws = np.empty(m)

    reference_Z, reference_ll = state.Z.copy(), state.log_lik
    z_acc = z_prop = a_acc = 0
    window_acc = window_prop = 0
    chain_cfg = cfg
    recorded = 0

    for s in tqdm(range(1, cfg.iterations + 1), desc=f"chain {k}", disable=not cfg.progress,
                  position=k, leave=False, mininterval=1.0):
        last_good = state
        try:
            state, za, zp, aa = gibbs_cycle(state, model, hp, chain_cfg, rng)
        except FloatingPointError as e:
            raise ChainDivergenceError(k, s, last_good, f"chain {k} diverged at iteration {s}: {e}") from e
        z_acc += za
        z_prop += zp
        a_acc += aa

        if s % cfg.check_every == 0:
            recomputed = model.log_likelihood(state.Z, state.alpha)
            if abs(recomputed - state.log_lik) > LOGLIK_DRIFT_TOL * max(1.0, abs(recomputed)):
                logger.warning(f"Chain {k}: cached log-likelihood drifted by "
                               f"{recomputed - state.log_lik:.3e} at iteration {s}")
            state = replace(state, log_lik=recomputed)

        if not state.is_finite():
            raise ChainDivergenceError(k, s, last_good)

        if s <= cfg.burn_in:
            if state.log_lik > reference_ll:
                reference_Z, reference_ll = state.Z.copy(), state.log_lik
            if cfg.adapt_z:
                window_acc += za
                window_prop += zp
                if s % cfg.adapt_every == 0:
                    step = tune_step_z(chain_cfg.step_z, window_acc / window_prop, cfg.target_z_accept,
                                       s // cfg.adapt_every)
                    chain_cfg = replace(chain_cfg, step_z=step)
                    window_acc = window_prop = 0
                if s == cfg.burn_in:
                    logger.info(f"Chain {k}: Z step tuned from {cfg.step_z:.3g} to {chain_cfg.step_z:.3g}")
        elif (s - cfg.burn_in) % cfg.thin == 0:
            iterations[recorded] = s
            Z_draws[recorded] = state.Z
            alpha_draws[recorded] = state.alpha
            delta_draws[recorded] = state.shrink.delta
            omega_draws[recorded] = state.shrink.omega
            loglik_draws[recorded] = state.log_lik
            recorded += 1

    trace = ChainTrace(
        chain_index=k,
        seed=cfg.seed,
        kind=model.kind.value,
        iterations=iterations,
        Z=Z_draws,
        alpha=alpha_draws,
        delta=delta_draws,
        omega=omega_draws,
        log_lik=loglik_draws,
        reference_Z=reference_Z,
        reference_log_lik=float(reference_ll),
        z_accepted=z_acc,
        z_proposed=z_prop,
        alpha_accepted=a_acc,
        alpha_proposed=cfg.iterations,
        clip_count=model.clip_count,
        wall_time=time.perf_counter() - started,
        step_z=chain_cfg.step_z,
    )
    if model.clip_count:
        logger.warning(f"Chain {k}: linear predictor clipped {model.clip_count} times")
    logger.info(f"Chain {k}: done in {trace.wall_time:.1f}s, Z acceptance {trace.z_acceptance_rate:.3f}, "
                f"alpha acceptance {trace.alpha_acceptance_rate:.3f}")
    return trace


def _chain_job(args):
    net, hp, cfg, kind = args
    return run_chain(net, hp, cfg, kind)


def chain_configs(cfg, n_chains):
    """Per-chain configs: seed + chain_index, with jitter when several chains start from MDS."""
    jitter = cfg.init_jitter_sd
    if n_chains > 1 and jitter == 0:
        jitter = MULTI_CHAIN_JITTER_SD
    return [replace(cfg, seed=cfg.seed + k, chain_index=k, init_jitter_sd=jitter) for k in range(n_chains)]


def run_chains(net, hp, cfg, kind=None, n_chains=1, threads=1):
    """
    Run independent chains, concurrently when threads > 1.

    Results are ordered by chain index and do not depend on scheduling.
    """
    if int(n_chains) != n_chains or n_chains < 1:
        raise ValidationError(f"n_chains must be a positive integer, got {n_chains!r}")
    jobs = [(net, hp, chain_cfg, kind) for chain_cfg in chain_configs(cfg, n_chains)]
    workers = max(1, min(int(threads), n_chains))

    traces = []
    if workers == 1:
        for job in jobs:
            traces.append(_run_tagged(job))
        return traces

    logger.info(f"Running {n_chains} chains on {workers} worker processes")
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(_chain_job, job) for job in jobs]
        for job, future in zip(jobs, futures):
            traces.append(_collect(future.result, job[2].chain_index))
    return traces


def _run_tagged(job):
    return _collect(lambda: _chain_job(job), job[2].chain_index)


def _collect(call, chain_index):
    try:
        return call()
    except (ChainDivergenceError, ValidationError):
        raise
    except Exception as e:
        raise RuntimeError(f"chain {chain_index} failed: {e}") from e
