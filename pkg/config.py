"""
Configuration for the latent shrinkage position model toolkit
Defaults, environment settings and experiment config-file merging.
"""
import copy
import json
import logging
import os

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from pathlib import Path

from dotenv import load_dotenv

logger = logging.getLogger('config')

# Load .env file
load_dotenv()

VERSION = '0.1.0'

# LSPM_LOG sets log verbosity, LSPM_THREADS bounds the worker pool
LOG_LEVEL = os.getenv('LSPM_LOG', 'INFO').upper()
THREADS = int(os.getenv('LSPM_THREADS', '1') or 1)

# Prior hyperparameters
DEFAULT_PRIOR = {
    'a1': 1.1,
    'b1': 1.0,
    'a2': 2.0,
    'b2': 1.0,
    'c2': 1.0,
    'mu_alpha': 0.0,
    'sigma2_alpha': 9.0,
    'p': 5,
}

# Z random-walk step factor per update mode
DEFAULT_STEP_Z = {
    'whole': 5e-4,
    'pernode': 5e-3,
}

DEFAULT_SAMPLER = {
    'model': 'logit',
    'iterations': 500_000,
    'burn_in': {'logit': 50_000, 'poisson': 200_000},
    'thin': 2_000,
    'step_z': None,  # None -> DEFAULT_STEP_Z[z_update]
    'step_alpha': 1.0,
    'z_update': 'whole',
    'seed': 0,
    'chains': 1,
    'alpha_inflation': 1.5,
    'init_jitter_sd': 0.0,
    'check_every': 1_000,
    # burn-in tuning of step_z towards target_z_accept, one update per adapt_every iterations
    'adapt_z': True,
    'target_z_accept': 0.3,
    'adapt_every': 50,
    'progress': True,
    'threads': THREADS,
}

DEFAULT_POSTPROCESS = {
    'jump_factor': 2.0,
    'width_factor': 2.0,
    'max_lag': 50,
}

DEFAULT_PPC = {
    'n_replicates': 30,
    'max_count': 10,
    'mode': 'pooled',  # 'pooled' or 'per_chain'
    'seed': None,  # None -> sampler seed
}

# Network input; edges None -> binary for logit, count for poisson
DEFAULT_INPUT = {
    'path': None,
    'edges': None,
    'directed': False,
    'format': 'auto',
    'index_base': 0,
    'n_nodes': None,
}

DEFAULT_SIMULATE = {
    'study': None,
    'variant': None,
    'model': None,
    'n': None,
    'alpha': None,
    'delta': None,
    'directed': False,
    'n_networks': 30,
    'seed': 0,
}

# Study runner scales. Full scale keeps the per-study burn-in/thinning from the presets.
DESK_SCALE = {
    'iterations': 50_000,
    'burn_in': 10_000,
    'thin': 50,
    'n_replicates': 10,
    'n_networks': 5,
    'chains': 2,
}

FULL_SCALE = {
    'iterations': 500_000,
    'burn_in': None,
    'thin': None,
    'n_replicates': 30,
    'n_networks': 30,
    'chains': 2,
}

DEFAULT_STUDY = {
    'study': None,
    'scale': 'desk',
    'variant': None,
    'model': None,
    'fit_dims': None,
}

SECTIONS = {
    'prior': DEFAULT_PRIOR,
    'sampler': DEFAULT_SAMPLER,
    'postprocess': DEFAULT_POSTPROCESS,
    'ppc': DEFAULT_PPC,
    'input': DEFAULT_INPUT,
    'simulate': DEFAULT_SIMULATE,
    'study': DEFAULT_STUDY,
}


def load_config_file(path):
    """
    Load an experiment config from TOML or JSON.

    A run manifest is accepted too: its 'config' block is returned,
    which makes every manifest a replayable config file.

    Args:
        path: Path to a .toml or .json file

    Returns:
        dict of config sections
    """
    path = Path(path)
    if path.suffix.lower() == '.toml':
        with open(path, 'rb') as f:
            data = tomllib.load(f)
    else:
        with open(path, 'r') as f:
            data = json.load(f)

    if 'config' in data and isinstance(data['config'], dict):
        logger.info(f"Config: using 'config' block of manifest {path}")
        data = data['config']

    logger.debug(f"Config: loaded sections {list(data.keys())} from {path}")
    return data


def resolve_settings(file_cfg=None, overrides=None):
    """
    Merge defaults <- config file sections <- explicit overrides (flags win).

    Args:
        file_cfg: dict from load_config_file (may be None)
        overrides: {'section': {'key': value}}; None values are ignored

    Returns:
        dict with one entry per section in SECTIONS plus any extra file sections
    """
    settings = {name: copy.deepcopy(defaults) for name, defaults in SECTIONS.items()}

    for source in (file_cfg or {}, overrides or {}):
        for section, values in source.items():
            if not isinstance(values, dict):
                settings[section] = values
                continue
            target = settings.setdefault(section, {})
            for key, value in values.items():
                if value is not None:
                    target[key] = value

    return settings


def sampler_burn_in(sampler_settings, model):
    """Burn-in for a model, accepting either a per-model dict or a single number."""
    burn_in = sampler_settings['burn_in']
    if isinstance(burn_in, dict):
        return int(burn_in[model])
    return int(burn_in)


def sampler_step_z(sampler_settings):
    """Z step factor, falling back to the per-mode default."""
    step_z = sampler_settings.get('step_z')
    if step_z is None:
        return DEFAULT_STEP_Z[sampler_settings['z_update']]
    return float(step_z)
