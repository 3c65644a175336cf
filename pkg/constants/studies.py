"""
Simulation study presets.
Each study expands to a list of StudySetting, one per simulated-network setting.
"""
from dataclasses import dataclass

from utils.validators import ValidationError

STUDY_TITLES = {
    1: "network size",
    2: "truncation level",
    3: "density in binary networks",
    4: "overdispersion in count networks",
}

# Study 3 alpha grid, densities from roughly 2% to 99%
STUDY3_ALPHAS = (0.0, 1.0, 2.0, 3.0, 5.0, 8.0, 12.0, 18.0, 24.0, 30.0)

# Study 4 overdispersion levels: (alpha, delta)
STUDY4_LEVELS = {
    'low': (0.5, (1.5, 1.5)),
    'moderate': (1.5, (0.5, 1.5)),
    'high': (5.0, (0.1, 1.5)),
}

STUDY4_FIT_DIMS = 5

# Studies fixed to one model; the others take the model as an argument
FIXED_MODEL = {3: 'logit', 4: 'poisson'}


@dataclass(frozen=True)
class StudySetting:
    """One simulation setting: generator parameters, fitted truncation levels and chain lengths."""
    study: int
    variant: str
    n: int
    delta: tuple
    alpha: float
    model: str
    fit_dims: tuple
    burn_in: int
    thin: int

    @property
    def p_star(self):
        return len(self.delta)

    @property
    def label(self):
        return f"study{self.study}_{self.model}_{self.variant}"


def _study1(model, fit_dims):
    settings = []
    for n in (20, 50, 100, 200):
        if model == 'poisson':
            burn_in = 350_000
        else:
            burn_in = 50_000 if n <= 50 else 200_000
        settings.append(StudySetting(1, f"n{n}", n, (0.5, 1.1), 3.0, model, fit_dims or (5,), burn_in, 2_000))
    return settings


def _study2(model, fit_dims):
    burn_in = 50_000 if model == 'logit' else 350_000
    return [StudySetting(2, 'p4', 100, (0.5, 1.1, 1.05, 1.15), 6.0, model, fit_dims or (3, 4, 8), burn_in, 2_000)]


def _study3(model, fit_dims):
    return [
        StudySetting(3, f"alpha{alpha:g}", 50, (0.5, 1.1, 1.05), alpha, model, fit_dims or (5,), 50_000, 3_500)
        for alpha in STUDY3_ALPHAS
    ]


def _study4(model, fit_dims):
    return [
        StudySetting(4, level, 100, delta, alpha, model, fit_dims or (STUDY4_FIT_DIMS,), 350_000, 2_000)
        for level, (alpha, delta) in STUDY4_LEVELS.items()
    ]


STUDY_BUILDERS = {1: _study1, 2: _study2, 3: _study3, 4: _study4}


def study_preset(study_id, variant=None, model=None, fit_dims=None):
    """
    Settings of one simulation study.

    Args:
        study_id: 1..4
        variant: Optional filter on the setting variant ('n50', 'alpha12', 'high', ...)
        model: 'logit' or 'poisson' for studies 1 and 2 (default 'logit');
            studies 3 and 4 are fixed to logit and poisson
        fit_dims: Optional tuple of truncation levels replacing the preset ones

    Returns:
        list of StudySetting
    """
    if study_id not in STUDY_BUILDERS:
        raise ValidationError(f"unknown study {study_id!r}, expected one of {sorted(STUDY_BUILDERS)}")

    fixed = FIXED_MODEL.get(study_id)
    if fixed is not None and model not in (None, fixed):
        raise ValidationError(f"study {study_id} simulates {fixed} networks only, got model {model!r}")
    model = fixed or model or 'logit'
    if model not in ('logit', 'poisson'):
        raise ValidationError(f"unknown model {model!r}, expected 'logit' or 'poisson'")

    fit_dims = tuple(int(p) for p in fit_dims) if fit_dims else None
    settings = STUDY_BUILDERS[study_id](model, fit_dims)
    if variant is None:
        return settings

    selected = [s for s in settings if s.variant == variant]
    if not selected:
        raise ValidationError(
            f"study {study_id} has no variant {variant!r}; choose from {[s.variant for s in settings]}"
        )
    return selected
