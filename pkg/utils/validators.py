"""
Validation helpers and the exceptions raised on bad input.
"""
import math

import numpy as np


class ValidationError(ValueError):
    """A precondition on user input or model state was violated."""


class NetworkFormatError(ValidationError):
    """A network file or matrix cannot be turned into a valid Network."""


def validate_positive(name, value):
    if not (isinstance(value, (int, float, np.integer, np.floating)) and math.isfinite(value) and value > 0):
        raise ValidationError(f"{name} must be a positive finite number, got {value!r}")
    return float(value)


def validate_truncation_level(p, n):
    """
    Truncation level must satisfy 1 <= p < n/2.
    """
    if int(p) != p or p < 1:
        raise ValidationError(f"truncation level p must be a positive integer, got {p!r}")
    if n is not None and not p < n / 2:
        raise ValidationError(
            f"truncation level p={p} must be below half the number of nodes (n={n})"
        )
    return int(p)


def validate_step_size(name, value, low=0.01, high=10.0):
    if not (math.isfinite(value) and low <= value <= high):
        raise ValidationError(f"{name} must lie in [{low}, {high}], got {value!r}")
    return float(value)


def validate_index_base(index_base):
    if index_base not in (0, 1):
        raise ValidationError(f"index base must be 0 or 1, got {index_base!r}")
    return index_base


def validate_same_shape(name_a, a, name_b, b):
    if np.shape(a) != np.shape(b):
        raise ValidationError(
            f"{name_a} has shape {np.shape(a)} but {name_b} has shape {np.shape(b)}"
        )
