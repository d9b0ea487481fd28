"""Input-validation helpers shared by the estimators."""
from __future__ import annotations

import numpy as np

from .errors import ValidationError


def check_array(x, ndim: int = 2, name: str = "X") -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if arr.ndim != ndim:
        raise ValidationError(f"{name} must be {ndim}-dimensional, got {arr.ndim}")
    if arr.size == 0:
        raise ValidationError(f"{name} must not be empty")
    if not np.isfinite(arr).all():
        raise ValidationError(f"{name} contains non-finite values")
    return arr


def check_bit_matrix(y, name: str = "y") -> np.ndarray:
    arr = np.asarray(y)
    if arr.ndim != 2:
        raise ValidationError(f"{name} must be 2-dimensional")
    if not np.isin(arr, (0, 1)).all():
        raise ValidationError(f"{name} must contain only 0/1 labels")
    return arr.astype(np.uint8)


def check_consistent_length(*arrays):
    lengths = {len(a) for a in arrays}
    if len(lengths) > 1:
        raise ValidationError(f"inconsistent lengths: {sorted(lengths)}")


def check_is_fitted(estimator, attribute: str):
    if not hasattr(estimator, attribute):
        raise ValidationError(
            f"{type(estimator).__name__} is not fitted; call fit() first"
        )


def check_random_state(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)
