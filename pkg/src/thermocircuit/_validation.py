"""Input checks shared by the estimator and the command line."""

from __future__ import annotations

import math

import numpy as np
from sklearn.utils.validation import check_array

from .simulate import METHODS


def check_positive(name: str, value, allow_none: bool = False):
    if value is None and allow_none:
        return None
    try:
        value = float(value)
    except (TypeError, ValueError):
        raise ValueError(f"{name} must be a number, got {value!r}") from None
    if not (value > 0 and math.isfinite(value)):
        raise ValueError(f"{name} must be > 0, got {value}")
    return value


def check_method(method: str) -> str:
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; choose from {', '.join(METHODS)}")
    return method


def check_input_matrix(X, n_inputs: int) -> np.ndarray:
    """2-D finite float array with one column per model input.

    A model without inputs accepts ``X`` of shape (n_steps, 0).
    """
    X = check_array(X, dtype=np.float64, ensure_min_features=0, ensure_all_finite=True)
    if X.shape[1] != n_inputs:
        raise ValueError(f"X has {X.shape[1]} columns, the model has {n_inputs} inputs")
    return X


def check_initial_state(x0, n_states: int):
    if x0 is None:
        return None
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    if x0.shape != (n_states,):
        raise ValueError(f"initial_state has {x0.size} values, the model has {n_states} states")
    if not np.all(np.isfinite(x0)):
        raise ValueError("initial_state must be finite")
    return x0
