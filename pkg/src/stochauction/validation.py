"""Input validation helpers in the style of ``sklearn.utils.validation``."""

from __future__ import annotations

import numpy as np
from sklearn.utils.validation import check_array

from .dist import GenerationDistribution, parse_distribution

__all__ = ["check_bids", "check_generation", "check_distribution"]


def check_bids(X) -> np.ndarray:
    """Return bids as a float array of shape ``(n_lse, 2)`` with columns ``(c, pi)``."""
    X = check_array(X, dtype=np.float64, ensure_2d=True, ensure_all_finite=True)
    if X.shape[1] != 2:
        raise ValueError(f"bids need two columns (c, pi), got {X.shape[1]}")
    return X


def check_generation(W) -> np.ndarray:
    """Return generation draws as a 1-D float array of nonnegative kW values."""
    W = np.asarray(W, dtype=np.float64)
    if W.ndim == 0:
        W = W.reshape(1)
    elif W.ndim == 2 and W.shape[1] == 1:
        W = W[:, 0]
    if W.ndim != 1:
        raise ValueError(f"generation must be 1-D, got shape {W.shape}")
    if not np.all(np.isfinite(W)):
        raise ValueError("generation contains NaN or infinity")
    if np.any(W < 0):
        raise ValueError("generation must be nonnegative")
    return W


def check_distribution(dist) -> GenerationDistribution:
    if isinstance(dist, GenerationDistribution):
        return dist
    if isinstance(dist, str):
        return parse_distribution(dist)
    raise TypeError(f"expected a GenerationDistribution or spec string, got {type(dist).__name__}")
