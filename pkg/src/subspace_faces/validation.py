"""Input validation shared by the functional fits and the estimators."""

from __future__ import annotations

import numpy as np
from sklearn.utils.validation import check_array

from .dataset import Dataset, vectorize


def check_vectors(X, min_samples: int = 1) -> np.ndarray:
    """Return ``X`` as a finite float (n_samples, n_features) array.

    A :class:`Dataset` is vectorized column by column first.
    """
    if isinstance(X, Dataset):
        X = vectorize(X)[0]
    return check_array(X, dtype=np.float64, ensure_min_samples=min_samples)


def check_images(X, min_samples: int = 1) -> np.ndarray:
    """Return ``X`` as a finite float (n_samples, rows, cols) array."""
    if isinstance(X, Dataset):
        X = X.images
    X = check_array(X, dtype=np.float64, allow_nd=True, ensure_min_samples=min_samples)
    if X.ndim != 3:
        raise ValueError(f"expected an (n_samples, rows, cols) array, got shape {X.shape}")
    return X


def check_n_components(k, upper: int, what: str) -> int:
    if not isinstance(k, (int, np.integer)) or isinstance(k, bool):
        raise TypeError(f"n_components must be an integer, got {k!r}")
    if not 1 <= k <= upper:
        raise ValueError(f"n_components={k} out of range: need 1 <= k <= {upper} ({what})")
    return int(k)
