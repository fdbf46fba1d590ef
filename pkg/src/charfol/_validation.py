"""Input validation helpers shared by the public functions and estimators."""

import numpy as np


def as_phase(p, name="p"):
    """Return ``p`` as a float array whose last axis has even length 2n."""
    arr = np.asarray(p, dtype=float)
    if arr.ndim == 0:
        raise ValueError(f"{name} must be a vector of length 2n, got a scalar")
    if arr.shape[-1] == 0 or arr.shape[-1] % 2:
        raise ValueError(f"{name} must have even length 2n, got {arr.shape[-1]}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} has non-finite entries")
    return arr


def as_point_cloud(X, name="X", dim=None):
    """2-d ``(m, 2n)`` view of a point or a cloud of points."""
    arr = as_phase(X, name)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 1-d or 2-d, got shape {arr.shape}")
    if dim is not None and arr.shape[1] != dim:
        raise ValueError(f"{name} has {arr.shape[1]} coordinates, expected {dim}")
    return arr


def same_dim(u, v):
    if u.shape[-1] != v.shape[-1]:
        raise ValueError(f"dimension mismatch: {u.shape[-1]} vs {v.shape[-1]}")


def check_positive(value, name):
    if not value > 0:
        raise ValueError(f"{name} must be positive, got {value}")
    return float(value)
