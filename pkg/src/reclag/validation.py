"""Input validation helpers shared across the package."""

import numpy as np


def check_interaction_matrix(xi, name="xi"):
    """Validate and return a finite 2-d float64 interaction matrix."""
    xi = np.asarray(xi, dtype=np.float64)
    if xi.ndim != 2 or xi.shape[0] < 1 or xi.shape[1] < 1:
        raise ValueError(
            f"{name} must be a 2-d matrix with at least one row and one "
            f"column, got shape {xi.shape}"
        )
    if not np.all(np.isfinite(xi)):
        raise ValueError(f"{name} contains non-finite entries")
    return xi


def check_vector(v, length=None, name="v"):
    """Validate and return a finite 1-d float64 vector."""
    v = np.asarray(v, dtype=np.float64)
    if v.ndim != 1:
        raise ValueError(f"{name} must be 1-d, got shape {v.shape}")
    if length is not None and v.shape[0] != length:
        raise ValueError(
            f"{name} has length {v.shape[0]}, expected {length}"
        )
    if not np.all(np.isfinite(v)):
        raise ValueError(f"{name} contains non-finite entries")
    return v


def check_state(v, dim=None, name="v"):
    """Validate a feature/memory state which may be a vector or a batch.

    Returns a float64 array of shape (d,) or (n, d); the last axis must
    match ``dim`` when given.
    """
    v = np.asarray(v, dtype=np.float64)
    if v.ndim not in (1, 2):
        raise ValueError(f"{name} must be 1-d or 2-d, got shape {v.shape}")
    if dim is not None and v.shape[-1] != dim:
        raise ValueError(
            f"{name} has dimension {v.shape[-1]}, expected {dim}"
        )
    if not np.all(np.isfinite(v)):
        raise ValueError(f"{name} contains non-finite entries")
    return v


def check_positive(x, name):
    x = float(x)
    if not np.isfinite(x) or x <= 0:
        raise ValueError(f"{name} must be a positive finite real, got {x}")
    return x
