"""Input validation helpers shared across the package.

These mirror the spirit of scikit-learn's ``check_array``: normalize array
inputs to well-typed numpy arrays and fail early with actionable messages.
"""

from __future__ import annotations

import numpy as np


def check_points3(x, name="positions", allow_empty=False):
    """Coerce to a float64 (n, 3) array of finite 3D points."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim == 1 and arr.size == 3:
        arr = arr.reshape(1, 3)
    if arr.ndim != 2 or arr.shape[1] != 3:
        raise ValueError(f"{name} must have shape (n, 3), got {arr.shape}")
    if not allow_empty and arr.shape[0] == 0:
        raise ValueError(f"{name} must not be empty")
    if not np.isfinite(arr).all():
        raise ValueError(f"{name} contains non-finite values")
    return arr


def check_vector3(x, name="vector", nonzero=False):
    arr = np.asarray(x, dtype=np.float64).reshape(-1)
    if arr.shape != (3,):
        raise ValueError(f"{name} must have 3 components, got shape {arr.shape}")
    if not np.isfinite(arr).all():
        raise ValueError(f"{name} contains non-finite values")
    if nonzero and float(np.linalg.norm(arr)) == 0.0:
        raise ValueError(f"{name} must be nonzero")
    return arr


def check_triangles(t, n_vertices, name="triangles", allow_empty=False):
    """Coerce to an int64 (m, 3) index array and range-check against n_vertices."""
    arr = np.asarray(t, dtype=np.int64)
    if arr.size == 0:
        arr = arr.reshape(0, 3)
    if arr.ndim != 2 or arr.shape[1] != 3:
        raise ValueError(f"{name} must have shape (m, 3), got {arr.shape}")
    if not allow_empty and arr.shape[0] == 0:
        raise ValueError(f"{name} must not be empty")
    if arr.size:
        if arr.min() < 0 or arr.max() >= n_vertices:
            raise ValueError(
                f"{name} reference vertices outside [0, {n_vertices})"
            )
        fully_degenerate = (arr[:, 0] == arr[:, 1]) & (arr[:, 1] == arr[:, 2])
        if fully_degenerate.any():
            raise ValueError(
                f"{name}[{int(np.flatnonzero(fully_degenerate)[0])}] uses one "
                "vertex for all three corners"
            )
    return arr


def check_finite(x, name="array"):
    arr = np.asarray(x, dtype=np.float64)
    if not np.isfinite(arr).all():
        raise ValueError(f"{name} contains non-finite values")
    return arr


def check_unit_quaternion(q, name="rotation", tol=1e-8):
    """Validate a (w, x, y, z) rotation; returns it normalized to float64."""
    arr = np.asarray(q, dtype=np.float64).reshape(-1)
    if arr.shape != (4,):
        raise ValueError(f"{name} must have 4 components (w, x, y, z)")
    n = float(np.linalg.norm(arr))
    if not np.isfinite(n) or abs(n - 1.0) > tol:
        raise ValueError(f"{name} must be unit-norm (|q| = {n!r})")
    return arr


def check_matrix4(m, name="transform", require_invertible=False):
    arr = np.asarray(m, dtype=np.float64)
    if arr.shape != (4, 4):
        raise ValueError(f"{name} must be a 4x4 matrix, got {arr.shape}")
    if not np.isfinite(arr).all():
        raise ValueError(f"{name} contains non-finite values")
    if require_invertible and abs(float(np.linalg.det(arr))) <= 1e-12:
        raise ValueError(f"{name} is singular")
    return arr


def check_index_array(ids, n=None, name="ids", unique=True):
    arr = np.asarray(ids, dtype=np.int64).reshape(-1)
    if arr.size == 0:
        raise ValueError(f"{name} must not be empty")
    if arr.min() < 0 or (n is not None and arr.max() >= n):
        raise ValueError(f"{name} outside [0, {n})")
    if unique and np.unique(arr).size != arr.size:
        raise ValueError(f"{name} contains duplicates")
    return arr
