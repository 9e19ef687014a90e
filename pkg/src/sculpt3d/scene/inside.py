"""Point-in-solid queries backing carving and composition checks."""

from __future__ import annotations

import numpy as np

from ..mesh.winding import winding_numbers


def winding_number(mesh, points):
    """Generalized winding number of one point or a batch of points.

    For a closed, outward-oriented mesh this is ~1 inside and ~0 outside;
    points on the surface land near 0.5, and inverted orientations flip the
    sign. Accepts a single (3,) point (returns a float) or an (n, 3) batch
    (returns an (n,) array).
    """
    pts = np.asarray(points, dtype=np.float64)
    single = pts.ndim == 1
    out = winding_numbers(mesh, pts.reshape(-1, 3))
    return float(out[0]) if single else out


def points_inside(mesh, points, threshold=0.5):
    """Boolean containment of each point: winding number above ``threshold``."""
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    return winding_numbers(mesh, pts) > threshold
