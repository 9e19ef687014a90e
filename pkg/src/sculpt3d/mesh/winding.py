"""Generalized winding numbers of points with respect to a triangle mesh."""

from __future__ import annotations

import numpy as np

from ..validation import check_points3


def winding_numbers(mesh, points, chunk_bytes=64 << 20):
    """Signed solid-angle winding number of each query point.

    For a closed outward-oriented mesh the result is ~1 inside, ~0 outside,
    and halfway values on the surface. Uses the per-triangle solid-angle
    formula (van Oosterom & Strackee) summed over all triangles, evaluated in
    point×triangle chunks to bound memory.

    A point exactly in a triangle's plane gets that triangle's principal
    value (zero) rather than the inside-limit branch of atan2, so queries
    landing exactly on a face report ~0.5 instead of a side-dependent 0 or 1;
    callers can treat |w - 0.5| below a small band as "on the surface".

    Parameters
    ----------
    mesh : TriangleMesh
    points : (n, 3) array_like
    chunk_bytes : int
        Approximate working-memory budget.

    Returns
    -------
    (n,) float array
    """
    points = check_points3(points, name="points")
    tri = mesh.positions[mesh.triangles]  # (m, 3, 3)
    n, m = len(points), len(tri)
    if n == 0:
        return np.zeros(0)
    per_pair = 9 * 8 * 4  # three direction vectors plus scratch, float64
    rows = max(1, int(chunk_bytes // max(1, m * per_pair)))
    out = np.empty(n)
    for s in range(0, n, rows):
        p = points[s : s + rows]
        a = tri[None, :, 0, :] - p[:, None, :]
        b = tri[None, :, 1, :] - p[:, None, :]
        c = tri[None, :, 2, :] - p[:, None, :]
        la = np.linalg.norm(a, axis=2)
        lb = np.linalg.norm(b, axis=2)
        lc = np.linalg.norm(c, axis=2)
        det = np.einsum("ptj,ptj->pt", a, np.cross(b, c))
        denom = (
            la * lb * lc
            + np.einsum("ptj,ptj->pt", a, b) * lc
            + np.einsum("ptj,ptj->pt", b, c) * la
            + np.einsum("ptj,ptj->pt", c, a) * lb
        )
        omega = 2.0 * np.arctan2(det, denom)
        # in-plane points (det exactly 0) take the principal value, not the
        # atan2 branch at (0, denom<0), so on-face queries read ~0.5
        omega[det == 0.0] = 0.0
        out[s : s + rows] = omega.sum(axis=1) / (4.0 * np.pi)
    return out
