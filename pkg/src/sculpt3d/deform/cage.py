"""Cage deformation via mean value coordinates for closed triangle meshes.

Coordinates follow the spherical-triangle construction of Ju, Schaefer and
Warren: each cage triangle is projected onto the unit sphere around the query
point and contributes weights to its three corners; points landing exactly on
a cage vertex or face degrade gracefully to indicator/barycentric rows. The
normalized weights are translation/rotation/scale reproducing, so moving the
cage affinely moves the embedded model the same way.
"""

from __future__ import annotations

import numpy as np

from ..mesh.trianglemesh import TriangleMesh
from ..mesh.winding import winding_numbers
from ..validation import check_points3

_ON_VERTEX = 1e-10  # relative to cage bbox diagonal
_ON_FACE = 1e-8  # plane-distance snap radius, relative to cage bbox diagonal
_SLIVER = 1e-9  # skip triangles whose spherical angle sines fall below this


class Cage:
    """Closed control mesh that must enclose the model it will drive."""

    def __init__(self, cage_mesh):
        if not cage_mesh.is_closed():
            raise ValueError("cage mesh must be closed")
        self.cage_mesh = cage_mesh
        self.rest_positions = cage_mesh.positions

    @property
    def n_vertices(self):
        return self.cage_mesh.n_vertices


class CageCoordinates:
    """Dense generalized barycentric weights, one row per model vertex.

    Rows sum to 1 and reproduce the bound vertex from the rest cage.
    """

    def __init__(self, weights):
        weights = np.asarray(weights, dtype=np.float64)
        if weights.ndim != 2:
            raise ValueError("weights must be 2-d")
        self.weights = weights

    @property
    def n_points(self):
        return self.weights.shape[0]

    @property
    def n_cage_vertices(self):
        return self.weights.shape[1]


def compute_cage_coordinates(model, cage):
    """Bind every model vertex to the cage with mean value coordinates.

    Raises
    ------
    ValueError
        If any model vertex lies outside the cage (winding-number test).
    """
    points = model.positions if isinstance(model, TriangleMesh) else check_points3(model)
    scale = cage.cage_mesh.bbox_diagonal()
    wn = winding_numbers(cage.cage_mesh, points)
    from ..mesh.trianglemesh import signed_volume

    orient = 1.0 if signed_volume(cage.cage_mesh) >= 0 else -1.0
    flagged = np.nonzero(orient * wn < 0.499)[0]
    if flagged.size:
        # a point on the cage surface reads a fractional winding number
        # (e.g. 1/8 at a box corner) yet evaluates fine; only reject points
        # that are both flagged and genuinely off the surface
        boundary = _near_boundary(
            points[flagged], cage.rest_positions, cage.cage_mesh.triangles, scale
        )
        outside = flagged[~boundary]
        if outside.size:
            raise ValueError(
                f"{outside.size} model vertices outside the cage "
                f"(first: vertex {outside[0]}, winding {orient * wn[outside[0]]:.3f})"
            )
    weights = np.empty((len(points), cage.n_vertices))
    # chunk so the (points × triangles) working set stays modest
    tri_count = cage.cage_mesh.n_triangles
    rows = max(1, int((32 << 20) // max(1, tri_count * 200)))
    for s in range(0, len(points), rows):
        weights[s : s + rows] = _mvc_rows(
            points[s : s + rows], cage.rest_positions, cage.cage_mesh.triangles, scale
        )
    return CageCoordinates(weights)


def _face_proximity(x, cage_pts, cage_tris):
    """Per (point, triangle): unsigned plane distance, an inside-the-face
    mask for the point's projection, and the signed-area barycentrics.

    The barycentric sum is the (positive) doubled triangle area regardless
    of where the point sits, so ``inside`` is simply all three being
    non-negative up to roundoff.
    """
    a = cage_pts[cage_tris[:, 0]]
    b = cage_pts[cage_tris[:, 1]]
    c = cage_pts[cage_tris[:, 2]]
    n = np.cross(b - a, c - a)
    norms = np.linalg.norm(n, axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        nh = n / norms[:, None]
    pa = a[None, :, :] - x[:, None, :]
    pb = b[None, :, :] - x[:, None, :]
    pc = c[None, :, :] - x[:, None, :]
    offsets = np.abs(np.einsum("qtj,tj->qt", pa, nh))
    beta1 = np.einsum("qtj,tj->qt", np.cross(pb, pc), nh)
    beta2 = np.einsum("qtj,tj->qt", np.cross(pc, pa), nh)
    beta3 = np.einsum("qtj,tj->qt", np.cross(pa, pb), nh)
    babs = np.abs(beta1) + np.abs(beta2) + np.abs(beta3)
    inside = np.minimum(np.minimum(beta1, beta2), beta3) >= -1e-9 * babs
    return offsets, inside, (beta1, beta2, beta3)


def _near_boundary(x, cage_pts, cage_tris, scale):
    """True per point when it sits on a cage vertex, edge, or face
    (within the same tolerances the weight evaluation snaps at)."""
    d = np.linalg.norm(cage_pts[None, :, :] - x[:, None, :], axis=2)
    on_vertex = (d < _ON_VERTEX * scale).any(axis=1)
    offsets, inside, _ = _face_proximity(x, cage_pts, cage_tris)
    return on_vertex | ((offsets < _ON_FACE * scale) & inside).any(axis=1)


def _mvc_rows(x, cage_pts, cage_tris, scale):
    """Mean value coordinate rows for points ``x`` (vectorized)."""
    p = x.shape[0]
    j = cage_pts.shape[0]
    w = np.zeros((p, j))

    diff = cage_pts[None, :, :] - x[:, None, :]  # (p, j, 3)
    d = np.linalg.norm(diff, axis=2)

    hit = d < _ON_VERTEX * scale
    on_vertex = hit.any(axis=1)
    if on_vertex.any():
        rows = np.nonzero(on_vertex)[0]
        cols = hit[rows].argmax(axis=1)
        w[rows, cols] = 1.0

    live = ~on_vertex
    if not live.any():
        return w
    xi = np.nonzero(live)[0]
    u = diff[xi] / d[xi][:, :, None]  # (q, j, 3) unit directions

    u1 = u[:, cage_tris[:, 0], :]
    u2 = u[:, cage_tris[:, 1], :]
    u3 = u[:, cage_tris[:, 2], :]
    d1 = d[xi][:, cage_tris[:, 0]]
    d2 = d[xi][:, cage_tris[:, 1]]
    d3 = d[xi][:, cage_tris[:, 2]]

    # arc lengths opposite each corner, as spherical angles; the atan2 form
    # stays accurate for near-antipodal directions (point close to an edge)
    t1 = 2.0 * np.arctan2(
        np.linalg.norm(u2 - u3, axis=2), np.linalg.norm(u2 + u3, axis=2)
    )
    t2 = 2.0 * np.arctan2(
        np.linalg.norm(u3 - u1, axis=2), np.linalg.norm(u3 + u1, axis=2)
    )
    t3 = 2.0 * np.arctan2(
        np.linalg.norm(u1 - u2, axis=2), np.linalg.norm(u1 + u2, axis=2)
    )

    det = np.einsum("qtj,qtj->qt", u1, np.cross(u2, u3))
    dot12 = np.einsum("qtj,qtj->qt", u1, u2)
    dot13 = np.einsum("qtj,qtj->qt", u1, u3)
    dot23 = np.einsum("qtj,qtj->qt", u2, u3)

    # snap to flat barycentric only when geometrically on the face: within a
    # hair of the plane AND projecting inside. A half-perimeter test alone
    # captures points ~sqrt(eps) away and would project them, losing that
    # offset; the general formulas below stay accurate right up to this snap
    # radius because sines of the spherical angles come from the polar-sine
    # identity instead of a cancellation-prone sqrt(1 - c^2).
    offsets, proj_inside, betas = _face_proximity(x[xi], cage_pts, cage_tris)
    on_face = (offsets < _ON_FACE * scale) & proj_inside

    with np.errstate(invalid="ignore", divide="ignore"):
        s1 = det / (np.sin(t2) * np.sin(t3))
        s2 = det / (np.sin(t3) * np.sin(t1))
        s3 = det / (np.sin(t1) * np.sin(t2))
        c1 = (dot23 - dot12 * dot13) / (np.sin(t2) * np.sin(t3))
        c2 = (dot13 - dot12 * dot23) / (np.sin(t3) * np.sin(t1))
        c3 = (dot12 - dot13 * dot23) / (np.sin(t1) * np.sin(t2))
        # slivers and coplanar-but-outside configurations contribute nothing
        keep = (
            (np.abs(s1) > _SLIVER)
            & (np.abs(s2) > _SLIVER)
            & (np.abs(s3) > _SLIVER)
            & ~on_face
        )
        w1 = np.where(keep, (t1 - c2 * t3 - c3 * t2) / (d1 * np.sin(t2) * s3), 0.0)
        w2 = np.where(keep, (t2 - c3 * t1 - c1 * t3) / (d2 * np.sin(t3) * s1), 0.0)
        w3 = np.where(keep, (t3 - c1 * t2 - c2 * t1) / (d3 * np.sin(t1) * s2), 0.0)

    acc = np.zeros((len(xi), cage_pts.shape[0]))
    for k, wk in ((0, w1), (1, w2), (2, w3)):
        np.add.at(acc.T, cage_tris[:, k], wk.T)

    face_pts = np.nonzero(on_face.any(axis=1))[0]
    if face_pts.size:
        tsel = on_face[face_pts].argmax(axis=1)
        acc[face_pts] = 0.0
        acc[face_pts, cage_tris[tsel, 0]] = betas[0][face_pts, tsel]
        acc[face_pts, cage_tris[tsel, 1]] = betas[1][face_pts, tsel]
        acc[face_pts, cage_tris[tsel, 2]] = betas[2][face_pts, tsel]

    acc /= acc.sum(axis=1, keepdims=True)
    w[xi] = acc
    return w


def deform_by_cage(model, coords, new_cage_positions):
    """Re-evaluate the cage-weighted map at moved cage vertices."""
    new_cage_positions = check_points3(new_cage_positions, name="new_cage_positions")
    if len(new_cage_positions) != coords.n_cage_vertices:
        raise ValueError(
            f"cage has {coords.n_cage_vertices} vertices, "
            f"got {len(new_cage_positions)} positions"
        )
    if coords.n_points != model.n_vertices:
        raise ValueError("coordinates were bound to a different vertex count")
    return model.with_positions(coords.weights @ new_cage_positions)
