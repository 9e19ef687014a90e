"""Harmonic skinning weights and linear blend skinning.

Vertices within an attach radius of a bone segment are pinned to that bone
(nearest bone wins, ties to the lower bone id); every other vertex gets its
per-bone weight from a discrete Laplace solve with those pins as 0/1 boundary
values. Clamping plus per-vertex normalization yields a partition of unity.
"""

from __future__ import annotations

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph
from scipy.sparse.linalg import splu

from ..mesh.laplacian import build_cotan_laplacian

DEFAULT_ATTACH_FRACTION = 0.02  # of the model bbox diagonal


class SkinningWeights:
    """Dense (n_vertices, n_bones) blend weights; rows sum to 1."""

    def __init__(self, weights, attach_bone=None):
        weights = np.asarray(weights, dtype=np.float64)
        if weights.ndim != 2:
            raise ValueError("weights must be 2-d")
        if weights.min() < 0 or weights.max() > 1:
            raise ValueError("weights must lie in [0, 1]")
        sums = weights.sum(axis=1)
        if np.max(np.abs(sums - 1.0)) > 1e-8:
            raise ValueError("weight rows must sum to 1")
        self.weights = weights
        # attach_bone[v] = pinned bone id or -1 (diagnostic, optional)
        self.attach_bone = attach_bone

    @property
    def n_bones(self):
        return self.weights.shape[1]


def _segment_distances(points, segments):
    """(n, b) distance from each point to each bone segment."""
    a = segments[:, 0, :]  # (b, 3)
    ab = segments[:, 1, :] - a
    pa = points[:, None, :] - a[None, :, :]  # (n, b, 3)
    denom = np.einsum("bj,bj->b", ab, ab)
    t = np.einsum("nbj,bj->nb", pa, ab) / np.where(denom > 0, denom, 1.0)
    t = np.clip(t, 0.0, 1.0)
    closest = a[None, :, :] + t[..., None] * ab[None, :, :]
    return np.linalg.norm(points[:, None, :] - closest, axis=2)


def compute_skinning_weights(model, skeleton, attach_radius=None):
    """Bind a model to a skeleton's bones.

    Parameters
    ----------
    model : TriangleMesh
    skeleton : Skeleton
        Its rest (bind) configuration defines the bone segments.
    attach_radius : float, optional
        Vertices closer than this to a segment are pinned; defaults to 2% of
        the model's bounding-box diagonal.

    Raises
    ------
    ValueError
        If a bone pins no vertex (names the bone), or some vertex cannot
        reach a pinned vertex through positive-weight edges.
    """
    if attach_radius is None:
        attach_radius = DEFAULT_ATTACH_FRACTION * model.bbox_diagonal()
    if attach_radius <= 0:
        raise ValueError("attach_radius must be positive")
    segments = skeleton.bone_segments(posed=False)
    n_bones = skeleton.n_bones
    if n_bones == 0:
        raise ValueError("skeleton has no bones")

    dist = _segment_distances(model.positions, segments)
    nearest = np.argmin(dist, axis=1)  # ties resolve to the lower bone id
    near_dist = dist[np.arange(len(dist)), nearest]
    attach_bone = np.where(near_dist <= attach_radius, nearest, -1)
    for b in range(n_bones):
        if not np.any(attach_bone == b):
            raise ValueError(
                f"bone {b} ({skeleton.bone_name(b)}) has no vertex within "
                f"attach radius {attach_radius:.6g}"
            )

    lap = build_cotan_laplacian(model)
    n = model.n_vertices
    fixed = np.nonzero(attach_bone >= 0)[0]
    free = np.nonzero(attach_bone < 0)[0]

    weights = np.zeros((n, n_bones))
    weights[fixed, attach_bone[fixed]] = 1.0

    if free.size:
        live = lap.edge_weights > 0
        edges = lap.edges[live]
        graph = sparse.coo_matrix(
            (np.ones(len(edges)), (edges[:, 0], edges[:, 1])), shape=(n, n)
        )
        n_comp, labels = csgraph.connected_components(graph, directed=False)
        reached = np.zeros(n_comp, dtype=bool)
        reached[labels[fixed]] = True
        stranded = free[~reached[labels[free]]]
        if stranded.size:
            raise ValueError(
                f"vertex {stranded[0]} cannot reach any bone attachment "
                "through mesh edges"
            )
        system = (-lap.matrix).tocsr()
        a_ff = system[free][:, free].tocsc()
        a_fc = system[free][:, fixed]
        rhs = -a_fc @ weights[fixed]
        weights[free] = splu(a_ff).solve(rhs)

    np.clip(weights, 0.0, 1.0, out=weights)
    weights /= weights.sum(axis=1, keepdims=True)
    return SkinningWeights(weights, attach_bone=attach_bone)


def deform_by_skinning(model, weights, transforms):
    """Blend per-bone affine transforms over the model vertices.

    ``v' = Σ_b w_b · (T_b v)`` evaluated with plain component arithmetic, so
    a scalar re-implementation of the formula reproduces the result exactly.
    All-identity transforms return the input positions unchanged.
    """
    transforms = np.asarray(transforms, dtype=np.float64)
    if transforms.ndim != 3 or transforms.shape[1:] != (4, 4):
        raise ValueError("transforms must have shape (b, 4, 4)")
    if transforms.shape[0] != weights.n_bones:
        raise ValueError(
            f"{weights.n_bones} bones bound but {transforms.shape[0]} transforms"
        )
    if weights.weights.shape[0] != model.n_vertices:
        raise ValueError("weights were bound to a different vertex count")

    if all(np.array_equal(t, np.eye(4)) for t in transforms):
        return model.with_positions(model.positions.copy())

    x = model.positions[:, 0]
    y = model.positions[:, 1]
    z = model.positions[:, 2]
    out = np.zeros_like(model.positions)
    for b in range(transforms.shape[0]):
        w = weights.weights[:, b]
        m = transforms[b]
        out[:, 0] += w * (m[0, 0] * x + m[0, 1] * y + m[0, 2] * z + m[0, 3])
        out[:, 1] += w * (m[1, 0] * x + m[1, 1] * y + m[1, 2] * z + m[1, 3])
        out[:, 2] += w * (m[2, 0] * x + m[2, 1] * y + m[2, 2] * z + m[2, 3])
    return model.with_positions(out)
