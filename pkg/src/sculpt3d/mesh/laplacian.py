"""Cotangent-weighted graph Laplacian over mesh vertices."""

from __future__ import annotations

import numpy as np
from scipy import sparse


class CotanLaplacian:
    """Symmetric cotangent Laplacian.

    Off-diagonal entries hold the (clamped) edge weights
    w_ij = ½(cot α_ij + cot β_ij); each diagonal entry is the negated sum of
    its row's off-diagonals, so all row sums vanish. Negative edge weights are
    clamped to 0 so downstream quadratic solves stay positive semidefinite on
    poor triangulations.

    Attributes
    ----------
    matrix : scipy.sparse.csr_matrix
        The (n, n) operator described above.
    edges : (m, 2) int array
        Unique undirected edges, ``edges[:, 0] < edges[:, 1]``.
    edge_weights : (m,) float array
        Clamped weight per edge, aligned with ``edges``.
    """

    def __init__(self, matrix, edges, edge_weights):
        self.matrix = matrix
        self.edges = edges
        self.edge_weights = edge_weights

    @property
    def n_vertices(self):
        return self.matrix.shape[0]


def build_cotan_laplacian(mesh):
    """Assemble the :class:`CotanLaplacian` of a triangle mesh.

    Raises
    ------
    ValueError
        If any triangle has (near-)zero area, listing the offending triangle
        indices; cotangents are not finite there.
    """
    v = mesh.positions
    t = mesh.triangles
    n = mesh.n_vertices

    # Half-cotangent contributed by each corner to its opposite edge.
    corners = []
    for k in range(3):
        o = v[t[:, k]]
        a = v[t[:, (k + 1) % 3]] - o
        b = v[t[:, (k + 2) % 3]] - o
        cross = np.cross(a, b)
        double_area = np.linalg.norm(cross, axis=1)
        corners.append((np.einsum("ij,ij->i", a, b), double_area))

    double_area = corners[0][1]
    scale = mesh.bbox_diagonal() ** 2
    bad = np.where(double_area <= 1e-14 * max(scale, 1e-300))[0]
    if bad.size:
        raise ValueError(f"zero-area triangles: {bad.tolist()[:16]}")

    edge_list = []
    half_cots = []
    for k in range(3):
        dot, area2 = corners[k]
        edge_list.append(t[:, [(k + 1) % 3, (k + 2) % 3]])
        half_cots.append(dot / (2.0 * area2))
    edge_list = np.concatenate(edge_list, axis=0)
    half_cots = np.concatenate(half_cots)

    edge_list = np.sort(edge_list, axis=1)
    edges, inverse = np.unique(edge_list, axis=0, return_inverse=True)
    weights = np.zeros(len(edges))
    np.add.at(weights, inverse, half_cots)
    np.maximum(weights, 0.0, out=weights)

    row_sum = np.zeros(n)
    np.add.at(row_sum, edges[:, 0], weights)
    np.add.at(row_sum, edges[:, 1], weights)

    rows = np.concatenate([edges[:, 0], edges[:, 1], np.arange(n)])
    cols = np.concatenate([edges[:, 1], edges[:, 0], np.arange(n)])
    vals = np.concatenate([weights, weights, -row_sum])
    matrix = sparse.csr_matrix((vals, (rows, cols)), shape=(n, n))
    return CotanLaplacian(matrix, edges, weights)
