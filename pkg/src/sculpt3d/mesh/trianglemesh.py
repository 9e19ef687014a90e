"""Triangle mesh container and differential/global quantities derived from it."""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from ..validation import check_points3, check_triangles


class TriangleMesh:
    """An immutable indexed triangle mesh.

    Parameters
    ----------
    positions : array_like
        (n, 3) vertex coordinates in world units.
    triangles : array_like
        (m, 3) integer corner indices into ``positions``.
    uvs : array_like, optional
        (n, 2) texture coordinates, one per vertex. Deformations never touch
        these; they ride along with the vertex they belong to.
    colors : array_like, optional
        (n, 3) per-vertex RGB in [0, 1].

    Deformations produce new meshes via :meth:`with_positions`; the arrays
    themselves are never mutated after construction.
    """

    __slots__ = ("positions", "triangles", "uvs", "colors")

    def __init__(self, positions, triangles, uvs=None, colors=None):
        # zero vertices is legal: it is the explicit "nothing left" value
        # produced when carving removes an entire model
        positions = check_points3(positions, "positions", allow_empty=True)
        triangles = check_triangles(triangles, positions.shape[0], allow_empty=True)
        if uvs is not None:
            uvs = np.asarray(uvs, dtype=np.float64)
            if uvs.shape != (positions.shape[0], 2):
                raise ValueError(
                    f"uvs must have shape ({positions.shape[0]}, 2), got {uvs.shape}"
                )
            if not np.isfinite(uvs).all():
                raise ValueError("uvs contain non-finite values")
            uvs.setflags(write=False)
        if colors is not None:
            colors = np.asarray(colors, dtype=np.float64)
            if colors.shape != (positions.shape[0], 3):
                raise ValueError(
                    f"colors must have shape ({positions.shape[0]}, 3), got {colors.shape}"
                )
            if not np.isfinite(colors).all():
                raise ValueError("colors contain non-finite values")
            if colors.min() < 0.0 or colors.max() > 1.0:
                raise ValueError("colors must lie in [0, 1]")
            colors.setflags(write=False)
        positions.setflags(write=False)
        triangles.setflags(write=False)
        object.__setattr__(self, "positions", positions)
        object.__setattr__(self, "triangles", triangles)
        object.__setattr__(self, "uvs", uvs)
        object.__setattr__(self, "colors", colors)

    def __setattr__(self, name, value):
        raise AttributeError("TriangleMesh is immutable")

    @property
    def n_vertices(self):
        return self.positions.shape[0]

    @property
    def n_triangles(self):
        return self.triangles.shape[0]

    def with_positions(self, positions):
        """New mesh with replaced vertex positions; uvs/colors/connectivity shared."""
        positions = check_points3(positions, "positions")
        if positions.shape != self.positions.shape:
            raise ValueError("replacement positions must keep the vertex count")
        return TriangleMesh(positions, self.triangles, uvs=self.uvs, colors=self.colors)

    def transformed(self, matrix):
        """New mesh with positions mapped through a 4x4 homogeneous transform."""
        m = np.asarray(matrix, dtype=np.float64)
        p = self.positions @ m[:3, :3].T + m[:3, 3]
        w = self.positions @ m[3, :3] + m[3, 3]
        return self.with_positions(p / w[:, None])

    def bbox(self):
        return self.positions.min(axis=0), self.positions.max(axis=0)

    def bbox_diagonal(self):
        lo, hi = self.bbox()
        return float(np.linalg.norm(hi - lo))

    def edges(self):
        """Undirected edges as a sorted-unique (e, 2) index array."""
        t = self.triangles
        e = np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
        e = np.sort(e, axis=1)
        return np.unique(e, axis=0)

    def boundary_edge_count(self):
        """Number of undirected edges used by exactly one triangle."""
        _, counts = _edge_multiplicity(self.triangles)
        return int(np.count_nonzero(counts == 1))

    def is_closed(self):
        return self.n_triangles > 0 and self.boundary_edge_count() == 0

    def is_edge_manifold(self):
        _, counts = _edge_multiplicity(self.triangles)
        return bool((counts <= 2).all())

    def euler_characteristic(self):
        edges, _ = _edge_multiplicity(self.triangles)
        return self.n_vertices - edges.shape[0] + self.n_triangles

    def triangle_normals(self, normalized=True):
        p = self.positions
        t = self.triangles
        n = np.cross(p[t[:, 1]] - p[t[:, 0]], p[t[:, 2]] - p[t[:, 0]])
        if normalized:
            lens = np.linalg.norm(n, axis=1)
            lens[lens == 0.0] = 1.0
            n = n / lens[:, None]
        return n

    def triangle_areas(self):
        return 0.5 * np.linalg.norm(self.triangle_normals(normalized=False), axis=1)

    def area_centroid(self):
        """Area-weighted centroid of the surface."""
        areas = self.triangle_areas()
        total = areas.sum()
        if total <= 0.0:
            raise ValueError("mesh has zero surface area")
        centers = self.positions[self.triangles].mean(axis=1)
        return (areas[:, None] * centers).sum(axis=0) / total

    def __repr__(self):
        extras = []
        if self.uvs is not None:
            extras.append("uvs")
        if self.colors is not None:
            extras.append("colors")
        tail = f", {'+'.join(extras)}" if extras else ""
        return f"TriangleMesh({self.n_vertices} vertices, {self.n_triangles} triangles{tail})"


def _edge_multiplicity(triangles):
    t = np.asarray(triangles)
    e = np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
    e = np.sort(e, axis=1)
    return np.unique(e, axis=0, return_counts=True)


class VolumeResult(NamedTuple):
    volume: float
    orientation: int  # +1 if the winding encloses positive signed volume


def signed_volume(mesh):
    """Signed volume via summed signed tetrahedra against the origin."""
    p = mesh.positions[mesh.triangles]
    return float(np.einsum("ij,ij->i", p[:, 0], np.cross(p[:, 1], p[:, 2])).sum() / 6.0)


def mesh_volume(mesh):
    """Enclosed volume of a closed orientable mesh.

    Returns
    -------
    VolumeResult
        ``volume`` is the absolute enclosed volume; ``orientation`` is +1 for
        outward-wound surfaces and -1 for inverted ones.

    Raises
    ------
    ValueError
        If the mesh has boundary edges (open surface).
    """
    open_edges = mesh.boundary_edge_count()
    if open_edges:
        raise ValueError(f"mesh is not closed ({open_edges} boundary edges)")
    v = signed_volume(mesh)
    return VolumeResult(abs(v), 1 if v >= 0.0 else -1)
