"""As-rigid-as-possible handle deformation (local-global alternation).

The mesh behaves like a thin rubber shell: selected handle vertices are
pinned to target points and the remaining vertices minimize

    E(v', R) = sum_ij  w_ij || (v'_i - v'_j) - R_i (v_i - v_j) ||^2

with cotangent edge weights and one rotation per vertex. The constrained
linear system is factorized once at bind time and reused across solves.
"""

from __future__ import annotations

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph
from scipy.sparse.linalg import splu

from ..mesh.laplacian import build_cotan_laplacian
from ..validation import check_index_array, check_points3

DEFAULT_MAX_ITERS = 50
DEFAULT_TOL = 1e-4  # of the rest bbox diagonal


class HandleSet:
    """Pinned vertices and where they should go."""

    def __init__(self, handle_vertex_ids, target_positions, n_vertices=None):
        ids = check_index_array(handle_vertex_ids, name="handle_vertex_ids")
        targets = check_points3(target_positions, name="target_positions")
        if len(targets) != len(ids):
            raise ValueError(
                f"{len(ids)} handles but {len(targets)} target positions"
            )
        if n_vertices is not None:
            if ids.size and ids.max() >= n_vertices:
                raise ValueError("handle id out of range")
            if n_vertices - len(ids) < 1:
                raise ValueError("need at least one free (non-handle) vertex")
        self.handle_vertex_ids = ids
        self.target_positions = targets

    def __len__(self):
        return len(self.handle_vertex_ids)


class ArapState:
    """Bound solver state: rest geometry, weights, factorization, rotations.

    Mutable — confine to a single owner while solving. ``factorization_count``
    counts how many times the constrained system was factorized (it must stay
    at 1 across repeated solves on the same binding).
    """

    def __init__(self, mesh, handles, edges, weights, solver):
        self.mesh = mesh
        self.rest_positions = mesh.positions
        self.handle_ids = handles.handle_vertex_ids
        self.edges = edges
        self.weights = weights
        self.solver = solver
        n = mesh.n_vertices
        self.rotations = np.broadcast_to(np.eye(3), (n, 3, 3)).copy()
        self.current_positions = self.rest_positions.copy()
        self.factorization_count = 1
        self.energy_log = []

    @property
    def n_vertices(self):
        return len(self.rest_positions)


def arap_bind(model, handles):
    """Assemble and factorize the handle-constrained system once.

    Raises
    ------
    ValueError
        If some free vertex cannot reach a handle through positive-weight
        edges (the constrained system would be singular); the message names
        one such vertex.
    """
    if not isinstance(handles, HandleSet):
        raise TypeError("handles must be a HandleSet")
    HandleSet(handles.handle_vertex_ids, handles.target_positions, model.n_vertices)
    lap = build_cotan_laplacian(model)
    n = model.n_vertices

    live = lap.edge_weights > 0
    edges = lap.edges[live]
    weights = lap.edge_weights[live]

    graph = sparse.coo_matrix(
        (np.ones(len(edges)), (edges[:, 0], edges[:, 1])), shape=(n, n)
    )
    n_comp, labels = csgraph.connected_components(graph, directed=False)
    reached = np.zeros(n_comp, dtype=bool)
    reached[labels[handles.handle_vertex_ids]] = True
    stranded = np.nonzero(~reached[labels])[0]
    if stranded.size:
        raise ValueError(
            f"vertex {stranded[0]} cannot reach any handle through mesh edges"
        )

    system = (-lap.matrix).tolil()
    for h in handles.handle_vertex_ids:
        system.rows[h] = [int(h)]
        system.data[h] = [1.0]
    solver = splu(system.tocsc())
    return ArapState(model, handles, edges, weights, solver)


def _fit_rotations(state, current):
    """Best per-vertex rotations for the current positions (local step)."""
    i, j = state.edges[:, 0], state.edges[:, 1]
    e = state.rest_positions[i] - state.rest_positions[j]
    ec = current[i] - current[j]
    outer = state.weights[:, None, None] * e[:, :, None] * ec[:, None, :]
    s = np.zeros((state.n_vertices, 3, 3))
    np.add.at(s, i, outer)
    np.add.at(s, j, outer)
    u, _, vt = np.linalg.svd(s)
    r = np.einsum("nji,nkj->nik", vt, u)  # V @ U^T
    flip = np.linalg.det(r) < 0
    if flip.any():
        u[flip, :, -1] = -u[flip, :, -1]
        r[flip] = np.einsum("nji,nkj->nik", vt[flip], u[flip])
    return r


def _energy(state, current, rotations):
    i, j = state.edges[:, 0], state.edges[:, 1]
    e = state.rest_positions[i] - state.rest_positions[j]
    ec = current[i] - current[j]
    ri = np.einsum("nij,nj->ni", rotations[i], e)
    rj = np.einsum("nij,nj->ni", rotations[j], e)
    return float(
        np.sum(state.weights * np.sum((ec - ri) ** 2, axis=1))
        + np.sum(state.weights * np.sum((ec - rj) ** 2, axis=1))
    )


def arap_solve(
    state,
    targets,
    max_iters=DEFAULT_MAX_ITERS,
    tol=DEFAULT_TOL,
    initial_positions=None,
):
    """Run local-global iterations until displacement stalls.

    Parameters
    ----------
    state : ArapState
    targets : (k, 3) array_like
        Target position per bound handle.
    max_iters : int
    tol : float
        Convergence threshold on the max vertex displacement per iteration,
        relative to the rest bounding-box diagonal.
    initial_positions : (n, 3) array_like, optional
        Warm start (e.g. the previous interactive solution); defaults to the
        rest positions. Handle rows are overwritten by ``targets`` either way.

    Returns
    -------
    TriangleMesh
        Deformed mesh; uvs/colors/connectivity are untouched.
    """
    targets = check_points3(targets, name="targets")
    if len(targets) != len(state.handle_ids):
        raise ValueError(
            f"{len(state.handle_ids)} handles bound but {len(targets)} targets"
        )
    if max_iters < 1:
        raise ValueError("max_iters must be >= 1")
    if tol <= 0:
        raise ValueError("tol must be positive")

    if initial_positions is None:
        current = state.rest_positions.copy()
    else:
        current = check_points3(initial_positions, name="initial_positions").copy()
        if len(current) != state.n_vertices:
            raise ValueError("initial_positions has wrong vertex count")
    current[state.handle_ids] = targets

    diag = state.mesh.bbox_diagonal()
    threshold = tol * diag
    i, j = state.edges[:, 0], state.edges[:, 1]
    e = state.rest_positions[i] - state.rest_positions[j]
    state.energy_log = []

    for _ in range(max_iters):
        rotations = _fit_rotations(state, current)
        rsum = rotations[i] + rotations[j]
        contrib = 0.5 * state.weights[:, None] * np.einsum("nij,nj->ni", rsum, e)
        rhs = np.zeros((state.n_vertices, 3))
        np.add.at(rhs, i, contrib)
        np.add.at(rhs, j, -contrib)
        rhs[state.handle_ids] = targets
        solved = state.solver.solve(rhs)
        if not np.all(np.isfinite(solved)):
            raise ArithmeticError("back-substitution produced non-finite positions")
        step = np.max(np.linalg.norm(solved - current, axis=1))
        current = solved
        state.rotations = rotations
        state.energy_log.append(_energy(state, current, rotations))
        if step < threshold:
            break

    state.current_positions = current
    return state.mesh.with_positions(current)
