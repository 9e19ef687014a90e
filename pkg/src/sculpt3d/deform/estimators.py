"""Estimator-style façade over the three deformation families.

Each deformer binds to a rest mesh in ``fit`` (the expensive part: coordinate
computation, factorization, or weight solves) and maps a new driver
configuration to deformed geometry in ``transform``. Construction parameters
round-trip through ``get_params``/``set_params`` as usual.
"""

from __future__ import annotations

from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ..validation import check_index_array
from .arap import HandleSet, arap_bind, arap_solve
from .cage import Cage, compute_cage_coordinates, deform_by_cage
from .skeleton import pose_transforms
from .skinning import compute_skinning_weights, deform_by_skinning


class CageDeformer(BaseEstimator):
    """Bind a model into a closed cage; transform moved cage vertices.

    Parameters
    ----------
    cage_mesh : TriangleMesh
        Closed control mesh that must strictly contain the model.

    Attributes
    ----------
    coords_ : CageCoordinates
    model_ : TriangleMesh
    """

    def __init__(self, cage_mesh):
        self.cage_mesh = cage_mesh

    def fit(self, mesh, y=None):
        cage = Cage(self.cage_mesh)
        self.coords_ = compute_cage_coordinates(mesh, cage)
        self.model_ = mesh
        return self

    def transform(self, cage_positions):
        check_is_fitted(self)
        return deform_by_cage(self.model_, self.coords_, cage_positions)


class HandleDeformer(BaseEstimator):
    """Pin handle vertices and pull them toward targets as-rigidly-as-possible.

    Parameters
    ----------
    handle_vertex_ids : array_like of int
    max_iters : int
    tol : float
        Convergence threshold relative to the rest bbox diagonal.
    warm_start : bool
        When True, each ``transform`` starts from the previous solution
        instead of the rest pose (interactive dragging).

    Attributes
    ----------
    state_ : ArapState
    """

    def __init__(self, handle_vertex_ids, max_iters=50, tol=1e-4, warm_start=False):
        self.handle_vertex_ids = handle_vertex_ids
        self.max_iters = max_iters
        self.tol = tol
        self.warm_start = warm_start

    def fit(self, mesh, y=None):
        ids = check_index_array(
            self.handle_vertex_ids, mesh.n_vertices, "handle_vertex_ids"
        )
        handles = HandleSet(ids, mesh.positions[ids], mesh.n_vertices)
        self.state_ = arap_bind(mesh, handles)
        return self

    def transform(self, targets):
        check_is_fitted(self)
        initial = self.state_.current_positions if self.warm_start else None
        return arap_solve(
            self.state_,
            targets,
            max_iters=self.max_iters,
            tol=self.tol,
            initial_positions=initial,
        )


class SkeletonDeformer(BaseEstimator):
    """Bind a model to a skeleton; transform a pose into deformed geometry.

    Parameters
    ----------
    skeleton : Skeleton
        Bind configuration (its own pose is ignored at fit time).
    attach_radius : float, optional
        Pin radius around bone segments; defaults to 2% of the model's
        bounding-box diagonal.

    Attributes
    ----------
    weights_ : SkinningWeights
    model_ : TriangleMesh
    """

    def __init__(self, skeleton, attach_radius=None):
        self.skeleton = skeleton
        self.attach_radius = attach_radius

    def fit(self, mesh, y=None):
        self.weights_ = compute_skinning_weights(
            mesh, self.skeleton, attach_radius=self.attach_radius
        )
        self.model_ = mesh
        return self

    def transform(self, pose):
        check_is_fitted(self)
        posed = self.skeleton.with_pose(pose)
        return deform_by_skinning(self.model_, self.weights_, pose_transforms(posed))
