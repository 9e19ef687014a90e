"""Deformation families: cage warps, handle pulls, and skeletal skinning."""

from .arap import ArapState, HandleSet, arap_bind, arap_solve
from .cage import Cage, CageCoordinates, compute_cage_coordinates, deform_by_cage
from .estimators import CageDeformer, HandleDeformer, SkeletonDeformer
from .rig_io import rig_from_record, rig_to_record
from .skeleton import (
    Joint,
    Pose,
    Skeleton,
    pose_transforms,
    quat_about_axis,
    quat_to_matrix,
)
from .skinning import SkinningWeights, compute_skinning_weights, deform_by_skinning

__all__ = [
    "ArapState",
    "Cage",
    "CageCoordinates",
    "CageDeformer",
    "HandleDeformer",
    "HandleSet",
    "Joint",
    "Pose",
    "Skeleton",
    "SkeletonDeformer",
    "SkinningWeights",
    "arap_bind",
    "arap_solve",
    "compute_cage_coordinates",
    "compute_skinning_weights",
    "deform_by_cage",
    "deform_by_skinning",
    "pose_transforms",
    "quat_about_axis",
    "quat_to_matrix",
    "rig_from_record",
    "rig_to_record",
]
