"""Scene graph of mesh instances, precise edits, voxel CSG, and edit programs."""

from .carve import carve
from .edits import rotate_about_centroid, rotate_about_point, view_prompt_for_angle
from .inside import points_inside, winding_number
from .program import (
    EditProgram,
    EditProgramError,
    ProgramResult,
    load_edit_program,
    parse_edit_program,
    run_edit_program,
)
from .types import (
    Camera,
    Scene,
    SceneInstance,
    add_instance,
    remove_instance,
    replace_instance_mesh,
    translate_instance,
)

__all__ = [
    "Camera",
    "EditProgram",
    "EditProgramError",
    "ProgramResult",
    "Scene",
    "SceneInstance",
    "add_instance",
    "carve",
    "load_edit_program",
    "parse_edit_program",
    "points_inside",
    "remove_instance",
    "replace_instance_mesh",
    "rotate_about_centroid",
    "rotate_about_point",
    "run_edit_program",
    "translate_instance",
    "view_prompt_for_angle",
    "winding_number",
]
