"""Interactive session service, geometry wire format, project persistence."""

from .app import PREDICTOR_REGISTRY, create_app, register_predictor
from .project import Project, ProjectError, load_project, save_project
from .sessions import (
    SculptSession,
    SessionError,
    SessionStore,
    decode_mesh_buffers,
    encode_mesh_buffers,
)

__all__ = [
    "PREDICTOR_REGISTRY",
    "Project",
    "ProjectError",
    "SculptSession",
    "SessionError",
    "SessionStore",
    "create_app",
    "decode_mesh_buffers",
    "encode_mesh_buffers",
    "load_project",
    "register_predictor",
    "save_project",
]
