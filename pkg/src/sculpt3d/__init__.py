"""3D sculpting toolkit: meshes, deformation, scene edits, rendering,
generative enhancement scheduling, depth metrics, and a session service."""

__version__ = "0.1.0"
