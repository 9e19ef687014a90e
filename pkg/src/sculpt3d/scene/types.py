"""Scene and camera value types plus instance-level edits.

A :class:`Scene` is an immutable value: every edit returns a new scene that
shares unchanged meshes and transforms with the old one. That keeps concurrent
readers safe without locks and makes programs over scenes referentially
transparent.
"""

from __future__ import annotations

from typing import NamedTuple, Optional, Tuple

import numpy as np

from ..mesh.trianglemesh import TriangleMesh
from ..validation import check_matrix4, check_vector3


class Camera:
    """Pinhole look-at camera.

    Parameters
    ----------
    eye : (3,) array_like
        Camera position in scene units.
    look_at : (3,) array_like
        Point the camera aims at; must differ from ``eye``.
    up : (3,) array_like
        Approximate up direction; must not be parallel to the view direction.
    vertical_fov : float
        Full vertical field of view in degrees, strictly inside (0, 180).
    width, height : int
        Output raster size in pixels.
    """

    __slots__ = ("eye", "look_at", "up", "vertical_fov", "width", "height")

    def __init__(self, eye, look_at, up, vertical_fov, width, height):
        eye = check_vector3(eye, name="eye").copy()
        look_at = check_vector3(look_at, name="look_at").copy()
        up = check_vector3(up, name="up", nonzero=True).copy()
        view = look_at - eye
        if float(np.linalg.norm(view)) == 0.0:
            raise ValueError("eye and look_at coincide")
        cross = np.cross(view, up)
        if np.linalg.norm(cross) <= 1e-12 * np.linalg.norm(view) * np.linalg.norm(up):
            raise ValueError("up is parallel to the view direction")
        vertical_fov = float(vertical_fov)
        if not (0.0 < vertical_fov < 180.0):
            raise ValueError(f"vertical_fov must be in (0, 180) degrees, got {vertical_fov}")
        width, height = int(width), int(height)
        if width < 1 or height < 1:
            raise ValueError(f"image size must be positive, got {width}x{height}")
        for name, value in (
            ("eye", eye), ("look_at", look_at), ("up", up),
            ("vertical_fov", vertical_fov), ("width", width), ("height", height),
        ):
            if isinstance(value, np.ndarray):
                value.setflags(write=False)
            object.__setattr__(self, name, value)

    def __setattr__(self, name, value):
        raise AttributeError("Camera is immutable")

    @classmethod
    def default(cls):
        """Camera used when a program or session does not configure one."""
        return cls(eye=(0.0, 0.0, 3.0), look_at=(0.0, 0.0, 0.0), up=(0.0, 1.0, 0.0),
                   vertical_fov=45.0, width=512, height=384)

    def basis(self):
        """Orthonormal (right, up, forward) with forward toward ``look_at``."""
        forward = self.look_at - self.eye
        forward = forward / np.linalg.norm(forward)
        right = np.cross(forward, self.up)
        right = right / np.linalg.norm(right)
        up = np.cross(right, forward)
        return right, up, forward

    def __repr__(self):
        return (f"Camera(eye={self.eye.tolist()}, look_at={self.look_at.tolist()}, "
                f"fov={self.vertical_fov}, {self.width}x{self.height})")


class SceneInstance(NamedTuple):
    name: str
    mesh: TriangleMesh
    transform: np.ndarray  # 4x4, invertible


class Scene:
    """Ordered collection of placed mesh instances under one camera.

    Instance names are unique; transforms are invertible 4x4 matrices.
    ``background`` is an optional (h, w, 3) float image in [0, 1] composited
    behind renders of the scene.
    """

    __slots__ = ("instances", "camera", "background")

    def __init__(self, instances=(), camera=None, background=None):
        checked = []
        seen = set()
        for inst in instances:
            name, mesh, transform = inst
            if not isinstance(name, str) or not name:
                raise ValueError(f"instance name must be a non-empty string, got {name!r}")
            if name in seen:
                raise ValueError(f"instance name {name!r} already in scene")
            seen.add(name)
            if not isinstance(mesh, TriangleMesh):
                raise TypeError(f"instance {name!r} mesh must be a TriangleMesh")
            transform = check_matrix4(transform, name=f"instance {name!r} transform",
                                      require_invertible=True)
            if transform.flags.writeable:
                transform = transform.copy()
                transform.setflags(write=False)
            checked.append(SceneInstance(name, mesh, transform))
        if camera is None:
            camera = Camera.default()
        if not isinstance(camera, Camera):
            raise TypeError("camera must be a Camera")
        if background is not None:
            background = np.asarray(background, dtype=np.float64)
            if background.ndim != 3 or background.shape[2] != 3:
                raise ValueError(
                    f"background must be (h, w, 3), got {background.shape}")
            if not np.isfinite(background).all() or background.min() < 0.0 \
                    or background.max() > 1.0:
                raise ValueError("background values must be finite and in [0, 1]")
            if background.flags.writeable:
                background = background.copy()
                background.setflags(write=False)
        object.__setattr__(self, "instances", tuple(checked))
        object.__setattr__(self, "camera", camera)
        object.__setattr__(self, "background", background)

    def __setattr__(self, name, value):
        raise AttributeError("Scene is immutable; edits return new scenes")

    def instance(self, name) -> SceneInstance:
        for inst in self.instances:
            if inst.name == name:
                return inst
        raise KeyError(f"no instance named {name!r}")

    def has_instance(self, name) -> bool:
        return any(inst.name == name for inst in self.instances)

    def instance_names(self) -> Tuple[str, ...]:
        return tuple(inst.name for inst in self.instances)

    def _with_instances(self, instances) -> "Scene":
        return Scene(instances, camera=self.camera, background=self.background)

    def with_camera(self, camera) -> "Scene":
        return Scene(self.instances, camera=camera, background=self.background)

    def with_background(self, background) -> "Scene":
        return Scene(self.instances, camera=self.camera, background=background)

    def __repr__(self):
        return f"Scene({', '.join(self.instance_names()) or 'empty'})"


def add_instance(scene, mesh, transform, name) -> Scene:
    """Append a named mesh instance; later instances draw later, depth decides."""
    if scene.has_instance(name):
        raise ValueError(f"instance name {name!r} already in scene")
    return scene._with_instances(scene.instances + ((name, mesh, transform),))


def remove_instance(scene, name) -> Scene:
    """Drop one instance by name; order of the rest is preserved."""
    scene.instance(name)  # raises KeyError for unknown names
    return scene._with_instances(
        tuple(inst for inst in scene.instances if inst.name != name))


def translate_instance(scene, name, vector) -> Scene:
    """Move one instance in world space; everything else is untouched."""
    scene.instance(name)  # raises KeyError for unknown names
    vector = check_vector3(vector, name="vector")
    shift = np.eye(4)
    shift[:3, 3] = vector
    out = tuple(
        SceneInstance(inst.name, inst.mesh, shift @ inst.transform)
        if inst.name == name else inst
        for inst in scene.instances
    )
    return scene._with_instances(out)


def replace_instance_mesh(scene, name, mesh) -> Scene:
    """Swap the mesh of one instance, keeping its transform and position in order."""
    scene.instance(name)
    out = tuple(
        SceneInstance(inst.name, mesh, inst.transform) if inst.name == name else inst
        for inst in scene.instances
    )
    return scene._with_instances(out)
