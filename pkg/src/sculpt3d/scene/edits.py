"""Whole-mesh rigid edits and the view-direction prompt rule."""

from __future__ import annotations

import numpy as np

from ..deform.skeleton import quat_about_axis, quat_to_matrix
from ..validation import check_vector3


def rotate_about_point(mesh, axis, degrees, point):
    """Rotate all vertices by ``degrees`` around an axis through ``point``.

    Connectivity, uvs and colors ride along untouched.
    """
    axis = check_vector3(axis, name="axis", nonzero=True)
    point = check_vector3(point, name="point")
    r = quat_to_matrix(quat_about_axis(axis, np.deg2rad(float(degrees))))
    return mesh.with_positions((mesh.positions - point) @ r.T + point)


def rotate_about_centroid(mesh, axis, degrees):
    """Spin a mesh in place around its area-weighted surface centroid.

    The centroid is the triangle-area-weighted mean of face barycenters: a
    surface quantity, stable under retriangulation, independent of the volume
    enclosed. It stays fixed to round-off, so rotations compose and invert
    cleanly.
    """
    return rotate_about_point(mesh, axis, degrees, mesh.area_centroid())


def view_prompt_for_angle(degrees):
    """Text tag for how a model faces the camera after a yaw of ``degrees``.

    The circle splits into a frontal band within 45 degrees of straight-on,
    an opposite back band of the same width, and side bands between; band
    boundaries count toward front/back.
    """
    a = float(degrees) % 360.0
    if a >= 315.0 or a <= 45.0:
        return "front view"
    if 135.0 <= a <= 225.0:
        return "back view"
    return "side view"
