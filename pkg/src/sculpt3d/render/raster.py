"""Deterministic pinhole rasterizer.

Projects every scene instance through the camera, z-buffers fragments on
camera-space depth (distance along the view axis, not NDC z, so depth values
are metric and comparable across images), and shades with per-vertex albedo
interpolated perspective-correctly times a per-triangle headlight factor:
``|cos|`` between the face normal and the direction from the triangle's
centroid to the eye. The absolute value keeps faces from reconstructed or
carved meshes visible regardless of their winding, which is also why
back-face culling is off.

Pixel centers sit at (x + 0.5, y + 0.5) from the top-left corner. There is no
anti-aliasing and no near-plane clipping: triangles with any vertex at or
behind the camera plane are skipped whole. Ties in the z-test keep the
earlier fragment, so triangle (and instance) order breaks exact-depth ties
deterministically.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .types import DepthImage, MaskImage, RasterImage

_NEAR = 1e-9
_FLAT_ALBEDO = 0.7


class RenderResult(NamedTuple):
    color: RasterImage
    depth: DepthImage
    mask: MaskImage


def render_scene(scene) -> RenderResult:
    """Rasterize a scene into color, metric depth, and coverage mask.

    An empty scene (or one whose geometry is all off-screen) yields
    background-only output: the scene's background image if present, else
    black, with all depth pixels invalid and the mask empty.
    """
    cam = scene.camera
    w, h = cam.width, cam.height
    right, up, forward = cam.basis()
    tan_half = np.tan(np.deg2rad(cam.vertical_fov) / 2.0)
    aspect = w / h

    if scene.background is not None:
        if scene.background.shape != (h, w, 3):
            raise ValueError(
                f"background shape {scene.background.shape} does not match "
                f"camera raster {h}x{w}"
            )
        shaded = np.array(scene.background, dtype=np.float64)
    else:
        shaded = np.zeros((h, w, 3))
    zbuf = np.full((h, w), np.inf)
    covered = np.zeros((h, w), dtype=bool)

    for inst in scene.instances:
        mesh = inst.mesh
        if mesh.n_triangles == 0:
            continue
        m = inst.transform
        world = mesh.positions @ m[:3, :3].T + m[:3, 3]
        rel = world - cam.eye
        z = rel @ forward
        # screen coordinates of each vertex; meaningless where z <= 0 but
        # those triangles are skipped before the values are used
        safe_z = np.where(z > _NEAR, z, 1.0)
        sx = (rel @ right / (safe_z * tan_half * aspect) + 1.0) * 0.5 * w
        sy = (1.0 - rel @ up / (safe_z * tan_half)) * 0.5 * h
        albedo = mesh.colors
        if albedo is None:
            albedo = np.full((mesh.n_vertices, 3), _FLAT_ALBEDO)

        tri_w = world[mesh.triangles]
        n_world = np.cross(tri_w[:, 1] - tri_w[:, 0], tri_w[:, 2] - tri_w[:, 0])
        n_norm = np.linalg.norm(n_world, axis=1)
        view = cam.eye - tri_w.mean(axis=1)
        view /= np.maximum(np.linalg.norm(view, axis=1, keepdims=True), 1e-300)
        lambert = np.abs(np.einsum("tj,tj->t", n_world, view)) / np.maximum(
            n_norm, 1e-300
        )

        tris = mesh.triangles
        for t in range(len(tris)):
            i0, i1, i2 = tris[t]
            if z[i0] <= _NEAR or z[i1] <= _NEAR or z[i2] <= _NEAR:
                continue
            x0, x1, x2 = sx[i0], sx[i1], sx[i2]
            y0, y1, y2 = sy[i0], sy[i1], sy[i2]
            area = (x1 - x0) * (y2 - y0) - (y1 - y0) * (x2 - x0)
            if area == 0.0:
                continue
            lo_x = max(0, int(np.floor(min(x0, x1, x2) - 0.5)))
            hi_x = min(w, int(np.ceil(max(x0, x1, x2) + 0.5)))
            lo_y = max(0, int(np.floor(min(y0, y1, y2) - 0.5)))
            hi_y = min(h, int(np.ceil(max(y0, y1, y2) + 0.5)))
            if lo_x >= hi_x or lo_y >= hi_y:
                continue
            px = np.arange(lo_x, hi_x) + 0.5
            py = (np.arange(lo_y, hi_y) + 0.5)[:, None]
            # signed edge functions; normalizing by the signed area accepts
            # both windings (no culling)
            l0 = ((x2 - x1) * (py - y1) - (y2 - y1) * (px - x1)) / area
            l1 = ((x0 - x2) * (py - y2) - (y0 - y2) * (px - x2)) / area
            l2 = 1.0 - l0 - l1
            inside = (l0 >= 0.0) & (l1 >= 0.0) & (l2 >= 0.0)
            if not inside.any():
                continue
            inv_z = l0 / z[i0] + l1 / z[i1] + l2 / z[i2]
            depth = 1.0 / inv_z
            sub = zbuf[lo_y:hi_y, lo_x:hi_x]
            win = inside & (depth < sub)
            if not win.any():
                continue
            shade = (
                l0[..., None] * (albedo[i0] / z[i0])
                + l1[..., None] * (albedo[i1] / z[i1])
                + l2[..., None] * (albedo[i2] / z[i2])
            ) / inv_z[..., None] * lambert[t]
            sub[win] = depth[win]
            shaded[lo_y:hi_y, lo_x:hi_x][win] = shade[win]
            covered[lo_y:hi_y, lo_x:hi_x][win] = True

    pixels = np.rint(np.clip(shaded, 0.0, 1.0) * 255.0).astype(np.uint8)
    depth_vals = np.where(covered, zbuf, 0.0)
    return RenderResult(
        RasterImage(pixels), DepthImage(depth_vals, covered), MaskImage(covered)
    )
