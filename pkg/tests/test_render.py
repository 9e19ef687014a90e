"""Rasterizer and image I/O: analytic pinhole oracles, z-buffer, PNG round trips."""

import numpy as np
import pytest
from PIL import Image

from sculpt3d.mesh import TriangleMesh, make_box, make_icosphere
from sculpt3d.scene import Camera, Scene
from sculpt3d.render import (
    DepthImage,
    MaskImage,
    RasterImage,
    composite_over,
    load_color_png,
    load_depth_png,
    load_mask_png,
    render_scene,
    save_color_png,
    save_depth_png,
    save_mask_png,
)


# ---------------------------------------------------------------------------
# oracles (independent pinhole geometry, written before the rasterizer)


def oracle_pixel_width(world_width, depth, cam):
    """Similar triangles: projected pixel width of a segment facing the camera.

    The frustum half-height at distance d is d*tan(vfov/2); the half-width is
    that times the aspect ratio. A world extent w therefore covers
    w / (2*d*tan(vfov/2)*aspect) of the image width.
    """
    tan_half = np.tan(np.deg2rad(cam.vertical_fov) / 2.0)
    aspect = cam.width / cam.height
    return world_width / (2.0 * depth * tan_half * aspect) * cam.width


def oracle_ray_through_pixel(cam, px, py):
    """Unit ray direction through the center of pixel (px, py)."""
    right, up, forward = cam.basis()
    tan_half = np.tan(np.deg2rad(cam.vertical_fov) / 2.0)
    aspect = cam.width / cam.height
    x_ndc = 2.0 * (px + 0.5) / cam.width - 1.0
    y_ndc = 1.0 - 2.0 * (py + 0.5) / cam.height
    d = forward + x_ndc * tan_half * aspect * right + y_ndc * tan_half * up
    return d / np.linalg.norm(d)


def oracle_shade_at_pixel(cam, mesh, tri_index, px, py):
    """Expected color and depth at a pixel center: intersect the pinhole ray
    with the triangle's plane, take 3D barycentric weights (perspective-correct
    by construction), and apply the documented per-triangle headlight factor.
    """
    a, b, c = mesh.positions[mesh.triangles[tri_index]]
    ray = oracle_ray_through_pixel(cam, px, py)
    n = np.cross(b - a, c - a)
    t = np.dot(a - cam.eye, n) / np.dot(ray, n)
    hit = cam.eye + t * ray
    # barycentric weights proportional to sub-triangle areas against the hit
    w0 = np.dot(np.cross(b - hit, c - hit), n)
    w1 = np.dot(np.cross(c - hit, a - hit), n)
    w2 = np.dot(np.cross(a - hit, b - hit), n)
    bary = np.array([w0, w1, w2]) / (w0 + w1 + w2)
    assert bary.min() > 0.0, "probe pixel must be strictly inside the triangle"
    albedo = (
        bary @ mesh.colors[mesh.triangles[tri_index]]
        if mesh.colors is not None
        else np.full(3, 0.7)
    )
    centroid = (a + b + c) / 3.0
    view = cam.eye - centroid
    lambert = abs(np.dot(n / np.linalg.norm(n), view / np.linalg.norm(view)))
    _, _, forward = cam.basis()
    return albedo * lambert, float(np.dot(hit - cam.eye, forward))


def mask_x_extent(mask):
    cols = np.flatnonzero(mask.values.any(axis=0))
    return cols[-1] - cols[0] + 1


def facing_quad(center, half, z):
    """Two-triangle square of side 2*half in the plane z=const, facing +z."""
    cx, cy = center
    pos = [
        [cx - half, cy - half, z],
        [cx + half, cy - half, z],
        [cx + half, cy + half, z],
        [cx - half, cy + half, z],
    ]
    return TriangleMesh(pos, [[0, 1, 2], [0, 2, 3]])


def headon_camera(width=201, height=201, vfov=60.0):
    """Camera at the origin looking down -z."""
    return Camera((0, 0, 0), (0, 0, -1), (0, 1, 0), vfov, width, height)


# ---------------------------------------------------------------------------
# rasterize


def test_center_pixel_depth_analytic():
    cam = headon_camera()
    tri = TriangleMesh([[-5, -5, -2.0], [5, -5, -2.0], [0, 5, -2.0]], [[0, 1, 2]])
    out = render_scene(Scene([("tri", tri, np.eye(4))], cam))
    assert out.depth.values[100, 100] == pytest.approx(2.0, abs=1e-5)
    assert out.mask.values[100, 100] == 1


def test_zbuffer_nearer_wins_both_orders():
    cam = headon_camera()
    near = facing_quad((0, 0), 0.5, -1.0)
    far = facing_quad((0, 0), 0.5, -2.0)
    for order in (("near", near), ("far", far)), (("far", far), ("near", near)):
        scene = Scene([(n, m, np.eye(4)) for n, m in order], cam)
        out = render_scene(scene)
        covered = out.mask.values == 1
        assert covered.any()
        assert np.allclose(out.depth.values[covered], 1.0)


def test_quad_halving_distance_doubles_width():
    cam = headon_camera(width=401, height=401)
    widths = {}
    for d in (4.0, 2.0):
        out = render_scene(Scene([("q", facing_quad((0, 0), 0.5, -d), np.eye(4))], cam))
        widths[d] = mask_x_extent(out.mask)
        assert widths[d] == pytest.approx(oracle_pixel_width(1.0, d, cam), rel=0.02)
    assert widths[2.0] / widths[4.0] == pytest.approx(2.0, rel=0.02)


def test_scale_two_transform_doubles_rendered_bbox():
    cam = headon_camera(width=401, height=401)
    quad = facing_quad((0, 0), 0.5, -4.0)
    scale = np.diag([2.0, 2.0, 1.0, 1.0])
    w1 = mask_x_extent(render_scene(Scene([("q", quad, np.eye(4))], cam)).mask)
    w2 = mask_x_extent(render_scene(Scene([("q", quad, scale)], cam)).mask)
    assert w2 / w1 == pytest.approx(2.0, rel=0.02)


def test_perspective_correct_color_and_depth():
    cam = headon_camera(width=161, height=161)
    # slanted triangle: depth varies across the image so screen-linear
    # interpolation would be measurably wrong
    mesh = TriangleMesh(
        [[-2.0, -1.5, -2.0], [2.0, -1.5, -6.0], [0.0, 2.0, -4.0]],
        [[0, 1, 2]],
        colors=[[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
    )
    out = render_scene(Scene([("t", mesh, np.eye(4))], cam))
    for px, py in ((80, 80), (60, 90), (95, 70)):
        assert out.mask.values[py, px] == 1
        shade, depth = oracle_shade_at_pixel(cam, mesh, 0, px, py)
        expected = np.rint(np.clip(shade, 0.0, 1.0) * 255.0)
        got = out.color.pixels[py, px].astype(float)
        assert np.abs(got - expected).max() <= 1.0, (px, py, got, expected)
        assert out.depth.values[py, px] == pytest.approx(depth, rel=1e-6)


def test_uncolored_mesh_renders_headlight_gray():
    cam = headon_camera()
    quad = facing_quad((0, 0), 0.5, -2.0)
    out = render_scene(Scene([("q", quad, np.eye(4))], cam))
    # probe strictly inside the first triangle (screen lower-right half)
    px, py = 120, 110
    assert out.mask.values[py, px] == 1
    shade, _ = oracle_shade_at_pixel(cam, quad, 0, px, py)
    got = out.color.pixels[py, px].astype(float)
    assert np.abs(got - np.rint(shade * 255.0)).max() <= 1.0
    assert got.min() == got.max()  # albedo defaults to uniform gray
    # facing quad, near-axis headlight: shading stays close to plain 0.7 gray
    assert np.abs(got - 0.7 * 255.0).max() <= 3.0


def test_empty_scene_renders_background():
    cam = headon_camera(width=32, height=24)
    out = render_scene(Scene([], cam))
    assert out.color.pixels.shape == (24, 32, 3)
    assert not out.color.pixels.any()
    assert not out.mask.values.any()
    assert not out.depth.values.any()
    assert not out.depth.valid.any()


def test_background_image_fills_uncovered_pixels():
    cam = headon_camera(width=33, height=21)
    bg = np.linspace(0.0, 1.0, 21 * 33 * 3).reshape(21, 33, 3)
    tri = TriangleMesh([[-0.1, -0.1, -2.0], [0.1, -0.1, -2.0], [0.0, 0.1, -2.0]], [[0, 1, 2]])
    out = render_scene(Scene([("t", tri, np.eye(4))], cam, background=bg))
    covered = out.mask.values == 1
    assert covered.any() and not covered.all()
    expected_bg = np.rint(bg * 255.0).astype(np.uint8)
    assert np.array_equal(out.color.pixels[~covered], expected_bg[~covered])
    assert not np.array_equal(out.color.pixels[covered], expected_bg[covered])


def test_mask_and_depth_validity_agree():
    cam = headon_camera(width=64, height=48)
    scene = Scene(
        [("box", make_box(), np.eye(4)), ("ball", make_icosphere(0.4, 2),
          np.array([[1, 0, 0, 0.8], [0, 1, 0, 0], [0, 0, 1, -1.0], [0, 0, 0, 1]], dtype=float))],
        Camera((0, 0, 3), (0, 0, 0), (0, 1, 0), 45, 64, 48),
    )
    out = render_scene(scene)
    covered = out.mask.values == 1
    assert np.array_equal(out.depth.valid, covered)
    assert (out.depth.values[covered] > 0).all()
    assert np.isfinite(out.depth.values[covered]).all()
    assert not out.depth.values[~covered].any()


def test_rendering_deterministic():
    scene = Scene([("ball", make_icosphere(0.8, 2), np.eye(4))],
                  Camera((0, 0, 3), (0, 0, 0), (0, 1, 0), 45, 96, 72))
    a = render_scene(scene)
    b = render_scene(scene)
    assert np.array_equal(a.color.pixels, b.color.pixels)
    assert np.array_equal(a.depth.values, b.depth.values)
    assert np.array_equal(a.mask.values, b.mask.values)


def test_rigid_rotation_of_scene_and_camera_is_stable():
    mesh = make_icosphere(0.7, 2)
    box = make_box(size=(0.4, 0.4, 0.4), center=(0.9, 0.2, 0.0))
    cam = Camera((0.2, 0.4, 3.0), (0, 0, 0), (0, 1, 0), 50, 160, 120)
    t = np.deg2rad(30.0)
    rot = np.array([[np.cos(t), 0, np.sin(t)], [0, 1, 0], [-np.sin(t), 0, np.cos(t)]])
    cam2 = Camera(rot @ cam.eye, rot @ cam.look_at, rot @ cam.up, 50, 160, 120)
    a = render_scene(Scene([("m", mesh, np.eye(4)), ("b", box, np.eye(4))], cam))
    b = render_scene(
        Scene([("m", mesh.with_positions(mesh.positions @ rot.T), np.eye(4)),
               ("b", box.with_positions(box.positions @ rot.T), np.eye(4))], cam2)
    )
    n_pix = 160 * 120
    assert int((a.mask.values != b.mask.values).sum()) < 0.001 * n_pix
    assert int((a.color.pixels != b.color.pixels).any(axis=2).sum()) < 0.001 * n_pix


def test_coincident_triangles_first_wins():
    cam = headon_camera(width=64, height=64)
    pos = [[-1, -1, -2.0], [1, -1, -2.0], [0, 1, -2.0]]
    red = np.tile([[1.0, 0, 0]], (3, 1))
    blue = np.tile([[0.0, 0, 1.0]], (3, 1))
    both = TriangleMesh(pos + pos, [[0, 1, 2], [3, 4, 5]],
                        colors=np.vstack([red, blue]))
    out = render_scene(Scene([("m", both, np.eye(4))], cam))
    covered = out.mask.values == 1
    assert covered.any()
    assert (out.color.pixels[covered][:, 0] > 0).all()
    assert not out.color.pixels[covered][:, 2].any()


def test_triangle_behind_camera_skipped():
    cam = headon_camera(width=32, height=32)
    behind = TriangleMesh([[-1, -1, 2.0], [1, -1, 2.0], [0, 1, 2.0]], [[0, 1, 2]])
    out = render_scene(Scene([("b", behind, np.eye(4))], cam))
    assert not out.mask.values.any()


def test_offscreen_triangle_skipped():
    cam = headon_camera(width=32, height=32)
    left = TriangleMesh([[-50, -1, -2.0], [-48, -1, -2.0], [-49, 1, -2.0]], [[0, 1, 2]])
    out = render_scene(Scene([("l", left, np.eye(4))], cam))
    assert not out.mask.values.any()


# ---------------------------------------------------------------------------
# depth PNG


def depth_from_values(values, valid):
    values = np.asarray(values, dtype=np.float64)
    valid = np.asarray(valid, dtype=bool)
    return DepthImage(np.where(valid, values, 0.0), valid)


def test_depth_png_constant_plane(tmp_path):
    d = depth_from_values(np.full((8, 10), 2.5), np.ones((8, 10), bool))
    meta = save_depth_png(d, tmp_path / "d.png")
    arr = np.asarray(Image.open(tmp_path / "d.png"))
    assert arr.shape == (8, 10)
    assert (arr == 65535).all()
    lines = open(meta).read().split()
    assert float(lines[0]) == 2.5 and float(lines[1]) == 2.5


def test_depth_png_two_plane_endpoints(tmp_path):
    vals = np.zeros((4, 6))
    valid = np.zeros((4, 6), bool)
    vals[:2], valid[:2] = 1.0, True
    vals[2:], valid[2:] = 3.0, True
    valid[0, 0] = False
    vals[0, 0] = 0.0
    save_depth_png(depth_from_values(vals, valid), tmp_path / "d.png")
    arr = np.asarray(Image.open(tmp_path / "d.png"))
    assert arr[0, 0] == 0
    assert set(np.unique(arr[valid]).tolist()) == {1, 65535}
    assert (arr[:2][valid[:2]] == 65535).all()


def test_depth_png_roundtrip_quantization_bound(tmp_path):
    rng = np.random.default_rng(11)
    vals = rng.uniform(0.5, 7.0, size=(37, 53))
    valid = rng.random((37, 53)) < 0.8
    valid.flat[0] = True
    d = depth_from_values(vals, valid)
    save_depth_png(d, tmp_path / "d.png")
    back = load_depth_png(tmp_path / "d.png")
    assert np.array_equal(back.valid, d.valid)
    lo, hi = d.values[valid].min(), d.values[valid].max()
    assert np.abs(back.values[valid] - d.values[valid]).max() <= (hi - lo) / 65534
    assert not back.values[~valid].any()


def test_depth_png_meta_nine_significant_digits(tmp_path):
    vals = np.full((3, 3), np.pi)
    vals[0, 0] = np.e
    meta = save_depth_png(depth_from_values(vals, np.ones((3, 3), bool)), tmp_path / "d.png")
    assert meta == str(tmp_path / "d.png") + ".meta"
    lines = open(meta).read().splitlines()
    assert lines[0] == f"{np.e:.9g}"
    assert lines[1] == f"{np.pi:.9g}"


def test_depth_png_requires_valid_pixels(tmp_path):
    d = DepthImage(np.zeros((4, 4)), np.zeros((4, 4), bool))
    with pytest.raises(ValueError, match="valid"):
        save_depth_png(d, tmp_path / "d.png")


def test_depth_image_invariants():
    with pytest.raises(ValueError):
        DepthImage(np.full((2, 2), -1.0), np.ones((2, 2), bool))  # negative depth
    with pytest.raises(ValueError):
        DepthImage(np.full((2, 2), np.inf), np.ones((2, 2), bool))
    with pytest.raises(ValueError):  # invalid pixels must carry 0
        DepthImage(np.full((2, 2), 1.0), np.zeros((2, 2), bool))


# ---------------------------------------------------------------------------
# color / mask PNG


def test_color_png_roundtrip(tmp_path):
    rng = np.random.default_rng(5)
    img = RasterImage(rng.integers(0, 256, size=(19, 23, 3), dtype=np.uint8))
    save_color_png(img, tmp_path / "c.png")
    back = load_color_png(tmp_path / "c.png")
    assert np.array_equal(back.pixels, img.pixels)


def test_mask_png_roundtrip(tmp_path):
    rng = np.random.default_rng(6)
    m = MaskImage((rng.random((17, 13)) < 0.5).astype(np.uint8))
    save_mask_png(m, tmp_path / "m.png")
    on_disk = np.asarray(Image.open(tmp_path / "m.png"))
    assert set(np.unique(on_disk).tolist()) <= {0, 255}
    back = load_mask_png(tmp_path / "m.png")
    assert np.array_equal(back.values, m.values)


# ---------------------------------------------------------------------------
# composite


def checkerboard(h, w):
    yy, xx = np.mgrid[0:h, 0:w]
    return ((yy + xx) % 2).astype(np.uint8)


def test_composite_all_zero_mask_is_background():
    rng = np.random.default_rng(7)
    fg = RasterImage(rng.integers(0, 256, (9, 11, 3), dtype=np.uint8))
    bg = RasterImage(rng.integers(0, 256, (9, 11, 3), dtype=np.uint8))
    out = composite_over(fg, MaskImage(np.zeros((9, 11), np.uint8)), bg)
    assert np.array_equal(out.pixels, bg.pixels)


def test_composite_all_one_mask_is_foreground():
    rng = np.random.default_rng(8)
    fg = RasterImage(rng.integers(0, 256, (9, 11, 3), dtype=np.uint8))
    bg = RasterImage(rng.integers(0, 256, (9, 11, 3), dtype=np.uint8))
    out = composite_over(fg, MaskImage(np.ones((9, 11), np.uint8)), bg)
    assert np.array_equal(out.pixels, fg.pixels)


def test_composite_checkerboard_matches_scalar_loop():
    rng = np.random.default_rng(9)
    fg = RasterImage(rng.integers(0, 256, (6, 7, 3), dtype=np.uint8))
    bg = RasterImage(rng.integers(0, 256, (6, 7, 3), dtype=np.uint8))
    mask = MaskImage(checkerboard(6, 7))
    out = composite_over(fg, mask, bg)
    for y in range(6):
        for x in range(7):
            src = fg.pixels if mask.values[y, x] else bg.pixels
            assert np.array_equal(out.pixels[y, x], src[y, x])


def test_composite_dimension_mismatch():
    fg = RasterImage(np.zeros((4, 4, 3), np.uint8))
    bg = RasterImage(np.zeros((4, 5, 3), np.uint8))
    with pytest.raises(ValueError, match="dimension"):
        composite_over(fg, MaskImage(np.zeros((4, 4), np.uint8)), bg)
