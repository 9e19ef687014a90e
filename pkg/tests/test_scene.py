"""Scene and camera containers plus instance-level edits."""

import numpy as np
import pytest

from sculpt3d.mesh import make_box, make_icosphere
from sculpt3d.scene import (
    Camera,
    Scene,
    add_instance,
    remove_instance,
    translate_instance,
)


def translation(v):
    m = np.eye(4)
    m[:3, 3] = v
    return m


@pytest.fixture
def two_instance_scene():
    s = Scene(camera=Camera.default())
    s = add_instance(s, make_box(), np.eye(4), "box")
    s = add_instance(s, make_icosphere(0.4, 1), translation([2, 0, 0]), "ball")
    return s


# -- camera -------------------------------------------------------------

def test_camera_default_is_valid():
    c = Camera.default()
    assert 0.0 < c.vertical_fov < 180.0
    assert c.width > 0 and c.height > 0


def test_camera_rejects_eye_equal_look_at():
    with pytest.raises(ValueError, match="look_at"):
        Camera(eye=(1, 2, 3), look_at=(1, 2, 3), up=(0, 1, 0),
               vertical_fov=45.0, width=64, height=64)


def test_camera_rejects_up_parallel_to_view():
    with pytest.raises(ValueError, match="parallel"):
        Camera(eye=(0, 0, 2), look_at=(0, 0, 0), up=(0, 0, 1),
               vertical_fov=45.0, width=64, height=64)


@pytest.mark.parametrize("fov", [0.0, 180.0, -10.0, 200.0])
def test_camera_rejects_degenerate_fov(fov):
    with pytest.raises(ValueError, match="fov"):
        Camera(eye=(0, 0, 2), look_at=(0, 0, 0), up=(0, 1, 0),
               vertical_fov=fov, width=64, height=64)


def test_camera_basis_orthonormal_right_handed():
    c = Camera(eye=(1, 2, 5), look_at=(0, 0, 0), up=(0, 1, 0),
               vertical_fov=50.0, width=64, height=48)
    right, up, forward = c.basis()
    for a in (right, up, forward):
        assert np.linalg.norm(a) == pytest.approx(1.0, abs=1e-12)
    assert abs(right @ up) < 1e-12 and abs(right @ forward) < 1e-12
    assert np.allclose(np.cross(right, forward), up, atol=1e-12)
    assert forward @ (np.zeros(3) - np.asarray(c.eye)) > 0  # looks at target


# -- scene construction -------------------------------------------------

def test_add_three_instances_preserves_order(two_instance_scene):
    s = add_instance(two_instance_scene, make_box(size=(0.2,) * 3),
                     translation([0, 2, 0]), "crate")
    assert [i.name for i in s.instances] == ["box", "ball", "crate"]


def test_add_duplicate_name_rejected(two_instance_scene):
    with pytest.raises(ValueError, match="box"):
        add_instance(two_instance_scene, make_box(), np.eye(4), "box")


def test_add_singular_transform_rejected(two_instance_scene):
    m = np.eye(4)
    m[0, 0] = 0.0
    with pytest.raises(ValueError, match="singular"):
        add_instance(two_instance_scene, make_box(), m, "flat")


def test_add_then_remove_restores_scene(two_instance_scene):
    s = add_instance(two_instance_scene, make_box(), translation([5, 0, 0]), "tmp")
    back = remove_instance(s, "tmp")
    assert [i.name for i in back.instances] == \
        [i.name for i in two_instance_scene.instances]
    for a, b in zip(back.instances, two_instance_scene.instances):
        assert a.mesh is b.mesh
        assert np.array_equal(a.transform, b.transform)


def test_remove_unknown_name_raises(two_instance_scene):
    with pytest.raises(KeyError, match="ghost"):
        remove_instance(two_instance_scene, "ghost")


def test_scene_instance_lookup(two_instance_scene):
    inst = two_instance_scene.instance("ball")
    assert inst.name == "ball"
    with pytest.raises(KeyError):
        two_instance_scene.instance("nope")


# -- translate_instance --------------------------------------------------

def test_translate_zero_vector_is_identity(two_instance_scene):
    s = translate_instance(two_instance_scene, "box", (0, 0, 0))
    assert np.array_equal(s.instance("box").transform,
                          two_instance_scene.instance("box").transform)


def test_translate_then_inverse_restores(two_instance_scene):
    v = np.array([0.3, -1.2, 2.5])
    s = translate_instance(two_instance_scene, "ball", v)
    s = translate_instance(s, "ball", -v)
    orig = two_instance_scene.instance("ball").transform
    assert np.abs(s.instance("ball").transform - orig).max() < 1e-12


def test_translate_composes_in_world_space(two_instance_scene):
    s = translate_instance(two_instance_scene, "ball", (0, 0, -1))
    # instance local origin lands one unit closer along -z
    p = s.instance("ball").transform @ [0, 0, 0, 1]
    assert np.allclose(p[:3], [2, 0, -1], atol=1e-12)


def test_translate_leaves_other_instances_untouched(two_instance_scene):
    s = translate_instance(two_instance_scene, "ball", (1, 1, 1))
    assert s.instance("box").mesh is two_instance_scene.instance("box").mesh
    assert np.array_equal(s.instance("box").transform,
                          two_instance_scene.instance("box").transform)
    assert s.camera is two_instance_scene.camera


def test_translate_unknown_name_raises(two_instance_scene):
    with pytest.raises(KeyError, match="ghost"):
        translate_instance(two_instance_scene, "ghost", (1, 0, 0))


def test_scene_is_a_value(two_instance_scene):
    before = [i.name for i in two_instance_scene.instances]
    add_instance(two_instance_scene, make_box(), np.eye(4), "extra")
    translate_instance(two_instance_scene, "box", (9, 9, 9))
    assert [i.name for i in two_instance_scene.instances] == before
