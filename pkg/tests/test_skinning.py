"""Distance attachment, harmonic weights, and linear-blend deformation."""

import numpy as np
import pytest

from sculpt3d.deform import (
    Joint,
    Pose,
    Skeleton,
    SkinningWeights,
    compute_skinning_weights,
    deform_by_skinning,
    pose_transforms,
    quat_about_axis,
)
from sculpt3d.mesh import TriangleMesh, make_cylinder


def translation(v):
    m = np.eye(4)
    m[:3, 3] = v
    return m


def chain_skeleton(n_joints, step=(0.0, 1.0, 0.0)):
    joints = [Joint("j0", None)]
    for i in range(1, n_joints):
        joints.append(Joint(f"j{i}", i - 1, translation(step)))
    return Skeleton(joints)


def bent_cylinder_setup():
    # axis along +y in [0, 2]; joints at y = 0, 1, 2 -> two bones
    mesh = make_cylinder(radius=0.3, height=2.0, segments=24, rings=8)
    mesh = mesh.transformed(translation([0, 1.0, 0]))
    skeleton = chain_skeleton(3)
    weights = compute_skinning_weights(mesh, skeleton, attach_radius=0.05)
    return mesh, skeleton, weights


def scalar_loop_lbs(positions, weights, transforms):
    """Independent per-vertex, per-bone reference for blending."""
    out = np.zeros_like(positions)
    for v in range(positions.shape[0]):
        x, y, z = positions[v]
        for b in range(transforms.shape[0]):
            w = weights[v, b]
            m = transforms[b]
            out[v, 0] += w * (m[0, 0] * x + m[0, 1] * y + m[0, 2] * z + m[0, 3])
            out[v, 1] += w * (m[1, 0] * x + m[1, 1] * y + m[1, 2] * z + m[1, 3])
            out[v, 2] += w * (m[2, 0] * x + m[2, 1] * y + m[2, 2] * z + m[2, 3])
    return out


def test_weight_rows_are_convex_combinations():
    _, _, w = bent_cylinder_setup()
    assert w.weights.min() >= 0.0
    assert w.weights.max() <= 1.0
    np.testing.assert_allclose(w.weights.sum(axis=1), 1.0, atol=1e-8)


def test_single_bone_gets_full_weight_and_exact_rigid():
    mesh = make_cylinder(radius=0.3, height=1.0, segments=12, rings=2)
    skeleton = chain_skeleton(2)
    mesh = mesh.transformed(translation([0, 0.5, 0]))
    w = compute_skinning_weights(mesh, skeleton)
    assert np.all(w.weights == 1.0)

    q = Pose.identity(2).rotations.copy()
    q[0] = quat_about_axis([0, 1, 0], 0.7)
    posed = skeleton.with_pose(Pose(q, root_translation=[0.2, 0.0, 0.0]))
    t = pose_transforms(posed)
    bent = deform_by_skinning(mesh, w, t)
    expect = mesh.positions @ t[0][:3, :3].T + t[0][:3, 3]
    np.testing.assert_allclose(bent.positions, expect, atol=1e-12)


def test_midpoint_splits_between_bones():
    mesh, skeleton, w = bent_cylinder_setup()
    mid = np.abs(mesh.positions[:, 1] - 1.0) < 1e-9
    assert mid.any()
    np.testing.assert_allclose(w.weights[mid], 0.5, atol=0.05)


def test_weights_vary_monotonically_along_axis():
    mesh, skeleton, w = bent_cylinder_setup()
    levels = np.unique(np.round(mesh.positions[:, 1], 9))
    ring_means = [
        w.weights[np.abs(mesh.positions[:, 1] - y) < 1e-9, 0].mean()
        for y in levels
    ]
    assert ring_means[0] > 0.5 > ring_means[-1]
    assert np.all(np.diff(ring_means) < 1e-12)


def test_empty_attachment_names_bone():
    # mesh hugs the first bone only; the second bone attaches nothing
    mesh = make_cylinder(radius=0.3, height=1.0, segments=12, rings=2)
    mesh = mesh.transformed(translation([0, 0.5, 0]))
    skeleton = chain_skeleton(3)
    with pytest.raises(ValueError, match=r"bone 1.*j1->j2"):
        compute_skinning_weights(mesh, skeleton, attach_radius=0.01)


def test_identity_pose_returns_input_bitwise():
    mesh, skeleton, w = bent_cylinder_setup()
    t = pose_transforms(skeleton)
    out = deform_by_skinning(mesh, w, t)
    assert np.array_equal(out.positions, mesh.positions)
    assert out.positions.dtype == mesh.positions.dtype


def test_blend_matches_scalar_loop_bitwise():
    mesh, skeleton, w = bent_cylinder_setup()
    q = Pose.identity(3).rotations.copy()
    q[1] = quat_about_axis([1, 0, 0], np.pi / 4)
    t = pose_transforms(skeleton.with_pose(Pose(q)))
    bent = deform_by_skinning(mesh, w, t)
    ref = scalar_loop_lbs(mesh.positions, w.weights, t)
    assert np.array_equal(bent.positions, ref)


def test_equal_weights_follow_shared_transform():
    # every vertex weighted 0.5/0.5 under two copies of one rigid motion
    mesh = make_cylinder(radius=0.3, height=2.0, segments=12, rings=4)
    n = mesh.n_vertices
    w = SkinningWeights(np.full((n, 2), 0.5), np.zeros(n, dtype=np.int64))
    rot = np.eye(4)
    rot[:3, :3] = np.array(
        [[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]]
    )
    rot[:3, 3] = [0.1, -0.2, 0.3]
    t = np.stack([rot, rot])
    out = deform_by_skinning(mesh, w, t)
    expect = mesh.positions @ rot[:3, :3].T + rot[:3, 3]
    np.testing.assert_allclose(out.positions, expect, atol=1e-9)


def test_bend_preserves_attributes_and_connectivity():
    mesh, skeleton, w = bent_cylinder_setup()
    uvs = np.random.default_rng(3).random((mesh.n_vertices, 2))
    mesh = TriangleMesh(mesh.positions, mesh.triangles, uvs=uvs)
    q = Pose.identity(3).rotations.copy()
    q[1] = quat_about_axis([1, 0, 0], np.pi / 3)
    t = pose_transforms(skeleton.with_pose(Pose(q)))
    bent = deform_by_skinning(mesh, w, t)
    assert np.array_equal(bent.uvs, uvs)
    assert np.array_equal(bent.triangles, mesh.triangles)


def test_bend_moves_far_half_only():
    mesh, skeleton, w = bent_cylinder_setup()
    q = Pose.identity(3).rotations.copy()
    q[1] = quat_about_axis([1, 0, 0], np.pi / 2)
    t = pose_transforms(skeleton.with_pose(Pose(q)))
    bent = deform_by_skinning(mesh, w, t)
    moved = np.linalg.norm(bent.positions - mesh.positions, axis=1)
    # pinned cap centers: base stays put, tip follows bone 1 rigidly
    base = np.flatnonzero(np.all(np.abs(mesh.positions - [0, 0, 0]) < 1e-9, axis=1))
    tip = np.flatnonzero(np.all(np.abs(mesh.positions - [0, 2, 0]) < 1e-9, axis=1))
    assert moved[base].max() < 1e-12
    hom = np.append(mesh.positions[tip[0]], 1.0)
    np.testing.assert_allclose(bent.positions[tip[0]], (t[1] @ hom)[:3], atol=1e-12)
    lower = mesh.positions[:, 1] < 0.6
    upper = mesh.positions[:, 1] > 1.4
    assert moved[upper].mean() > 3 * moved[lower].mean()


def test_weights_deterministic():
    a = bent_cylinder_setup()[2].weights
    b = bent_cylinder_setup()[2].weights
    assert np.array_equal(a, b)


def test_transform_count_must_match_bones():
    mesh, skeleton, w = bent_cylinder_setup()
    with pytest.raises(ValueError, match="transform"):
        deform_by_skinning(mesh, w, np.eye(4)[None])
