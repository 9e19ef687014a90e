"""Joint trees, forward kinematics, and per-bone skinning transforms.

A skeleton is a tree of joints, each with a rest-pose local transform; bones
are the tree edges, identified by their child joint in index order and driven
by their proximal joint, so rotating a joint swings everything below it about
that joint. Pose rotations are unit quaternions in (w, x, y, z) order; the
root may also translate.
"""

from __future__ import annotations

import numpy as np

from ..validation import check_matrix4, check_unit_quaternion, check_vector3


def quat_to_matrix(q):
    """Unit quaternion (w, x, y, z) to a 3x3 rotation matrix."""
    w, x, y, z = check_unit_quaternion(q)
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )


def quat_about_axis(axis, angle):
    """Unit quaternion for a rotation of ``angle`` radians about ``axis``."""
    axis = check_vector3(axis, name="axis")
    norm = np.linalg.norm(axis)
    if norm == 0:
        raise ValueError("axis must be nonzero")
    half = angle / 2.0
    return np.concatenate([[np.cos(half)], np.sin(half) * axis / norm])


class Joint:
    """One joint: display name, parent index (None for the root), and the
    rest-pose transform relative to the parent."""

    def __init__(self, name, parent, local_rest=None):
        self.name = str(name)
        self.parent = None if parent is None else int(parent)
        if local_rest is None:
            local_rest = np.eye(4)
        self.local_rest = check_matrix4(local_rest, name="local_rest")


class Pose:
    """Per-joint local rotations plus an optional root translation."""

    def __init__(self, rotations, root_translation=None):
        rotations = np.asarray(rotations, dtype=np.float64)
        if rotations.ndim != 2 or rotations.shape[1] != 4:
            raise ValueError("rotations must have shape (n_joints, 4)")
        for k, q in enumerate(rotations):
            check_unit_quaternion(q, name=f"rotations[{k}]")
        self.rotations = rotations
        if root_translation is None:
            root_translation = np.zeros(3)
        self.root_translation = check_vector3(root_translation, name="root_translation")

    @classmethod
    def identity(cls, n_joints):
        q = np.zeros((n_joints, 4))
        q[:, 0] = 1.0
        return cls(q)


class Skeleton:
    """Validated joint tree with a current pose.

    Attributes
    ----------
    joints : list of Joint
    pose : Pose
    bones : (b, 2) int array
        Tree edges as (proximal joint, child joint), ordered by child index.
    """

    def __init__(self, joints, pose=None):
        if not joints:
            raise ValueError("skeleton needs at least one joint")
        self.joints = list(joints)
        n = len(self.joints)
        roots = [k for k, j in enumerate(self.joints) if j.parent is None]
        if len(roots) != 1:
            raise ValueError(f"expected exactly one root joint, found {len(roots)}")
        for k, j in enumerate(self.joints):
            if j.parent is not None and not (0 <= j.parent < n):
                raise ValueError(f"joint {k} has parent {j.parent} out of range")
            if j.parent == k:
                raise ValueError(f"joint {k} is its own parent")
        # acyclic: every parent chain must terminate at the root
        for k in range(n):
            seen = set()
            node = k
            while node is not None:
                if node in seen:
                    raise ValueError(f"parent cycle through joint {k}")
                seen.add(node)
                node = self.joints[node].parent
        self.bones = np.array(
            [(self.joints[c].parent, c) for c in range(n) if self.joints[c].parent is not None],
            dtype=np.int64,
        ).reshape(-1, 2)
        self.pose = Pose.identity(n) if pose is None else pose
        if self.pose.rotations.shape[0] != n:
            raise ValueError("pose has wrong joint count")

    @property
    def n_joints(self):
        return len(self.joints)

    @property
    def n_bones(self):
        return len(self.bones)

    def bone_name(self, b):
        j, c = self.bones[b]
        return f"{self.joints[j].name}->{self.joints[c].name}"

    def with_pose(self, pose):
        return Skeleton(self.joints, pose)

    def joint_world_transforms(self, posed=True):
        """World transform of every joint (rest pose when ``posed`` is False)."""
        n = self.n_joints
        world = [None] * n
        order = _topological_order(self.joints)
        for k in order:
            local = self.joints[k].local_rest
            if posed:
                m = np.eye(4)
                m[:3, :3] = quat_to_matrix(self.pose.rotations[k])
                if self.joints[k].parent is None:
                    m[:3, 3] = self.pose.root_translation
                local = local @ m
            parent = self.joints[k].parent
            world[k] = local if parent is None else world[parent] @ local
        return np.stack(world)

    def bone_segments(self, posed=False):
        """(b, 2, 3) world endpoints of every bone segment."""
        world = self.joint_world_transforms(posed=posed)
        ends = world[:, :3, 3]
        return np.stack([ends[self.bones[:, 0]], ends[self.bones[:, 1]]], axis=1)


def _topological_order(joints):
    children = {}
    root = None
    for k, j in enumerate(joints):
        if j.parent is None:
            root = k
        else:
            children.setdefault(j.parent, []).append(k)
    order = []
    stack = [root]
    while stack:
        k = stack.pop()
        order.append(k)
        stack.extend(reversed(children.get(k, [])))
    return order


def pose_transforms(skeleton):
    """Per-bone skinning transforms: world(proximal) · bind_world(proximal)⁻¹.

    At the identity pose every transform is the identity.
    """
    bind = skeleton.joint_world_transforms(posed=False)
    world = skeleton.joint_world_transforms(posed=True)
    out = np.empty((skeleton.n_bones, 4, 4))
    for b, (j, _c) in enumerate(skeleton.bones):
        out[b] = world[j] @ np.linalg.inv(bind[j])
    return out
