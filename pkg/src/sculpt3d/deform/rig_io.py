"""Tagged JSON-friendly records for rigs (handles, cages, skeletons)."""

from __future__ import annotations

import numpy as np

from ..mesh.trianglemesh import TriangleMesh
from .arap import HandleSet
from .cage import Cage
from .skeleton import Joint, Pose, Skeleton


def rig_to_record(rig):
    """Serialize a rig object into a plain tagged dict."""
    if isinstance(rig, HandleSet):
        return {
            "type": "handles",
            "vertex_ids": rig.handle_vertex_ids.tolist(),
            "targets": rig.target_positions.tolist(),
        }
    if isinstance(rig, Cage):
        return {
            "type": "cage",
            "positions": rig.cage_mesh.positions.tolist(),
            "triangles": rig.cage_mesh.triangles.tolist(),
        }
    if isinstance(rig, Skeleton):
        return {
            "type": "skeleton",
            "joints": [
                {
                    "name": j.name,
                    "parent": j.parent,
                    "local_rest": np.asarray(j.local_rest).reshape(16).tolist(),
                }
                for j in rig.joints
            ],
            "pose": {
                "rotations": rig.pose.rotations.tolist(),
                "root_translation": rig.pose.root_translation.tolist(),
            },
        }
    raise TypeError(f"not a rig object: {type(rig).__name__}")


def rig_from_record(record):
    """Rebuild a rig object from its tagged dict."""
    try:
        kind = record["type"]
    except (TypeError, KeyError):
        raise ValueError("rig record must be a dict with a 'type' tag") from None
    if kind == "handles":
        return HandleSet(record["vertex_ids"], record["targets"])
    if kind == "cage":
        mesh = TriangleMesh(record["positions"], record["triangles"])
        return Cage(mesh)
    if kind == "skeleton":
        joints = [
            Joint(j["name"], j["parent"], np.asarray(j["local_rest"]).reshape(4, 4))
            for j in record["joints"]
        ]
        pose = None
        if "pose" in record:
            pose = Pose(
                record["pose"]["rotations"],
                record["pose"].get("root_translation"),
            )
        return Skeleton(joints, pose)
    raise ValueError(f"unknown rig type {kind!r}")
