"""Editing sessions: one writer per session, revisioned geometry, rig cache.

A session owns a scene plus the rigs bound to its instances. Every mutation
(upload, rig attach, deform) bumps the revision counter; the two most recent
revisions of the scene stay addressable so a client can still fetch the
frame it is displaying while a newer one lands. Deformation rigs bind once
on attach (the expensive precomputation) and each deform solves from that
bind with absolute driver input — repeating a deform with the same payload
reproduces the same geometry, so an endpoint sequence replays as a batch
edit program bit-for-bit.

Concurrency: ``write_lock`` is the single writer slot. HTTP deforms block on
it; rig attachment refuses with a conflict instead of queueing (a rig swap
under a mid-flight solve would bind to a stale mesh); the stream handler
polls it so pending drag updates keep coalescing while a solve runs.

Geometry wire format (HTTP mesh fetch and stream frames share it)::

    u32le vertex_count | u32le triangle_count
    f32le x y z  * vertex_count
    u32le a b c  * triangle_count
"""

from __future__ import annotations

import struct
import threading
import uuid
from pathlib import Path

import numpy as np

from ..deform import (
    Cage,
    CageDeformer,
    HandleDeformer,
    Pose,
    Skeleton,
    SkeletonDeformer,
    rig_from_record,
)
from ..mesh.obj_io import load_obj
from ..scene.types import Camera, Scene, add_instance, replace_instance_mesh

_HISTORY_DEPTH = 2


class SessionError(Exception):
    """Request-level failure; carries the HTTP status it maps to."""

    def __init__(self, status, message):
        super().__init__(message)
        self.status = status


def encode_mesh_buffers(mesh) -> bytes:
    """Pack a mesh into the little-endian wire layout documented above."""
    header = struct.pack("<II", mesh.n_vertices, mesh.n_triangles)
    positions = np.ascontiguousarray(mesh.positions, dtype="<f4")
    triangles = np.ascontiguousarray(mesh.triangles, dtype="<u4")
    return header + positions.tobytes() + triangles.tobytes()


def decode_mesh_buffers(blob):
    """Unpack a wire buffer into ``(positions <f4 (n,3), triangles <u4 (t,3))``."""
    if len(blob) < 8:
        raise ValueError(f"buffer too short for header: {len(blob)} bytes")
    nv, nt = struct.unpack_from("<II", blob)
    expected = 8 + 12 * nv + 12 * nt
    if len(blob) != expected:
        raise ValueError(
            f"buffer holds {len(blob)} bytes, header implies {expected}")
    positions = np.frombuffer(blob, dtype="<f4", count=3 * nv, offset=8)
    triangles = np.frombuffer(blob, dtype="<u4", count=3 * nt, offset=8 + 12 * nv)
    return positions.reshape(nv, 3), triangles.reshape(nt, 3)


class _BoundRig:
    __slots__ = ("kind", "deformer", "joint_names")

    def __init__(self, kind, deformer, joint_names=None):
        self.kind = kind
        self.deformer = deformer
        self.joint_names = joint_names


class SculptSession:
    """Revisioned scene with bound rigs and a single writer slot."""

    def __init__(self, session_id, artifact_dir):
        self.id = session_id
        self.artifact_dir = Path(artifact_dir)
        self.write_lock = threading.Lock()
        self.scene = Scene(camera=Camera.default())
        self.revision = 0
        self.solves = 0
        self.dropped = 0
        self._rigs = {}
        self._history = {0: self.scene}
        self._uploads = 0

    # -- mutation plumbing (callers hold write_lock) -----------------------

    def _commit(self, scene):
        self.scene = scene
        self.revision += 1
        self._history[self.revision] = scene
        for rev in [r for r in self._history if r <= self.revision - _HISTORY_DEPTH]:
            del self._history[rev]
        return self.revision

    def _instance_mesh(self, name, scene=None):
        scene = scene if scene is not None else self.scene
        if not scene.has_instance(name):
            raise SessionError(
                404, f"no instance named {name!r} (have {scene.instance_names()})")
        return scene.instance(name).mesh

    # -- operations ---------------------------------------------------------

    def add_mesh(self, obj_bytes):
        """Parse an OBJ body into a new instance; returns (name, revision)."""
        uploads = self.artifact_dir / "uploads"
        uploads.mkdir(parents=True, exist_ok=True)
        with self.write_lock:
            self._uploads += 1
            name = "model" if self._uploads == 1 else f"model-{self._uploads}"
            path = uploads / f"{name}.obj"
            path.write_bytes(obj_bytes)
            try:
                mesh = load_obj(path)
            except ValueError as exc:
                raise SessionError(400, f"mesh body does not parse: {exc}") from exc
            revision = self._commit(
                add_instance(self.scene, mesh, np.eye(4), name))
            return name, revision

    def attach_rig(self, instance, record):
        """Bind a rig record to an instance, precomputing its weights."""
        if not self.write_lock.acquire(blocking=False):
            raise SessionError(409, "a solve is in flight; retry after it lands")
        try:
            mesh = self._instance_mesh(instance)
            if not isinstance(record, dict) or "type" not in record:
                raise SessionError(400, "rig record needs a 'type' field")
            kind = record["type"]
            try:
                if kind == "handles":
                    ids = record.get("vertex_ids")
                    deformer = HandleDeformer(ids, warm_start=True).fit(mesh)
                    rig = _BoundRig(kind, deformer)
                elif kind == "skeleton":
                    skeleton = rig_from_record(record)
                    deformer = SkeletonDeformer(skeleton).fit(mesh)
                    rig = _BoundRig(
                        kind, deformer, [j.name for j in skeleton.joints])
                elif kind == "cage":
                    cage = rig_from_record(record)
                    deformer = CageDeformer(cage.cage_mesh).fit(mesh)
                    rig = _BoundRig(kind, deformer)
                else:
                    raise SessionError(400, f"unknown rig type {kind!r}")
            except (ValueError, TypeError) as exc:
                raise SessionError(400, f"rig does not bind: {exc}") from exc
            self._rigs[instance] = rig
            return kind, self._commit(self.scene)
        finally:
            self.write_lock.release()

    def deform(self, instance, payload):
        """Solve one deform request; returns (revision, deformed mesh)."""
        with self.write_lock:
            return self.deform_locked(instance, payload)

    def deform_locked(self, instance, payload):
        """Deform body; caller already holds (and releases) ``write_lock``."""
        self._instance_mesh(instance)
        rig = self._rigs.get(instance)
        if rig is None:
            raise SessionError(
                400, f"instance {instance!r} has no rig attached")
        try:
            mesh = _DISPATCH[rig.kind](rig, payload)
        except SessionError:
            raise
        except (ValueError, TypeError) as exc:
            raise SessionError(400, f"deform failed: {exc}") from exc
        revision = self._commit(
            replace_instance_mesh(self.scene, instance, mesh))
        self.solves += 1
        return revision, mesh

    def mesh_buffers(self, instance, rev=None):
        """Wire-encoded geometry at a revision (default: latest)."""
        if rev is None:
            return encode_mesh_buffers(self._instance_mesh(instance))
        scene = self._history.get(rev)
        if scene is None:
            raise SessionError(
                404,
                f"revision {rev} is stale or unknown "
                f"(serving {sorted(self._history)})")
        return encode_mesh_buffers(self._instance_mesh(instance, scene))

    def info(self):
        return {
            "id": self.id,
            "revision": self.revision,
            "instances": list(self.scene.instance_names()),
            "solves": self.solves,
            "dropped": self.dropped,
        }


def _payload_field(payload, rig_kind, field):
    if not isinstance(payload, dict) or field not in payload:
        raise SessionError(
            400,
            f"rig is {rig_kind!r}; the deform payload needs {field!r}")
    return payload[field]


def _deform_handles(rig, payload):
    targets = _payload_field(payload, "handles", "targets")
    return rig.deformer.transform(np.asarray(targets, dtype=np.float64))


def _deform_skeleton(rig, payload):
    rotations = _payload_field(payload, "skeleton", "rotations")
    if not isinstance(rotations, dict) or not rotations:
        raise SessionError(
            400, "rotations must be a non-empty {joint: quaternion} map")
    pose = Pose.identity(len(rig.joint_names))
    for joint, quat in rotations.items():
        if joint not in rig.joint_names:
            raise SessionError(
                400,
                f"unknown joint {joint!r}; skeleton has {sorted(rig.joint_names)}")
        pose.rotations[rig.joint_names.index(joint)] = np.asarray(
            quat, dtype=np.float64)
    return rig.deformer.transform(pose)


def _deform_cage(rig, payload):
    new_positions = _payload_field(payload, "cage", "cage_positions")
    return rig.deformer.transform(np.asarray(new_positions, dtype=np.float64))


_DISPATCH = {
    "handles": _deform_handles,
    "skeleton": _deform_skeleton,
    "cage": _deform_cage,
}


class SessionStore:
    """Process-local registry of sessions plus their artifact directories."""

    def __init__(self, artifact_root):
        self.artifact_root = Path(artifact_root)
        self._sessions = {}
        self._lock = threading.Lock()

    def create(self) -> SculptSession:
        sid = uuid.uuid4().hex[:12]
        session = SculptSession(sid, self.artifact_root / sid)
        with self._lock:
            self._sessions[sid] = session
        return session

    def get(self, sid) -> SculptSession:
        session = self._sessions.get(sid)
        if session is None:
            raise SessionError(404, f"no session {sid!r}")
        return session
