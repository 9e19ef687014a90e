"""Batch edit programs: a JSON list of edits applied to loaded assets in order.

A program file (conventionally ``*.sculpt.json``) is a UTF-8 JSON object
``{"units": "m", "edits": [...]}``. Each edit record carries an ``op`` tag
plus its own fields; parsing validates shapes and constraints up front and
reports failures by record index, so a bad program never starts executing.

Execution is a pure fold: it threads an immutable scene through the records,
loading assets from one root directory. The record being edited is the
instance named ``model``; ``pose`` and ``cage`` records find their rig in a
sidecar next to the model's mesh file (``foo.rig.json`` / ``foo.cage.json``
for ``foo.obj``), since a JSON program can only reference rigs by file. Rigs
bind in the asset's own frame, so pose/cage edits belong before rigid
placement edits. Rendering is deterministic, which makes whole programs
referentially transparent: same program, same assets, same bytes out.
"""

from __future__ import annotations

import json
import time
from pathlib import Path
from typing import NamedTuple

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
from ..validation import (
    check_index_array,
    check_matrix4,
    check_points3,
    check_unit_quaternion,
    check_vector3,
)
from .carve import carve
from .edits import rotate_about_centroid, rotate_about_point
from .types import Camera, Scene, add_instance, replace_instance_mesh


class EditProgramError(ValueError):
    """A program failed to parse, resolve, or execute; message names the record."""

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class EditProgram:
    """Parsed, validated edit program: units tag plus normalized records."""

    __slots__ = ("units", "edits")

    def __init__(self, units, edits):
        object.__setattr__(self, "units", units)
        object.__setattr__(self, "edits", tuple(edits))

    def __setattr__(self, name, value):
        raise AttributeError("EditProgram is immutable")

    def __len__(self):
        return len(self.edits)

    def __repr__(self):
        ops = ", ".join(e["op"] for e in self.edits)
        return f"EditProgram(units={self.units!r}, [{ops}])"


class ProgramResult(NamedTuple):
    scene: Scene
    artifacts: tuple


def load_edit_program(path):
    """Read and parse a ``*.sculpt.json`` program file."""
    text = Path(path).read_text(encoding="utf-8")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise EditProgramError(f"{path}: {exc}") from exc
    return parse_edit_program(data)


def parse_edit_program(data):
    """Validate a decoded JSON object into an :class:`EditProgram`."""
    if not isinstance(data, dict):
        raise EditProgramError(f"program must be a JSON object, got {type(data).__name__}")
    unknown = set(data) - {"units", "edits"}
    if unknown:
        raise EditProgramError(f"unexpected top-level field(s) {sorted(unknown)}")
    units = data.get("units", "m")
    if not isinstance(units, str) or not units:
        raise EditProgramError(f"units must be a non-empty string, got {units!r}")
    if "edits" not in data:
        raise EditProgramError("program is missing 'edits'")
    edits = data["edits"]
    if not isinstance(edits, list):
        raise EditProgramError(f"edits must be a list, got {type(edits).__name__}")
    return EditProgram(units, [_parse_record(i, rec) for i, rec in enumerate(edits)])


def run_edit_program(program, asset_root, out_dir=None, on_op=None):
    """Apply a program's edits in order; returns the final scene and artifacts.

    ``asset_root`` anchors every mesh/rig reference (records may not escape
    it); ``out_dir`` anchors render outputs and is only needed when the
    program contains render records.  ``on_op(index, record, seconds)``, if
    given, is called after each edit completes (e.g. to collect timings).
    """
    state = _Executor(asset_root, out_dir)
    for i, rec in enumerate(program.edits):
        began = time.perf_counter()
        try:
            state.apply(rec)
        except EditProgramError:
            raise
        except (ValueError, TypeError, KeyError, OSError) as exc:
            raise EditProgramError(
                f"edit {i} ({rec['op']}): {exc}", index=i) from exc
        if on_op is not None:
            on_op(i, rec, time.perf_counter() - began)
    return ProgramResult(state.scene, tuple(state.artifacts))


# -- parsing -------------------------------------------------------------

def _parse_record(i, rec):
    if not isinstance(rec, dict):
        raise EditProgramError(
            f"edit {i}: record must be a JSON object, got {type(rec).__name__}",
            index=i)
    op = rec.get("op")
    if op is None:
        raise EditProgramError(f"edit {i}: record is missing 'op'", index=i)
    parser = _PARSERS.get(op)
    if parser is None:
        raise EditProgramError(f"edit {i}: unknown op {op!r}", index=i)
    try:
        out = parser(rec)
    except EditProgramError:
        raise
    except (ValueError, TypeError) as exc:
        raise EditProgramError(f"edit {i} ({op}): {exc}", index=i) from exc
    out["op"] = op
    return out


def _fields(rec, required, optional=()):
    op = rec["op"]
    extra = set(rec) - {"op", *required, *optional}
    if extra:
        raise ValueError(f"unexpected field(s) {sorted(extra)}")
    missing = [k for k in required if k not in rec]
    if missing:
        raise ValueError(f"missing field(s) {missing}")


def _asset_ref(value, field):
    if not isinstance(value, str) or not value:
        raise ValueError(f"{field} must be a non-empty path string, got {value!r}")
    return value


def _parse_load(rec):
    _fields(rec, ("mesh",))
    return {"mesh": _asset_ref(rec["mesh"], "mesh")}


def _parse_rotate(rec):
    _fields(rec, ("degrees", "axis"), optional=("center",))
    degrees = float(rec["degrees"])
    if not np.isfinite(degrees):
        raise ValueError(f"degrees must be finite, got {degrees}")
    axis = check_vector3(rec["axis"], name="axis", nonzero=True)
    center = rec.get("center", "centroid")
    if not (isinstance(center, str) and center == "centroid"):
        center = check_vector3(center, name="center")
    return {"degrees": degrees, "axis": axis, "center": center}


def _parse_translate(rec):
    _fields(rec, ("vector",))
    return {"vector": check_vector3(rec["vector"], name="vector")}


def _parse_pose(rec):
    _fields(rec, ("rotations",))
    rotations = rec["rotations"]
    if not isinstance(rotations, dict) or not rotations:
        raise ValueError("rotations must be a non-empty {joint: quaternion} map")
    normalized = {}
    for joint, quat in rotations.items():
        if not isinstance(joint, str):
            raise ValueError(f"joint names must be strings, got {joint!r}")
        normalized[joint] = check_unit_quaternion(quat, name=f"rotation for {joint!r}")
    return {"rotations": normalized}


def _parse_handles(rec):
    _fields(rec, ("ids", "targets"))
    ids = check_index_array(rec["ids"], name="ids")
    targets = check_points3(rec["targets"], name="targets")
    if targets.shape[0] != ids.shape[0]:
        raise ValueError(
            f"{ids.shape[0]} ids but {targets.shape[0]} targets")
    return {"ids": ids, "targets": targets}


def _parse_cage(rec):
    _fields(rec, ("new_positions",))
    return {"new_positions": check_points3(rec["new_positions"], name="new_positions")}


def _parse_carve(rec):
    _fields(rec, ("mold", "resolution"))
    res = rec["resolution"]
    if isinstance(res, bool) or not isinstance(res, int):
        raise ValueError(f"resolution must be an integer, got {res!r}")
    if not 16 <= res <= 512:
        raise ValueError(f"resolution must be in [16, 512], got {res}")
    return {"mold": _asset_ref(rec["mold"], "mold"), "resolution": res}


def _parse_add_instance(rec):
    _fields(rec, ("mesh", "transform"))
    arr = np.asarray(rec["transform"], dtype=np.float64)
    if arr.shape == (16,):
        arr = arr.reshape(4, 4)
    transform = check_matrix4(arr, name="transform", require_invertible=True)
    return {"mesh": _asset_ref(rec["mesh"], "mesh"), "transform": transform}


def _parse_render(rec):
    _fields(rec, ("out",))
    return {"out": _asset_ref(rec["out"], "out")}


_PARSERS = {
    "load": _parse_load,
    "rotate": _parse_rotate,
    "translate": _parse_translate,
    "pose": _parse_pose,
    "handles": _parse_handles,
    "cage": _parse_cage,
    "carve": _parse_carve,
    "add_instance": _parse_add_instance,
    "render": _parse_render,
}


# -- execution -----------------------------------------------------------

class _Executor:
    def __init__(self, asset_root, out_dir):
        self.root = Path(asset_root)
        self.out_dir = Path(out_dir) if out_dir is not None else None
        self.scene = Scene(camera=Camera.default())
        self.model_path = None
        self.added = 0
        self.artifacts = []

    def apply(self, rec):
        getattr(self, "_op_" + rec["op"])(rec)

    def _resolve(self, ref):
        path = (self.root / ref).resolve()
        root = self.root.resolve()
        if not path.is_relative_to(root):
            raise ValueError(f"asset path {ref!r} escapes the asset root")
        if not path.is_file():
            raise ValueError(f"asset {ref!r} not found under {self.root}")
        return path

    def _model(self):
        if not self.scene.has_instance("model"):
            raise ValueError("no model loaded; add a 'load' record first")
        return self.scene.instance("model").mesh

    def _set_model(self, mesh):
        self.scene = replace_instance_mesh(self.scene, "model", mesh)

    def _sidecar(self, suffix, want, kind):
        path = self.model_path.with_suffix(suffix)
        if not path.is_file():
            raise ValueError(
                f"no {kind} rig sidecar {path.name!r} next to {self.model_path.name!r}")
        rig = rig_from_record(json.loads(path.read_text(encoding="utf-8")))
        if not isinstance(rig, want):
            raise ValueError(
                f"rig sidecar {path.name!r} holds a {type(rig).__name__}, "
                f"need a {kind}")
        return rig

    def _op_load(self, rec):
        path = self._resolve(rec["mesh"])
        mesh = load_obj(path)
        if self.scene.has_instance("model"):
            self._set_model(mesh)
        else:
            self.scene = add_instance(self.scene, mesh, np.eye(4), "model")
        self.model_path = path

    def _op_rotate(self, rec):
        mesh = self._model()
        if isinstance(rec["center"], str):
            out = rotate_about_centroid(mesh, rec["axis"], rec["degrees"])
        else:
            out = rotate_about_point(mesh, rec["axis"], rec["degrees"], rec["center"])
        self._set_model(out)

    def _op_translate(self, rec):
        mesh = self._model()
        self._set_model(mesh.with_positions(mesh.positions + rec["vector"]))

    def _op_pose(self, rec):
        mesh = self._model()
        skeleton = self._sidecar(".rig.json", Skeleton, "skeleton")
        names = [j.name for j in skeleton.joints]
        pose = Pose.identity(len(names))
        for joint, quat in rec["rotations"].items():
            if joint not in names:
                raise ValueError(
                    f"unknown joint {joint!r}; skeleton has {sorted(names)}")
            pose.rotations[names.index(joint)] = quat
        self._set_model(SkeletonDeformer(skeleton).fit(mesh).transform(pose))

    def _op_handles(self, rec):
        mesh = self._model()
        out = HandleDeformer(rec["ids"]).fit(mesh).transform(rec["targets"])
        self._set_model(out)

    def _op_cage(self, rec):
        mesh = self._model()
        cage = self._sidecar(".cage.json", Cage, "cage")
        out = CageDeformer(cage.cage_mesh).fit(mesh).transform(rec["new_positions"])
        self._set_model(out)

    def _op_carve(self, rec):
        mesh = self._model()
        mold = load_obj(self._resolve(rec["mold"]))
        self._set_model(carve(mesh, mold, resolution=rec["resolution"]))

    def _op_add_instance(self, rec):
        mesh = load_obj(self._resolve(rec["mesh"]))
        self.added += 1
        self.scene = add_instance(
            self.scene, mesh, rec["transform"], f"instance-{self.added}")

    def _op_render(self, rec):
        from ..render import render_scene, save_color_png, save_depth_png, save_mask_png

        if self.out_dir is None:
            raise ValueError("program has render records but no output directory")
        result = render_scene(self.scene)
        base = self.out_dir / rec["out"]
        base.parent.mkdir(parents=True, exist_ok=True)
        color = base.parent / f"{base.name}.png"
        depth = base.parent / f"{base.name}_depth.png"
        mask = base.parent / f"{base.name}_mask.png"
        save_color_png(result.color, color)
        meta = save_depth_png(result.depth, depth)
        save_mask_png(result.mask, mask)
        self.artifacts += [color, depth, Path(meta), mask]
