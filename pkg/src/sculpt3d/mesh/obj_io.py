"""Wavefront OBJ reader/writer.

Only ``v``, ``vt`` and ``f`` records are interpreted; everything else is
skipped. Faces with more than three corners are fan-triangulated around their
first corner. Per-corner texture indices are resolved to per-vertex uvs: the
first (vertex, vt) pair seen claims the vertex's original slot, and corners
that reuse the vertex with a different vt get a duplicated vertex appended in
first-encounter order, so loading is deterministic.

Vertex colors are round-tripped through the common 6-number ``v x y z r g b``
extension when present.
"""

from __future__ import annotations

import numpy as np

from .trianglemesh import TriangleMesh


class ObjParseError(ValueError):
    """Malformed OBJ content; carries the 1-based source line number."""

    def __init__(self, line_number, message):
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number


class ObjIndexError(ObjParseError):
    """A face references a vertex or vt record that does not exist."""


def load_obj(path):
    """Parse an OBJ file into a :class:`TriangleMesh`."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.readlines()

    positions = []
    colors = []
    texcoords = []
    corners = []  # per face: list of (v_index, vt_index_or_None), already 0-based
    face_lines = []

    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        tag = parts[0]
        if tag == "v":
            if len(parts) not in (4, 7):
                raise ObjParseError(lineno, f"'v' needs 3 (or 6) numbers, got {len(parts) - 1}")
            try:
                nums = [float(p) for p in parts[1:]]
            except ValueError:
                raise ObjParseError(lineno, f"bad number in {line!r}") from None
            positions.append(nums[:3])
            colors.append(nums[3:6] if len(nums) == 6 else None)
        elif tag == "vt":
            if len(parts) < 3:
                raise ObjParseError(lineno, "'vt' needs at least 2 numbers")
            try:
                texcoords.append((float(parts[1]), float(parts[2])))
            except ValueError:
                raise ObjParseError(lineno, f"bad number in {line!r}") from None
        elif tag == "f":
            if len(parts) < 4:
                raise ObjParseError(lineno, "'f' needs at least 3 corners")
            face = []
            for token in parts[1:]:
                fields = token.split("/")
                try:
                    vi = int(fields[0])
                    ti = int(fields[1]) if len(fields) > 1 and fields[1] else None
                except ValueError:
                    raise ObjParseError(lineno, f"bad face corner {token!r}") from None
                vi = _resolve(vi, len(positions))
                if vi is None:
                    raise ObjIndexError(lineno, f"vertex index {fields[0]} out of range")
                if ti is not None:
                    ti = _resolve(ti, len(texcoords))
                    if ti is None:
                        raise ObjIndexError(lineno, f"vt index {fields[1]} out of range")
                face.append((vi, ti))
            corners.append(face)
            face_lines.append(lineno)

    if not positions:
        raise ObjParseError(len(lines) or 1, "no vertices in file")

    # Resolve (vertex, vt) pairs: first pair keeps the original slot, later
    # distinct pairs append duplicated vertices.
    n_base = len(positions)
    slot_of = {}  # (vi, ti) -> final vertex index
    base_claimed = [False] * n_base
    extra_sources = []  # (vi, ti) for appended vertices, in encounter order
    triangles = []
    any_uv = any(ti is not None for face in corners for (_, ti) in face)

    def corner_slot(vi, ti):
        key = (vi, ti)
        slot = slot_of.get(key)
        if slot is not None:
            return slot
        if not base_claimed[vi]:
            base_claimed[vi] = True
            slot_of[key] = vi
            return vi
        slot = n_base + len(extra_sources)
        extra_sources.append(key)
        slot_of[key] = slot
        return slot

    for face in corners:
        idx = [corner_slot(vi, ti) for vi, ti in face]
        for k in range(1, len(idx) - 1):
            triangles.append((idx[0], idx[k], idx[k + 1]))

    out_positions = list(positions)
    out_colors = list(colors)
    uv_of_slot = {}
    for (vi, ti), slot in slot_of.items():
        uv_of_slot[slot] = texcoords[ti] if ti is not None else (0.0, 0.0)
    for vi, ti in extra_sources:
        out_positions.append(positions[vi])
        out_colors.append(colors[vi])

    uvs = None
    if any_uv:
        uvs = np.zeros((len(out_positions), 2))
        for slot, uv in uv_of_slot.items():
            uvs[slot] = uv

    color_arr = None
    if any(c is not None for c in out_colors):
        color_arr = np.array([c if c is not None else (0.0, 0.0, 0.0) for c in out_colors])

    return TriangleMesh(out_positions, triangles, uvs=uvs, colors=color_arr)


def _resolve(index, count):
    """OBJ 1-based (or negative relative) index -> 0-based, or None if invalid."""
    if index > 0:
        i = index - 1
    elif index < 0:
        i = count + index
    else:
        return None
    return i if 0 <= i < count else None


def save_obj(mesh, path):
    """Write a mesh as OBJ with 9-significant-digit coordinates."""
    if mesh.n_vertices == 0 or mesh.n_triangles == 0:
        raise ValueError("refusing to save an empty mesh")
    lines = []
    for i in range(mesh.n_vertices):
        x, y, z = mesh.positions[i]
        if mesh.colors is not None:
            r, g, b = mesh.colors[i]
            lines.append(f"v {x:.9g} {y:.9g} {z:.9g} {r:.9g} {g:.9g} {b:.9g}")
        else:
            lines.append(f"v {x:.9g} {y:.9g} {z:.9g}")
    if mesh.uvs is not None:
        for u, v in mesh.uvs:
            lines.append(f"vt {u:.9g} {v:.9g}")
        for a, b, c in mesh.triangles + 1:
            lines.append(f"f {a}/{a} {b}/{b} {c}/{c}")
    else:
        for a, b, c in mesh.triangles + 1:
            lines.append(f"f {a} {b} {c}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
