"""Procedural test meshes: box, icosphere, cylinder, strip."""

from __future__ import annotations

import numpy as np

from .trianglemesh import TriangleMesh


def make_box(size=(1.0, 1.0, 1.0), center=(0.0, 0.0, 0.0)):
    """Axis-aligned box, 8 vertices / 12 outward-facing triangles."""
    sx, sy, sz = (float(s) / 2.0 for s in size)
    c = np.asarray(center, dtype=np.float64)
    corners = np.array(
        [
            (-sx, -sy, -sz), (+sx, -sy, -sz), (+sx, +sy, -sz), (-sx, +sy, -sz),
            (-sx, -sy, +sz), (+sx, -sy, +sz), (+sx, +sy, +sz), (-sx, +sy, +sz),
        ]
    )
    quads = [
        (0, 3, 2, 1),  # z-
        (4, 5, 6, 7),  # z+
        (0, 1, 5, 4),  # y-
        (2, 3, 7, 6),  # y+
        (0, 4, 7, 3),  # x-
        (1, 2, 6, 5),  # x+
    ]
    tris = []
    for a, b, cq, d in quads:
        tris.append((a, b, cq))
        tris.append((a, cq, d))
    return TriangleMesh(corners + c, tris)


def make_icosphere(radius=1.0, subdivisions=2, center=(0.0, 0.0, 0.0)):
    """Icosahedron subdivided ``subdivisions`` times, projected to a sphere."""
    phi = (1.0 + np.sqrt(5.0)) / 2.0
    verts = np.array(
        [
            (-1, phi, 0), (1, phi, 0), (-1, -phi, 0), (1, -phi, 0),
            (0, -1, phi), (0, 1, phi), (0, -1, -phi), (0, 1, -phi),
            (phi, 0, -1), (phi, 0, 1), (-phi, 0, -1), (-phi, 0, 1),
        ],
        dtype=np.float64,
    )
    verts /= np.linalg.norm(verts, axis=1, keepdims=True)
    faces = [
        (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
        (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
        (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
        (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
    ]
    verts = [tuple(v) for v in verts]
    for _ in range(subdivisions):
        midpoint = {}
        new_faces = []

        def mid(i, j):
            key = (min(i, j), max(i, j))
            if key not in midpoint:
                m = np.add(verts[i], verts[j]) / 2.0
                m /= np.linalg.norm(m)
                midpoint[key] = len(verts)
                verts.append(tuple(m))
            return midpoint[key]

        for a, b, c in faces:
            ab, bc, ca = mid(a, b), mid(b, c), mid(c, a)
            new_faces += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        faces = new_faces
    positions = np.asarray(verts) * radius + np.asarray(center, dtype=np.float64)
    return TriangleMesh(positions, faces)


def make_cylinder(radius=0.5, height=2.0, segments=24, rings=1, center=(0.0, 0.0, 0.0)):
    """Closed cylinder along +y with fan-capped ends.

    ``rings`` quad strips stack along the height, so there are ``rings + 1``
    vertex circles (useful for bend tests that need interior cross-sections).
    """
    n = int(segments)
    rings = int(rings)
    if n < 3:
        raise ValueError("segments must be >= 3")
    if rings < 1:
        raise ValueError("rings must be >= 1")
    ang = 2.0 * np.pi * np.arange(n) / n
    circle = np.stack([radius * np.cos(ang), np.zeros(n), radius * np.sin(ang)], axis=1)
    levels = -height / 2.0 + height * np.arange(rings + 1) / rings
    positions = np.concatenate(
        [circle + [0.0, y, 0.0] for y in levels]
        + [[[0.0, -height / 2.0, 0.0]], [[0.0, +height / 2.0, 0.0]]]
    )
    c_lo, c_hi = n * (rings + 1), n * (rings + 1) + 1
    tris = []
    for r in range(rings):
        lo, hi = r * n, (r + 1) * n
        for i in range(n):
            j = (i + 1) % n
            tris.append((lo + i, hi + i, hi + j))
            tris.append((lo + i, hi + j, lo + j))
    top = rings * n
    for i in range(n):
        j = (i + 1) % n
        tris.append((c_lo, i, j))
        tris.append((c_hi, top + j, top + i))
    return TriangleMesh(positions + np.asarray(center, dtype=np.float64), tris)


def make_strip(n_quads=8, width=1.0, quad_size=1.0):
    """Flat strip of quads in the xy plane, split into triangles.

    Vertices run in column-major order: column i holds vertices 2i (y=0) and
    2i+1 (y=width); handy for pinning one end and pulling the other.
    """
    n = int(n_quads)
    if n < 1:
        raise ValueError("n_quads must be >= 1")
    xs = np.repeat(np.arange(n + 1) * quad_size, 2)
    ys = np.tile([0.0, width], n + 1)
    positions = np.stack([xs, ys, np.zeros(2 * (n + 1))], axis=1)
    tris = []
    for i in range(n):
        a, b = 2 * i, 2 * i + 1
        c, d = 2 * i + 2, 2 * i + 3
        tris.append((a, c, b))
        tris.append((b, c, d))
    return TriangleMesh(positions, tris)
