"""Isosurface extraction from scalar grids (256-case cubical lookup).

Cell corners follow the classic ordering (0..3 counterclockwise around the
lower z face starting at the cell origin, 4..7 the same on the upper face);
crossing vertices are welded through canonical grid-edge keys so the output
surface is watertight wherever the field is clean. Triangles are oriented so
normals point toward higher field values — outward for inside-negative
distance fields.
"""

from __future__ import annotations

import numpy as np

from ._mc_tables import EDGE_TABLE, TRI_TABLE
from .trianglemesh import TriangleMesh

# (dx, dy, dz, axis) of the canonical grid edge backing each cube edge.
_EDGE_ANCHOR = np.array(
    [
        (0, 0, 0, 0),  # 0: c0-c1
        (1, 0, 0, 1),  # 1: c1-c2
        (0, 1, 0, 0),  # 2: c3-c2 direction, anchored at c3
        (0, 0, 0, 1),  # 3: c0-c3
        (0, 0, 1, 0),  # 4
        (1, 0, 1, 1),  # 5
        (0, 1, 1, 0),  # 6
        (0, 0, 1, 1),  # 7
        (0, 0, 0, 2),  # 8: c0-c4
        (1, 0, 0, 2),  # 9
        (1, 1, 0, 2),  # 10
        (0, 1, 0, 2),  # 11
    ],
    dtype=np.int64,
)

# Corner index -> (dx, dy, dz) within the cell.
_CORNER = np.array(
    [(0, 0, 0), (1, 0, 0), (1, 1, 0), (0, 1, 0),
     (0, 0, 1), (1, 0, 1), (1, 1, 1), (0, 1, 1)],
    dtype=np.int64,
)


def extract_isosurface(grid, iso):
    """Extract the level set ``values == iso`` as a :class:`TriangleMesh`.

    Vertices lie on grid edges by linear interpolation. The field is treated
    as inside-negative: samples strictly below ``iso`` are solid.

    Raises
    ------
    ValueError
        If ``iso`` lies outside the sampled value range or produces no
        crossings (empty surface).
    """
    vals = grid.values
    vmin, vmax = float(vals.min()), float(vals.max())
    if not (vmin <= iso <= vmax):
        raise ValueError(
            f"isovalue {iso} outside sampled range [{vmin}, {vmax}]: empty surface"
        )
    nx, ny, nz = grid.dims

    inside = vals < iso
    case = np.zeros((nx - 1, ny - 1, nz - 1), dtype=np.uint16)
    for bit, (dx, dy, dz) in enumerate(_CORNER):
        corner = inside[dx : dx + nx - 1, dy : dy + ny - 1, dz : dz + nz - 1]
        case |= corner.astype(np.uint16) << bit

    edge_table = np.asarray(EDGE_TABLE, dtype=np.uint16)
    active = np.nonzero(edge_table[case.ravel()] != 0)[0]
    if active.size == 0:
        raise ValueError(f"isovalue {iso} crosses no cell: empty surface")
    cell_case = case.ravel()[active]
    cx, cy, cz = np.unravel_index(active, case.shape)

    # Emit per-triangle canonical edge keys, grouped by table case.
    key_chunks = []
    for c in np.unique(cell_case):
        row = TRI_TABLE[c]
        n_entries = row.index(-1) if -1 in row else len(row)
        if n_entries == 0:
            continue
        edges = np.array(row[:n_entries], dtype=np.int64)
        sel = cell_case == c
        anchor = _EDGE_ANCHOR[edges]  # (n_entries, 4)
        ex = cx[sel][:, None] + anchor[:, 0]
        ey = cy[sel][:, None] + anchor[:, 1]
        ez = cz[sel][:, None] + anchor[:, 2]
        keys = ((ex * ny + ey) * nz + ez) * 3 + anchor[:, 3]
        key_chunks.append(keys.reshape(-1))
    tri_keys = np.concatenate(key_chunks)

    unique_keys, triangles = np.unique(tri_keys, return_inverse=True)
    # The case table winds faces toward the solid side; reverse so normals
    # point toward higher values (outward for inside-negative fields).
    triangles = triangles.reshape(-1, 3)[:, ::-1]

    # Decode keys back to (lattice point, axis) and interpolate crossings.
    axis = unique_keys % 3
    rest = unique_keys // 3
    ez = rest % nz
    rest //= nz
    ey = rest % ny
    ex = rest // ny
    base = np.stack([ex, ey, ez], axis=1)
    step = np.eye(3, dtype=np.int64)[axis]
    other = base + step
    v1 = vals[base[:, 0], base[:, 1], base[:, 2]]
    v2 = vals[other[:, 0], other[:, 1], other[:, 2]]
    t = (iso - v1) / (v2 - v1)
    lattice = base + t[:, None] * step
    positions = grid.origin + grid.spacing * lattice
    return TriangleMesh(positions, triangles)
