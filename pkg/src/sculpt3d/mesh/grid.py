"""Axis-aligned scalar sample grids and their binary container format.

The on-disk layout is little-endian: the magic bytes ``SGRD``, three uint32
dimensions (nx, ny, nz), three float64 origin components, three float64
spacing components, then nx*ny*nz float32 samples with x varying fastest.
"""

from __future__ import annotations

import struct

import numpy as np

from ..validation import check_vector3

_MAGIC = b"SGRD"
_HEADER = struct.Struct("<4s3I3d3d")


class ScalarGrid:
    """Scalar field sampled on a regular lattice.

    Parameters
    ----------
    values : (nx, ny, nz) array_like
        Sample values, indexed ``values[ix, iy, iz]``.
    origin : (3,) array_like
        World position of sample (0, 0, 0).
    spacing : (3,) array_like
        Distance between neighbouring samples along each axis; all positive.
    """

    __slots__ = ("values", "origin", "spacing")

    def __init__(self, values, origin, spacing):
        values = np.asarray(values, dtype=np.float64)
        if values.ndim != 3:
            raise ValueError(f"values must be 3-d, got shape {values.shape}")
        if min(values.shape) < 2:
            raise ValueError(f"need at least 2 samples per axis, got {values.shape}")
        origin = check_vector3(origin, name="origin")
        spacing = check_vector3(spacing, name="spacing")
        if np.any(spacing <= 0):
            raise ValueError(f"spacing must be positive, got {spacing}")
        if not np.all(np.isfinite(values)):
            raise ValueError("values contains non-finite entries")
        values.setflags(write=False)
        origin.setflags(write=False)
        spacing.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "origin", origin)
        object.__setattr__(self, "spacing", spacing)

    def __setattr__(self, name, value):
        raise AttributeError("ScalarGrid is immutable")

    @property
    def dims(self):
        return self.values.shape

    def point(self, ix, iy, iz):
        """World position of a sample."""
        return self.origin + self.spacing * np.array([ix, iy, iz], dtype=np.float64)

    def axis_coords(self):
        """Per-axis world coordinate vectors (cx, cy, cz)."""
        return tuple(
            self.origin[a] + self.spacing[a] * np.arange(self.dims[a])
            for a in range(3)
        )

    @classmethod
    def from_function(cls, fn, origin, spacing, dims):
        """Sample ``fn`` (vectorized over an (n, 3) point array) on a lattice."""
        origin = check_vector3(origin, name="origin")
        spacing = check_vector3(spacing, name="spacing")
        nx, ny, nz = (int(d) for d in dims)
        cx = origin[0] + spacing[0] * np.arange(nx)
        cy = origin[1] + spacing[1] * np.arange(ny)
        cz = origin[2] + spacing[2] * np.arange(nz)
        gx, gy, gz = np.meshgrid(cx, cy, cz, indexing="ij")
        pts = np.stack([gx.ravel(), gy.ravel(), gz.ravel()], axis=1)
        vals = np.asarray(fn(pts), dtype=np.float64).reshape(nx, ny, nz)
        return cls(vals, origin, spacing)


def save_grid(grid, path):
    """Write a :class:`ScalarGrid` to its binary container."""
    nx, ny, nz = grid.dims
    header = _HEADER.pack(
        _MAGIC, nx, ny, nz,
        *grid.origin.tolist(), *grid.spacing.tolist(),
    )
    # x varies fastest on disk
    payload = np.ascontiguousarray(
        grid.values.transpose(2, 1, 0), dtype="<f4"
    ).tobytes()
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(payload)


def load_grid(path):
    """Read a :class:`ScalarGrid` from its binary container."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < _HEADER.size:
        raise ValueError(f"{path}: truncated header ({len(blob)} bytes)")
    magic, nx, ny, nz, ox, oy, oz, sx, sy, sz = _HEADER.unpack_from(blob)
    if magic != _MAGIC:
        raise ValueError(f"{path}: bad magic {magic!r}")
    count = nx * ny * nz
    expected = _HEADER.size + 4 * count
    if len(blob) != expected:
        raise ValueError(f"{path}: expected {expected} bytes, got {len(blob)}")
    flat = np.frombuffer(blob, dtype="<f4", offset=_HEADER.size, count=count)
    values = flat.reshape(nz, ny, nx).transpose(2, 1, 0)
    return ScalarGrid(values, (ox, oy, oz), (sx, sy, sz))
