"""Raster image value types: color, metric depth, and coverage mask."""

from __future__ import annotations

import numpy as np


class RasterImage:
    """Immutable 8-bit RGB image.

    Parameters
    ----------
    pixels : (height, width, 3) uint8 array_like
    """

    __slots__ = ("pixels",)

    def __init__(self, pixels):
        pixels = np.asarray(pixels)
        if pixels.ndim != 3 or pixels.shape[2] != 3:
            raise ValueError(f"pixels must have shape (h, w, 3), got {pixels.shape}")
        if pixels.dtype != np.uint8:
            raise ValueError(f"pixels must be uint8, got {pixels.dtype}")
        if pixels.flags.writeable:
            pixels = pixels.copy()
            pixels.setflags(write=False)
        object.__setattr__(self, "pixels", pixels)

    def __setattr__(self, name, value):
        raise AttributeError("RasterImage is immutable")

    @property
    def width(self):
        return self.pixels.shape[1]

    @property
    def height(self):
        return self.pixels.shape[0]

    def __repr__(self):
        return f"RasterImage({self.width}x{self.height})"


class DepthImage:
    """Per-pixel camera-space depth with a validity mask.

    Depth is measured along the camera's view axis in scene units. Valid
    pixels carry strictly positive finite depth; invalid pixels carry
    exactly 0 so the two channels can never disagree silently.
    """

    __slots__ = ("values", "valid")

    def __init__(self, values, valid):
        values = np.asarray(values, dtype=np.float64)
        valid = np.asarray(valid, dtype=bool)
        if values.ndim != 2:
            raise ValueError(f"values must have shape (h, w), got {values.shape}")
        if valid.shape != values.shape:
            raise ValueError(
                f"valid mask shape {valid.shape} does not match values {values.shape}"
            )
        v = values[valid]
        if v.size and not (np.isfinite(v).all() and (v > 0.0).all()):
            raise ValueError("valid pixels must have finite depth > 0")
        if values[~valid].any():
            raise ValueError("invalid pixels must carry depth 0")
        for name, arr in (("values", values), ("valid", valid)):
            if arr.flags.writeable:
                arr = arr.copy()
                arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def __setattr__(self, name, value):
        raise AttributeError("DepthImage is immutable")

    @property
    def width(self):
        return self.values.shape[1]

    @property
    def height(self):
        return self.values.shape[0]

    def __repr__(self):
        return f"DepthImage({self.width}x{self.height}, {int(self.valid.sum())} valid)"


class MaskImage:
    """Immutable per-pixel {0, 1} coverage mask."""

    __slots__ = ("values",)

    def __init__(self, values):
        values = np.asarray(values)
        if values.ndim != 2:
            raise ValueError(f"values must have shape (h, w), got {values.shape}")
        if not (((values == 0) | (values == 1)).all()):
            raise ValueError("mask values must be 0 or 1")
        values = values.astype(np.uint8, copy=True)
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def __setattr__(self, name, value):
        raise AttributeError("MaskImage is immutable")

    @property
    def width(self):
        return self.values.shape[1]

    @property
    def height(self):
        return self.values.shape[0]

    def __repr__(self):
        return f"MaskImage({self.width}x{self.height}, {int(self.values.sum())} on)"
