"""PNG interchange for render outputs and hard compositing.

Depth travels as a 16-bit grayscale PNG plus a ``<path>.meta`` text sidecar
holding the valid-depth min and max (newline-separated, 9 significant
digits). Valid pixels map linearly onto codes [1, 65535] with the NEAREST
depth at 65535 (near-bright); invalid pixels are code 0. Decoding therefore
recovers depth to within (dmax - dmin) / 65534.
"""

from __future__ import annotations

import os

import numpy as np
from PIL import Image

from .types import DepthImage, MaskImage, RasterImage

_CODE_MAX = 65535
_CODE_SPAN = 65534  # codes 1..65535 for valid pixels


def save_color_png(image: RasterImage, path) -> str:
    path = os.fspath(path)
    Image.fromarray(np.asarray(image.pixels), mode="RGB").save(path, format="PNG")
    return path


def load_color_png(path) -> RasterImage:
    with Image.open(os.fspath(path)) as img:
        return RasterImage(np.asarray(img.convert("RGB")))


def save_depth_png(depth: DepthImage, path) -> str:
    """Write the 16-bit near-bright depth PNG; returns the sidecar path."""
    if not depth.valid.any():
        raise ValueError("depth image has no valid pixels")
    path = os.fspath(path)
    v = depth.values[depth.valid]
    dmin, dmax = float(v.min()), float(v.max())
    codes = np.zeros(depth.values.shape, dtype=np.uint16)
    if dmax > dmin:
        frac = (dmax - depth.values[depth.valid]) / (dmax - dmin)
        codes[depth.valid] = 1 + np.rint(frac * _CODE_SPAN).astype(np.uint16)
    else:
        codes[depth.valid] = _CODE_MAX
    Image.fromarray(codes).save(path, format="PNG")  # uint16 -> 16-bit gray
    meta = path + ".meta"
    with open(meta, "w") as fh:
        fh.write(f"{dmin:.9g}\n{dmax:.9g}\n")
    return meta


def load_depth_png(path) -> DepthImage:
    path = os.fspath(path)
    with Image.open(path) as img:
        codes = np.asarray(img, dtype=np.int64)
    with open(path + ".meta") as fh:
        dmin, dmax = (float(line) for line in fh.read().split())
    valid = codes > 0
    values = np.where(valid, dmax - (codes - 1) / _CODE_SPAN * (dmax - dmin), 0.0)
    return DepthImage(values, valid)


def save_mask_png(mask: MaskImage, path) -> str:
    path = os.fspath(path)
    Image.fromarray(mask.values * np.uint8(255), mode="L").save(path, format="PNG")
    return path


def load_mask_png(path) -> MaskImage:
    with Image.open(os.fspath(path)) as img:
        gray = np.asarray(img.convert("L"))
    return MaskImage((gray > 127).astype(np.uint8))


def composite_over(
    foreground: RasterImage, mask: MaskImage, background: RasterImage
) -> RasterImage:
    """Hard composite: mask-on pixels from the foreground, rest background."""
    if not (
        foreground.pixels.shape == background.pixels.shape
        and mask.values.shape == foreground.pixels.shape[:2]
    ):
        raise ValueError(
            "dimension mismatch: foreground "
            f"{foreground.pixels.shape[:2]}, mask {mask.values.shape}, "
            f"background {background.pixels.shape[:2]}"
        )
    out = np.where(mask.values[..., None] == 1, foreground.pixels, background.pixels)
    return RasterImage(out)
