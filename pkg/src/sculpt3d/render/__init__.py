"""Software rasterization: coarse color renders, metric depth maps, masks."""

from .images import (
    composite_over,
    load_color_png,
    load_depth_png,
    load_mask_png,
    save_color_png,
    save_depth_png,
    save_mask_png,
)
from .raster import RenderResult, render_scene
from .types import DepthImage, MaskImage, RasterImage

__all__ = [
    "DepthImage",
    "MaskImage",
    "RasterImage",
    "RenderResult",
    "composite_over",
    "load_color_png",
    "load_depth_png",
    "load_mask_png",
    "render_scene",
    "save_color_png",
    "save_depth_png",
    "save_mask_png",
]
