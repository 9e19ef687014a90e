"""Mesh containers, I/O, differential operators and isosurface extraction."""

from .grid import ScalarGrid, load_grid, save_grid
from .isosurface import extract_isosurface
from .laplacian import CotanLaplacian, build_cotan_laplacian
from .obj_io import ObjIndexError, ObjParseError, load_obj, save_obj
from .primitives import make_box, make_cylinder, make_icosphere, make_strip
from .trianglemesh import TriangleMesh, VolumeResult, mesh_volume, signed_volume

__all__ = [
    "CotanLaplacian",
    "ObjIndexError",
    "ObjParseError",
    "ScalarGrid",
    "TriangleMesh",
    "VolumeResult",
    "build_cotan_laplacian",
    "extract_isosurface",
    "load_grid",
    "load_obj",
    "make_box",
    "make_cylinder",
    "make_icosphere",
    "make_strip",
    "mesh_volume",
    "save_grid",
    "save_obj",
    "signed_volume",
]
