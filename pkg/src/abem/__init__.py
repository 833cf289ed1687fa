"""Adaptive 2D boundary element solver with two-level error indicators."""

from .geometry import Geometry, slit_geometry, square_geometry
from .mesh import (
    Mesh,
    MeshStats,
    dump_mesh,
    is_refinement_of,
    make_initial_mesh,
    mesh_stats,
    overlay,
    refine,
    uniform_refine,
)

__version__ = "0.1.0"

__all__ = [
    "Geometry",
    "Mesh",
    "MeshStats",
    "dump_mesh",
    "is_refinement_of",
    "make_initial_mesh",
    "mesh_stats",
    "overlay",
    "refine",
    "slit_geometry",
    "square_geometry",
    "uniform_refine",
    "__version__",
]
