from .triangulation import Triangulation, LEFT, RIGHT, BOTTOM, TOP, HOLE
from .generate import rect_mesh, channel_with_hole, read_mesh, write_mesh
from .refine import (uniform_refine, barycentric_refine, build_hierarchy, build_macrostar_patches,
                     macro_cell_vertices, MeshHierarchy, MacroStarPatch)
from .supermesh import Supermesh, triangle_intersection, build_supermesh, polygon_area
from .locate import locate_points

__all__ = [
    "Triangulation", "LEFT", "RIGHT", "BOTTOM", "TOP", "HOLE",
    "rect_mesh", "channel_with_hole", "read_mesh", "write_mesh",
    "uniform_refine", "barycentric_refine", "build_hierarchy", "build_macrostar_patches",
    "macro_cell_vertices", "MeshHierarchy", "MacroStarPatch",
    "Supermesh", "triangle_intersection", "build_supermesh", "polygon_area", "locate_points",
]
