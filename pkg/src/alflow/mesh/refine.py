"""Uniform and barycentric refinement, the multigrid hierarchy and macrostar patches."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .triangulation import Triangulation


def uniform_refine(mesh: Triangulation) -> Triangulation:
    """Split every cell into four through its edge midpoints.

    New vertices are appended after the old ones (edge ``e`` gives vertex
    ``nv + e``); the children of cell ``c`` are cells ``4c .. 4c+3``.
    """
    nv = mesh.n_vertices
    mids = mesh.vertices[mesh.edges].mean(axis=1)
    vertices = np.vstack([mesh.vertices, mids])
    a, b, c = mesh.cells.T
    m01, m12, m20 = (nv + mesh.cell_edges[:, j] for j in range(3))
    children = np.stack([
        np.stack([a, m01, m20], axis=1),
        np.stack([m01, b, m12], axis=1),
        np.stack([m20, m12, c], axis=1),
        np.stack([m01, m12, m20], axis=1),
    ], axis=1).reshape(-1, 3)
    m = nv + mesh.boundary_edges
    f0, f1 = mesh.boundary_facets.T
    facets = np.stack([np.stack([f0, m], axis=1), np.stack([m, f1], axis=1)], axis=1).reshape(-1, 2)
    markers = np.repeat(mesh.boundary_markers, 2)
    return Triangulation(vertices, children, facets, markers)


def barycentric_refine(mesh: Triangulation) -> Triangulation:
    """Split every cell into three through its barycenter.

    The barycenter of cell ``c`` becomes vertex ``nv + c``; its children are
    ``3c .. 3c+2`` and ``macro_parent`` records ``c``.
    """
    nv = mesh.n_vertices
    vertices = np.vstack([mesh.vertices, mesh.centroids])
    a, b, c = mesh.cells.T
    g = nv + np.arange(mesh.n_cells)
    children = np.stack([
        np.stack([a, b, g], axis=1),
        np.stack([b, c, g], axis=1),
        np.stack([c, a, g], axis=1),
    ], axis=1).reshape(-1, 3)
    parent = np.repeat(np.arange(mesh.n_cells), 3)
    return Triangulation(vertices, children, mesh.boundary_facets.copy(),
                         mesh.boundary_markers.copy(), macro_parent=parent)


@dataclass
class MacroStarPatch:
    seed_vertex: int
    cells: np.ndarray
    interior_dof_mask: np.ndarray | None = None


def macro_cell_vertices(level: Triangulation) -> np.ndarray:
    """Vertices of each macro cell (the three children minus their common barycenter)."""
    if not level.is_macro_refined():
        return level.cells.copy()
    order = np.argsort(level.macro_parent, kind="stable")
    ch = level.cells[order].reshape(level.n_macro, 9)
    ch.sort(axis=1)
    # the barycenter is the only vertex shared by all three children
    out = np.empty((level.n_macro, 3), dtype=np.int64)
    for i, row in enumerate(ch):
        vals, cnt = np.unique(row, return_counts=True)
        out[i] = vals[cnt < 3]
    return out


def build_macrostar_patches(level: Triangulation) -> list[MacroStarPatch]:
    """One patch per macro-mesh vertex: all children of the incident macro cells."""
    macro_verts = macro_cell_vertices(level)
    seed = macro_verts.ravel()
    mc = np.repeat(np.arange(len(macro_verts)), 3)
    order = np.argsort(seed, kind="stable")
    seed, mc = seed[order], mc[order]
    children = np.argsort(level.macro_parent, kind="stable").reshape(len(macro_verts), -1)
    seeds, starts = np.unique(seed, return_index=True)
    stops = np.append(starts[1:], len(seed))
    return [MacroStarPatch(int(v), np.sort(children[mc[a:b]].ravel()))
            for v, a, b in zip(seeds, starts, stops)]


@dataclass
class MeshHierarchy:
    """Uniform macro hierarchy, barycentrically refined once per level."""

    levels: list[Triangulation]
    macro_levels: list[Triangulation]
    child_map: list[np.ndarray]
    supermeshes: list = field(default_factory=list)

    def __len__(self):
        return len(self.levels)

    def coarse_macro_of_fine_cells(self, level: int) -> np.ndarray:
        """Coarse macro cell (on ``level - 1``) containing each cell of ``level``."""
        return self.levels[level].macro_parent // 4


def build_hierarchy(coarse_macro: Triangulation, n_levels: int, supermesh: bool = True) -> MeshHierarchy:
    if n_levels < 1:
        raise ValueError("need at least one level")
    from .supermesh import build_supermesh

    macros = [coarse_macro]
    for _ in range(n_levels - 1):
        macros.append(uniform_refine(macros[-1]))
    levels = [barycentric_refine(m) for m in macros]
    child_map = [4 * np.arange(m.n_cells)[:, None] + np.arange(4) for m in macros[:-1]]
    sms = [build_supermesh(levels[i], levels[i + 1]) for i in range(n_levels - 1)] if supermesh else []
    return MeshHierarchy(levels, macros, child_map, sms)
