"""Planar simplicial meshes with boundary markers and macro-cell structure."""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

# boundary markers used by the built-in generators
LEFT, RIGHT, BOTTOM, TOP, HOLE = 1, 2, 3, 4, 5


def signed_areas(vertices: np.ndarray, cells: np.ndarray) -> np.ndarray:
    p0, p1, p2 = (vertices[cells[:, i]] for i in range(3))
    return 0.5 * ((p1[:, 0] - p0[:, 0]) * (p2[:, 1] - p0[:, 1])
                  - (p1[:, 1] - p0[:, 1]) * (p2[:, 0] - p0[:, 0]))


@dataclass(eq=False)
class Triangulation:
    """Triangle mesh.

    Cells are stored positively oriented; orientation is fixed once here and
    never re-checked per query. ``macro_parent`` maps each cell to the macro
    cell it was produced from by barycentric refinement (identity otherwise).
    """

    vertices: np.ndarray
    cells: np.ndarray
    boundary_facets: np.ndarray
    boundary_markers: np.ndarray
    macro_parent: np.ndarray | None = None
    _meta: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self.vertices = np.ascontiguousarray(self.vertices, dtype=float).reshape(-1, 2)
        self.cells = np.array(self.cells, dtype=np.int64).reshape(-1, 3)
        self.boundary_facets = np.array(self.boundary_facets, dtype=np.int64).reshape(-1, 2)
        self.boundary_markers = np.array(self.boundary_markers, dtype=np.int64).reshape(-1)
        if len(self.boundary_markers) != len(self.boundary_facets):
            raise ValueError("one marker per boundary facet required")
        area = signed_areas(self.vertices, self.cells)
        scale = np.ptp(self.vertices, axis=0).max() ** 2 if len(self.vertices) else 1.0
        if np.any(np.abs(area) <= 1e-14 * scale):
            raise ValueError("degenerate cell with zero area")
        flip = area < 0
        if flip.any():
            self.cells[flip] = self.cells[flip][:, [0, 2, 1]]
        if self.macro_parent is None:
            self.macro_parent = np.arange(len(self.cells), dtype=np.int64)
        else:
            self.macro_parent = np.asarray(self.macro_parent, dtype=np.int64)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_cells(self) -> int:
        return len(self.cells)

    @cached_property
    def areas(self) -> np.ndarray:
        return signed_areas(self.vertices, self.cells)

    @property
    def area(self) -> float:
        return float(self.areas.sum())

    @cached_property
    def centroids(self) -> np.ndarray:
        return self.vertices[self.cells].mean(axis=1)

    @cached_property
    def _edge_data(self):
        # local edge j joins local vertices (j, j+1 mod 3)
        loc = np.array([[0, 1], [1, 2], [2, 0]])
        pairs = self.cells[:, loc].reshape(-1, 2)
        lo, hi = pairs.min(axis=1), pairs.max(axis=1)
        key = lo * self.n_vertices + hi
        uniq, inv = np.unique(key, return_inverse=True)
        edges = np.stack([uniq // self.n_vertices, uniq % self.n_vertices], axis=1)
        cell_edges = inv.reshape(-1, 3)
        ec = np.full((len(edges), 2), -1, dtype=np.int64)
        owner = np.repeat(np.arange(self.n_cells), 3)
        order = np.argsort(inv, kind="stable")
        sorted_e = inv[order]
        first = np.ones(len(order), dtype=bool)
        first[1:] = sorted_e[1:] != sorted_e[:-1]
        ec[sorted_e[first], 0] = owner[order[first]]
        second = ~first
        if np.any(np.bincount(sorted_e, minlength=len(edges)) > 2):
            raise ValueError("non-manifold edge shared by more than two cells")
        ec[sorted_e[second], 1] = owner[order[second]]
        return edges, cell_edges, ec

    @property
    def edges(self) -> np.ndarray:
        """Unique edges as sorted vertex pairs."""
        return self._edge_data[0]

    @property
    def cell_edges(self) -> np.ndarray:
        return self._edge_data[1]

    @property
    def edge_cells(self) -> np.ndarray:
        """Adjacent cells per edge, second entry -1 on the boundary."""
        return self._edge_data[2]

    @cached_property
    def interior_edges(self) -> np.ndarray:
        return np.flatnonzero(self.edge_cells[:, 1] >= 0)

    def edge_index(self, pairs: np.ndarray) -> np.ndarray:
        pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
        key = pairs.min(axis=1) * self.n_vertices + pairs.max(axis=1)
        ekey = self.edges[:, 0] * self.n_vertices + self.edges[:, 1]
        idx = np.searchsorted(ekey, key)
        idx = np.minimum(idx, len(ekey) - 1)
        if np.any(ekey[idx] != key):
            raise KeyError("vertex pair is not a mesh edge")
        return idx

    @cached_property
    def boundary_edges(self) -> np.ndarray:
        return self.edge_index(self.boundary_facets)

    @property
    def n_macro(self) -> int:
        return int(self.macro_parent.max()) + 1 if self.n_cells else 0

    def is_macro_refined(self) -> bool:
        return not np.array_equal(self.macro_parent, np.arange(self.n_cells))

    def markers(self) -> list[int]:
        return sorted(set(self.boundary_markers.tolist()))

    def check(self) -> None:
        """Raise ``ValueError`` if a structural invariant is violated."""
        if np.any(self.areas <= 0):
            raise ValueError("cell with non-positive area")
        ec = self.edge_cells
        on_boundary = ec[:, 1] < 0
        be = self.boundary_edges
        if len(np.unique(be)) != len(be):
            raise ValueError("duplicate boundary facet")
        if not np.array_equal(np.sort(be), np.flatnonzero(on_boundary)):
            raise ValueError("boundary facets do not match single-cell edges")
        if self.is_macro_refined():
            counts = np.bincount(self.macro_parent)
            if np.any(counts != 3):
                raise ValueError("macro cell without exactly three children")

    def bounding_box(self) -> tuple[np.ndarray, np.ndarray]:
        return self.vertices.min(axis=0), self.vertices.max(axis=0)


def classify_boundary(vertices: np.ndarray, facets: np.ndarray, box, tol=1e-12) -> np.ndarray:
    """Marker per facet from its midpoint: box sides 1-4, anything else 5."""
    (x0, y0), (x1, y1) = box
    mid = vertices[facets].mean(axis=1)
    scale = max(x1 - x0, y1 - y0)
    markers = np.full(len(facets), HOLE, dtype=np.int64)
    markers[np.abs(mid[:, 1] - y1) < tol * scale] = TOP
    markers[np.abs(mid[:, 1] - y0) < tol * scale] = BOTTOM
    markers[np.abs(mid[:, 0] - x1) < tol * scale] = RIGHT
    markers[np.abs(mid[:, 0] - x0) < tol * scale] = LEFT
    return markers


def boundary_from_cells(vertices: np.ndarray, cells: np.ndarray) -> np.ndarray:
    """Boundary facets (edges with one cell), oriented along the cell."""
    loc = np.array([[0, 1], [1, 2], [2, 0]])
    pairs = cells[:, loc].reshape(-1, 2)
    nv = len(vertices)
    key = pairs.min(axis=1) * nv + pairs.max(axis=1)
    uniq, inv, cnt = np.unique(key, return_inverse=True, return_counts=True)
    single = cnt[inv] == 1
    return pairs[single]
