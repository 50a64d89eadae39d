"""Point location in triangulations."""
from __future__ import annotations

import numpy as np
from scipy.spatial import cKDTree

from .triangulation import Triangulation


def reference_coords(mesh: Triangulation, cells: np.ndarray, pts: np.ndarray) -> np.ndarray:
    """Reference-triangle coordinates of ``pts[i]`` in ``cells[i]``."""
    v = mesh.vertices[mesh.cells[cells]]
    J = np.stack([v[:, 1] - v[:, 0], v[:, 2] - v[:, 0]], axis=2)
    return np.linalg.solve(J, (pts - v[:, 0])[..., None])[..., 0]


def locate_points(mesh: Triangulation, pts: np.ndarray, tol: float = 1e-9):
    """Containing cell and reference coordinates for each point.

    Candidates come from the nearest cell centroids; the candidate with the
    largest minimal barycentric coordinate wins, so points on shared edges
    resolve deterministically. Raises ``ValueError`` for points outside.
    """
    pts = np.asarray(pts, dtype=float).reshape(-1, 2)
    tree = cKDTree(mesh.centroids)
    k = min(24, mesh.n_cells)
    cell = np.full(len(pts), -1, dtype=np.int64)
    best = np.full(len(pts), -np.inf)
    _, cand = tree.query(pts, k=k)
    cand = cand.reshape(len(pts), k)
    for j in range(k):
        lam = _barycentric(mesh, cand[:, j], pts).min(axis=1)
        better = lam > best + 1e-15
        cell[better] = cand[better, j]
        best[better] = lam[better]
    miss = np.flatnonzero(best < -tol)
    for i in miss:
        lam = _barycentric(mesh, np.arange(mesh.n_cells), np.repeat(pts[i:i + 1], mesh.n_cells, 0)).min(axis=1)
        j = int(np.argmax(lam))
        cell[i], best[i] = j, lam[j]
    if np.any(best < -tol):
        bad = int(np.argmin(best))
        raise ValueError(f"point {pts[bad]} lies outside the mesh")
    return cell, reference_coords(mesh, cell, pts)


def _barycentric(mesh, cells, pts):
    xi = reference_coords(mesh, cells, pts)
    return np.column_stack([1.0 - xi.sum(axis=1), xi])
