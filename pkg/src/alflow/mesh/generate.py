"""Built-in domains and the mesh exchange text format."""
from __future__ import annotations

import numpy as np

from .triangulation import Triangulation, boundary_from_cells, classify_boundary


def _tensor_mesh(xs: np.ndarray, ys: np.ndarray, keep=None) -> Triangulation:
    nx, ny = len(xs) - 1, len(ys) - 1
    X, Y = np.meshgrid(xs, ys, indexing="xy")
    vertices = np.stack([X.ravel(), Y.ravel()], axis=1)
    vid = np.arange((nx + 1) * (ny + 1)).reshape(ny + 1, nx + 1)
    cells = []
    for j in range(ny):
        for i in range(nx):
            if keep is not None and not keep(i, j):
                continue
            v00, v10 = vid[j, i], vid[j, i + 1]
            v01, v11 = vid[j + 1, i], vid[j + 1, i + 1]
            cells.append((v00, v10, v11))
            cells.append((v00, v11, v01))
    cells = np.array(cells, dtype=np.int64)
    used = np.unique(cells)
    remap = np.full(len(vertices), -1, dtype=np.int64)
    remap[used] = np.arange(len(used))
    vertices, cells = vertices[used], remap[cells]
    facets = boundary_from_cells(vertices, cells)
    box = ((xs[0], ys[0]), (xs[-1], ys[-1]))
    markers = classify_boundary(vertices, facets, box)
    order = np.lexsort((facets[:, 1], facets[:, 0], markers))
    return Triangulation(vertices, cells, facets[order], markers[order])


def rect_mesh(nx: int, ny: int, Lx: float = 1.0, Ly: float = 1.0, y0: float = 0.0) -> Triangulation:
    """Structured mesh of (0,Lx) x (y0,y0+Ly); every quad split along one diagonal.

    Markers: left 1, right 2, bottom 3, top 4.
    """
    if nx < 1 or ny < 1:
        raise ValueError("cell counts must be positive")
    xs = np.linspace(0.0, Lx, nx + 1)
    ys = np.linspace(y0, y0 + Ly, ny + 1)
    return _tensor_mesh(xs, ys)


def channel_with_hole(resolution: float = 1) -> Triangulation:
    """(0,2) x (0,0.41) minus the square obstacle (0.3,0.4) x (0.15,0.25).

    Grid spacing is about 0.1/resolution with grid lines through the
    obstacle corners. Obstacle boundary has marker 5.
    """
    if not resolution >= 1:
        raise ValueError("resolution must be at least 1")
    h = 0.1 / resolution

    def axis(breaks):
        pts = [breaks[0]]
        for a, b in zip(breaks[:-1], breaks[1:]):
            n = max(1, int(round((b - a) / h)))
            pts.extend(np.linspace(a, b, n + 1)[1:])
        return np.array(pts)

    xs = axis([0.0, 0.3, 0.4, 2.0])
    ys = axis([0.0, 0.15, 0.25, 0.41])
    xc = 0.5 * (xs[:-1] + xs[1:])
    yc = 0.5 * (ys[:-1] + ys[1:])

    def keep(i, j):
        return not (0.3 < xc[i] < 0.4 and 0.15 < yc[j] < 0.25)

    return _tensor_mesh(xs, ys, keep)


def write_mesh(mesh: Triangulation, path) -> None:
    with open(path, "w") as fh:
        fh.write(f"{mesh.n_vertices} {mesh.n_cells} {len(mesh.boundary_facets)}\n")
        for x, y in mesh.vertices:
            fh.write(f"{float(x)!r} {float(y)!r}\n")
        for (a, b, c), m in zip(mesh.cells, mesh.macro_parent):
            fh.write(f"{a} {b} {c} {m}\n")
        for (a, b), m in zip(mesh.boundary_facets, mesh.boundary_markers):
            fh.write(f"{a} {b} {m}\n")


def read_mesh(path) -> Triangulation:
    """Read the plain-text exchange format.

    Header ``nv nc nf``, then ``nv`` lines ``x y``, ``nc`` lines
    ``v0 v1 v2 macro_parent`` and ``nf`` lines ``v0 v1 marker``.
    """
    with open(path) as fh:
        rows = [ln.split() for ln in fh if ln.strip()]
    try:
        nv, nc, nf = (int(t) for t in rows[0])
        verts = np.array(rows[1:1 + nv], dtype=float)
        cells = np.array(rows[1 + nv:1 + nv + nc], dtype=np.int64)
        facets = np.array(rows[1 + nv + nc:1 + nv + nc + nf], dtype=np.int64).reshape(-1, 3)
    except (ValueError, IndexError) as exc:
        raise ValueError(f"malformed mesh file {path}: {exc}") from exc
    if verts.shape != (nv, 2) or cells.shape != (nc, 4) or len(facets) != nf:
        raise ValueError(f"malformed mesh file {path}: section sizes do not match header")
    return Triangulation(verts, cells[:, :3], facets[:, :2], facets[:, 2], macro_parent=cells[:, 3])
