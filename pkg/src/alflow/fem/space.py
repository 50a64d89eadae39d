"""Function spaces, discrete fields and basic field operations."""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from ..mesh import Triangulation
from .element import REF_EDGES, lagrange_element, triangle_quadrature

SCALAR = "scalar"
VECTOR = "vector2"
SYMTRACELESS = "symtraceless2"
C0 = "C0"
DG = "DG"

_NCOMP = {SCALAR: 1, VECTOR: 2, SYMTRACELESS: 2}


class CellGeometry:
    """Affine maps of all cells: ``x = x0 + J xi``."""

    def __init__(self, mesh: Triangulation):
        v = mesh.vertices[mesh.cells]
        self.x0 = v[:, 0]
        self.J = np.stack([v[:, 1] - v[:, 0], v[:, 2] - v[:, 0]], axis=2)
        self.detJ = self.J[:, 0, 0] * self.J[:, 1, 1] - self.J[:, 0, 1] * self.J[:, 1, 0]
        inv = np.empty_like(self.J)
        inv[:, 0, 0] = self.J[:, 1, 1]
        inv[:, 1, 1] = self.J[:, 0, 0]
        inv[:, 0, 1] = -self.J[:, 0, 1]
        inv[:, 1, 0] = -self.J[:, 1, 0]
        self.invJ = inv / self.detJ[:, None, None]

    def map(self, xi: np.ndarray) -> np.ndarray:
        """Physical points ``(nc, nq, 2)`` of reference points ``(nq, 2)``."""
        return self.x0[:, None, :] + np.einsum("cij,qj->cqi", self.J, xi)

    def physical_grads(self, ref_grads: np.ndarray) -> np.ndarray:
        """``(nq, n, 2)`` reference gradients to ``(nc, nq, n, 2)`` physical ones."""
        return np.einsum("qnk,ckj->cqnj", ref_grads, self.invJ)


class FunctionSpace:
    """Lagrange space on a triangulation.

    Dofs are node-major with components interleaved: dof ``ncomp*node + c``.
    Symmetric traceless tensors store the two components ``(a, b)`` of
    ``[[a, b], [b, -a]]``.
    """

    def __init__(self, mesh: Triangulation, degree: int, shape: str = SCALAR, continuity: str = C0):
        if shape not in _NCOMP:
            raise ValueError(f"unknown value shape {shape!r}")
        if continuity not in (C0, DG):
            raise ValueError(f"unknown continuity {continuity!r}")
        if continuity == C0 and degree < 1:
            raise ValueError("continuous spaces need degree >= 1")
        if continuity == C0 and shape == VECTOR and degree < 2:
            raise ValueError("velocity space needs degree >= 2 for inf-sup stability")
        self.mesh = mesh
        self.degree = degree
        self.shape = shape
        self.continuity = continuity
        self.element = lagrange_element(degree)
        self.ncomp = _NCOMP[shape]
        self.cell_nodes, self.n_nodes = self._number_nodes()
        nloc = self.element.n_nodes
        self.cell_dofs = (self.ncomp * self.cell_nodes[:, :, None]
                          + np.arange(self.ncomp)).reshape(mesh.n_cells, nloc * self.ncomp)
        self.ndofs = self.n_nodes * self.ncomp

    def __repr__(self):
        return f"FunctionSpace(P{self.degree} {self.continuity} {self.shape}, ndofs={self.ndofs})"

    def _number_nodes(self):
        mesh, k = self.mesh, self.degree
        nc = mesh.n_cells
        nloc = self.element.n_nodes
        if self.continuity == DG:
            return np.arange(nc * nloc).reshape(nc, nloc), nc * nloc
        nv, ne = mesh.n_vertices, len(mesh.edges)
        nint = (k - 1) * (k - 2) // 2
        nodes = np.empty((nc, nloc), dtype=np.int64)
        nodes[:, :3] = mesh.cells
        col = 3
        for le, (a, _) in enumerate(REF_EDGES):
            e = mesh.cell_edges[:, le]
            forward = mesh.cells[:, a] == mesh.edges[e, 0]
            for j in range(1, k):
                jj = np.where(forward, j, k - j)
                nodes[:, col] = nv + e * (k - 1) + jj - 1
                col += 1
        base = nv + ne * (k - 1)
        for m in range(nint):
            nodes[:, col] = base + np.arange(nc) * nint + m
            col += 1
        return nodes, base + nc * nint

    @cached_property
    def geometry(self) -> CellGeometry:
        return _geometry(self.mesh)

    @cached_property
    def node_coords(self) -> np.ndarray:
        X = self.geometry.map(self.element.nodes)
        out = np.empty((self.n_nodes, 2))
        out[self.cell_nodes.ravel()] = X.reshape(-1, 2)
        return out

    def dof_component(self) -> np.ndarray:
        return np.tile(np.arange(self.ncomp), self.n_nodes)

    def boundary_nodes(self, markers=None) -> np.ndarray:
        if self.continuity != C0:
            raise ValueError("boundary nodes only exist for continuous spaces")
        mesh, k = self.mesh, self.degree
        sel = np.ones(len(mesh.boundary_facets), dtype=bool)
        if markers is not None:
            sel = np.isin(mesh.boundary_markers, np.atleast_1d(markers))
        facets = mesh.boundary_facets[sel]
        e = mesh.boundary_edges[sel]
        ids = [facets.ravel()]
        for j in range(1, k):
            ids.append(mesh.n_vertices + e * (k - 1) + j - 1)
        return np.unique(np.concatenate(ids))

    def boundary_dofs(self, markers=None, components=None) -> np.ndarray:
        nodes = self.boundary_nodes(markers)
        comps = range(self.ncomp) if components is None else np.atleast_1d(components)
        return np.sort(np.concatenate([self.ncomp * nodes + c for c in comps]))

    @cached_property
    def node_cells(self):
        """CSR-style (offsets, cells) listing the cells containing each node."""
        nloc = self.cell_nodes.shape[1]
        owner = np.repeat(np.arange(self.mesh.n_cells), nloc)
        flat = self.cell_nodes.ravel()
        order = np.argsort(flat, kind="stable")
        offsets = np.searchsorted(flat[order], np.arange(self.n_nodes + 1))
        return offsets, owner[order]


_GEOM_CACHE: dict[int, tuple] = {}


def _geometry(mesh):
    hit = _GEOM_CACHE.get(id(mesh))
    if hit is None or hit[0] is not mesh:
        hit = (mesh, CellGeometry(mesh))
        _GEOM_CACHE[id(mesh)] = hit
    return hit[1]


def make_space(mesh: Triangulation, degree: int, shape: str = SCALAR, continuity: str = C0) -> FunctionSpace:
    return FunctionSpace(mesh, degree, shape, continuity)


@dataclass
class Function:
    space: FunctionSpace
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.space.ndofs,):
            raise ValueError("coefficient vector does not match the space")

    def cell_values(self) -> np.ndarray:
        """Coefficients per cell, ``(nc, nloc, ncomp)``."""
        sp = self.space
        return self.values[sp.cell_dofs].reshape(sp.mesh.n_cells, -1, sp.ncomp)

    def at_points(self, xi: np.ndarray, grad: bool = False):
        """Values ``(nc, nq, ncomp)`` at reference points in every cell (and gradients ``(nc, nq, ncomp, 2)``)."""
        el = self.space.element
        cv = self.cell_values()
        if not grad:
            vals = el.tabulate(xi)
            return np.einsum("qn,cnk->cqk", vals, cv)
        vals, rg = el.tabulate(xi, grad=True)
        pg = self.space.geometry.physical_grads(rg)
        return np.einsum("qn,cnk->cqk", vals, cv), np.einsum("cqnj,cnk->cqkj", pg, cv)


def interpolate(space: FunctionSpace, f) -> np.ndarray:
    """Nodal interpolant of ``f`` (called on an ``(N, 2)`` point array)."""
    X = space.node_coords
    vals = np.asarray(f(X), dtype=float)
    if space.shape == SYMTRACELESS and vals.ndim == 3:
        vals = np.stack([vals[:, 0, 0], vals[:, 0, 1]], axis=1)
    if space.ncomp == 1:
        vals = np.broadcast_to(vals, (len(X),))
    else:
        vals = np.broadcast_to(vals, (len(X), space.ncomp))
    if not np.all(np.isfinite(vals)):
        raise ValueError("interpolated function is not finite at the nodes")
    return np.ascontiguousarray(vals).reshape(-1).copy()


def dev_strain(grad: np.ndarray):
    """Traceless part ``(a, b)`` and trace of ``D = (grad + grad^T)/2``; ``grad[..., i, j] = d_j u_i``."""
    a = 0.5 * (grad[..., 0, 0] - grad[..., 1, 1])
    b = 0.5 * (grad[..., 0, 1] + grad[..., 1, 0])
    return np.stack([a, b], axis=-1), grad[..., 0, 0] + grad[..., 1, 1]


def tensor_inner(s: np.ndarray, t: np.ndarray) -> np.ndarray:
    """``S:T`` for symmetric traceless tensors in component form."""
    return 2.0 * (s[..., 0] * t[..., 0] + s[..., 1] * t[..., 1])


def pointwise_magnitude(space: FunctionSpace, vals: np.ndarray) -> np.ndarray:
    if space.shape == SYMTRACELESS:
        return np.sqrt(tensor_inner(vals, vals))
    return np.sqrt((vals**2).sum(axis=-1))


def norm(func: Function, which: str = "L2", r: float = 2.0, degree: int | None = None) -> float:
    """``L2``, ``Lr`` or ``divL2`` norm of a discrete field."""
    sp = func.space
    k = sp.degree
    if which == "Lr" and r <= 1:
        raise ValueError("Lr norm requires r > 1")
    if which == "divL2" and sp.shape != VECTOR:
        raise ValueError("divergence norm needs a vector field")
    rule = triangle_quadrature(degree if degree is not None else max(2 * k, 2) + (0 if which != "Lr" else 2))
    w = rule.weights[None, :] * np.abs(sp.geometry.detJ)[:, None]
    if which == "divL2":
        _, g = func.at_points(rule.ref_points, grad=True)
        div = g[..., 0, 0] + g[..., 1, 1]
        return float(np.sqrt(np.sum(w * div**2)))
    vals = func.at_points(rule.ref_points)
    mag = pointwise_magnitude(sp, vals)
    if which == "L2":
        return float(np.sqrt(np.sum(w * mag**2)))
    if which == "Lr":
        return float(np.sum(w * mag**r) ** (1.0 / r))
    raise ValueError(f"unknown norm {which!r}")


def eval_field(func: Function, cell: int, xi, derivative: str | None = None):
    """Value at reference point ``xi`` of ``cell``.

    ``derivative='grad'`` also returns the gradient ``g[i, j] = d_j u_i``;
    ``derivative='D'`` returns ``(value, (a, b), trace)`` for the symmetric gradient.
    """
    sp = func.space
    xi = np.atleast_2d(np.asarray(xi, dtype=float))
    vals, rg = sp.element.tabulate(xi, grad=True)
    cv = func.values[sp.cell_dofs[cell]].reshape(-1, sp.ncomp)
    value = vals[0] @ cv
    if sp.ncomp == 1:
        value = value[0]
    if derivative is None:
        return value
    pg = rg[0] @ sp.geometry.invJ[cell]
    grad = cv.T @ pg
    if derivative == "grad":
        return value, grad if sp.ncomp > 1 else grad[0]
    if derivative == "D":
        if sp.shape != VECTOR:
            raise ValueError("symmetric gradient needs a vector field")
        dev, tr = dev_strain(grad)
        return value, dev, float(tr)
    raise ValueError(f"unknown derivative {derivative!r}")
