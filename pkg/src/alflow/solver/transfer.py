"""Grid transfers between non-nested barycentric levels.

Velocity: nodal interpolation corrected by local solves on coarse macro
cells. Stress: L2 projection through a supermesh of the two levels.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from ..fem import lagrange_element, triangle_quadrature
from ..mesh import locate_points


def _interleave(A: sp.spmatrix) -> sp.csr_matrix:
    """Scalar operator to the two-component layout ``dof = 2 * node + comp``."""
    return sp.kron(A, sp.identity(2), format="csr")


def interpolation_matrix(target_space, source_space) -> sp.csr_matrix:
    """Nodal interpolation of ``source_space`` fields at the nodes of ``target_space`` (scalar)."""
    cells, xi = locate_points(source_space.mesh, target_space.node_coords)
    vals = source_space.element.tabulate(xi)
    vals[np.abs(vals) < 1e-14] = 0.0
    nloc = vals.shape[1]
    rows = np.repeat(np.arange(len(cells)), nloc)
    cols = source_space.cell_nodes[cells].ravel()
    A = sp.csr_matrix((vals.ravel(), (rows, cols)), shape=(target_space.n_nodes, source_space.n_nodes))
    A.eliminate_zeros()
    return A


def mixed_mass(fine_space, coarse_space, supermesh) -> sp.csr_matrix:
    """``(M_hH)_ij = int phi_i^h phi_j^H`` for scalar DG spaces, integrated on the supermesh."""
    deg = fine_space.degree + coarse_space.degree
    rule = triangle_quadrature(max(deg, 1))
    tris = supermesh.tris
    J = np.stack([tris[:, 1] - tris[:, 0], tris[:, 2] - tris[:, 0]], axis=2)
    X = tris[:, 0][:, None, :] + np.einsum("tij,qj->tqi", J, rule.ref_points)
    w = rule.weights[None, :] * np.abs(np.linalg.det(J))[:, None]

    def basis(space, cells):
        g = space.geometry
        xi = np.einsum("tij,tqj->tqi", g.invJ[cells], X - g.x0[cells][:, None, :])
        return space.element.tabulate(xi.reshape(-1, 2)).reshape(len(cells), rule.weights.size, -1)

    pf, pc = supermesh.parent_fine, supermesh.parent_coarse
    bf, bc = basis(fine_space, pf), basis(coarse_space, pc)
    local = np.einsum("tq,tqi,tqj->tij", w, bf, bc, optimize=True)
    nf, nc_ = bf.shape[2], bc.shape[2]
    rows = np.repeat(fine_space.cell_nodes[pf], nc_, axis=1).ravel()
    cols = np.tile(coarse_space.cell_nodes[pc], (1, nf)).ravel()
    return sp.csr_matrix((local.ravel(), (rows, cols)), shape=(fine_space.n_nodes, coarse_space.n_nodes))


def cell_mass_inverse(space) -> sp.csr_matrix:
    """Exact inverse of the block-diagonal scalar DG mass matrix."""
    g = space.geometry
    rule = triangle_quadrature(2 * space.degree)
    phi = space.element.tabulate(rule.ref_points)
    w = rule.weights[None, :] * np.abs(g.detJ)[:, None]
    inv = np.linalg.inv(np.einsum("nq,qi,qj->nij", w, phi, phi))
    n = phi.shape[1]
    rows = np.repeat(space.cell_nodes, n, axis=1).ravel()
    cols = np.tile(space.cell_nodes, (1, n)).ravel()
    return sp.csr_matrix((inv.ravel(), (rows, cols)), shape=(space.n_nodes, space.n_nodes))


def velocity_form(assembler, nu: float, gamma: float) -> sp.csr_matrix:
    """``2 nu (D u, D v) + gamma (div u, div v)`` on the assembler's level (unconstrained)."""
    w, VD, VDIV = assembler.w, assembler.VD, assembler.VDIV
    local = 4 * nu * np.einsum("nq,nqlc,nqmc->nlm", w, VD, VD, optimize=True)
    local += (nu + gamma) * np.einsum("nq,nql,nqm->nlm", w, VDIV, VDIV, optimize=True)
    return assembler.pat["VV"].assemble(local)


def macro_cell_dofs(assembler, macro_of_cell: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Free velocity dofs whose support lies in a single coarse macro cell.

    Returns ``(dofs, owner)`` with the owning macro cell of each dof.
    """
    V = assembler.spaces.velocity
    offsets, cells = V.node_cells
    owner_cells = macro_of_cell[cells]
    start = offsets[:-1]
    lo = np.minimum.reduceat(owner_cells, start)
    hi = np.maximum.reduceat(owner_cells, start)
    nodes = np.flatnonzero(lo == hi)
    dofs = np.stack([2 * nodes, 2 * nodes + 1], axis=1).ravel()
    owner = np.repeat(lo[nodes], 2)
    keep = ~assembler.bc_mask[dofs]
    return dofs[keep], owner[keep]


def extract_blocks(A: sp.csr_matrix, idx: np.ndarray) -> np.ndarray:
    """Dense submatrices ``A[idx[i]][:, idx[i]]`` for a padded index array (pad value ``-1``)."""
    A = A.tocsr()
    A.sort_indices()
    n = A.shape[1]
    rows = np.repeat(np.arange(A.shape[0]), np.diff(A.indptr)).astype(np.int64)
    keys = rows * n + A.indices
    valid = idx >= 0
    ii = np.where(valid, idx, 0).astype(np.int64)
    q = ii[:, :, None] * n + ii[:, None, :]
    pos = np.searchsorted(keys, q)
    pos = np.minimum(pos, len(keys) - 1)
    hit = (keys[pos] == q) & valid[:, :, None] & valid[:, None, :]
    return np.where(hit, A.data[pos], 0.0)


def group_padded(dofs: np.ndarray, owner: np.ndarray, n_groups: int) -> np.ndarray:
    """Padded ``(n_groups, max_size)`` index array listing ``dofs`` per owner (pad ``-1``)."""
    order = np.lexsort((dofs, owner))
    dofs, owner = dofs[order], owner[order]
    counts = np.bincount(owner, minlength=n_groups)
    width = max(int(counts.max(initial=0)), 1)
    start = np.cumsum(counts) - counts
    pos = np.arange(len(dofs)) - start[owner]
    out = np.full((n_groups, width), -1, dtype=np.int64)
    out[owner, pos] = dofs
    return out


def batched_inverse(blocks: np.ndarray, idx: np.ndarray) -> np.ndarray:
    """Invert padded blocks, with identity on the padding."""
    pad = idx < 0
    B = blocks.copy()
    r, c = np.nonzero(pad)
    B[r, c, c] = 1.0
    return np.linalg.inv(B)


def padded_to_sparse(inv: np.ndarray, idx: np.ndarray, n: int) -> sp.csr_matrix:
    valid = idx >= 0
    m = idx.shape[1]
    mask = valid[:, :, None] & valid[:, None, :]
    rows = np.broadcast_to(idx[:, :, None], inv.shape)[mask]
    cols = np.broadcast_to(idx[:, None, :], inv.shape)[mask]
    del m
    return sp.csr_matrix((inv[mask], (rows, cols)), shape=(n, n))


@dataclass
class Transfer:
    """Operators between a coarse level and the next finer one."""

    Pu_plain: sp.csr_matrix  # nodal interpolation of velocity
    Pu: sp.csr_matrix  # corrected velocity prolongation
    Ps: sp.csr_matrix  # stress L2 projection, coarse -> fine
    Is: sp.csr_matrix  # stress L2 projection, fine -> coarse
    Iu: sp.csr_matrix  # velocity nodal interpolation, fine -> coarse
    P: sp.csr_matrix  # stress-velocity prolongation
    R: sp.csr_matrix  # its transpose

    def prolong_velocity(self, vH):
        return self.Pu @ vH

    def prolong_stress(self, sH):
        return self.Ps @ sH

    def inject_stress(self, sh):
        return self.Is @ sh

    def inject_velocity(self, uh):
        return self.Iu @ uh


def build_transfer(coarse, fine, supermesh, coarse_macro_of_fine, nu: float, gamma: float) -> Transfer:
    """Transfers between the assemblers ``coarse`` and ``fine`` of two consecutive levels."""
    Vc, Vf = coarse.spaces.velocity, fine.spaces.velocity
    Sc, Sf = coarse.spaces.stress, fine.spaces.stress
    Pplain = _interleave(interpolation_matrix(Vf, Vc))
    Pplain = _mask(Pplain, fine.bc_mask, coarse.bc_mask)

    # local solves on coarse macro cells remove the divergence error of interpolation
    dofs, owner = macro_cell_dofs(fine, coarse_macro_of_fine)
    Pu = Pplain
    if len(dofs) and gamma > 0:
        L = velocity_form(fine, nu, gamma)
        idx = group_padded(dofs, owner, int(coarse_macro_of_fine.max()) + 1)
        inv = batched_inverse(extract_blocks(L, idx), idx)
        T = padded_to_sparse(inv, idx, Vf.ndofs)
        Gdiv = fine._ggamma()
        Pu = (Pplain - gamma * (T @ (Gdiv @ Pplain))).tocsr()
        Pu = _mask(Pu, fine.bc_mask, coarse.bc_mask)
        Pu.data[np.abs(Pu.data) < 1e-15 * np.abs(Pu.data).max()] = 0.0
        Pu.eliminate_zeros()

    scalar_f = _scalar_space(Sf)
    scalar_c = _scalar_space(Sc)
    MhH = mixed_mass(scalar_f, scalar_c, supermesh)
    Ps = _interleave(cell_mass_inverse(scalar_f) @ MhH)
    Is = _interleave(cell_mass_inverse(scalar_c) @ MhH.T)
    Iu = _interleave(interpolation_matrix(Vc, Vf))
    P = sp.block_diag([Ps, Pu], format="csr")
    return Transfer(Pplain, Pu, Ps, Is, Iu, P, P.T.tocsr())


def _mask(P, fine_bc, coarse_bc):
    P = P.tocsr()
    keep_r = (~fine_bc).astype(float)
    keep_c = (~coarse_bc).astype(float)
    P = sp.diags(keep_r) @ P @ sp.diags(keep_c)
    P = P.tocsr()
    P.eliminate_zeros()
    return P


def _scalar_space(space):
    from ..fem import make_space, SCALAR
    return make_space(space.mesh, space.degree, SCALAR, space.continuity)
