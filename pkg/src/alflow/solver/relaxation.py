"""Additive macrostar and point-Jacobi relaxation, wrapped in a few GMRES iterations."""
from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from ..mesh import build_macrostar_patches
from .krylov import gmres_fixed
from .transfer import batched_inverse, extract_blocks


class PatchDofs:
    """Macrostar patches of one level: interior free velocity dofs and covered stress dofs."""

    def __init__(self, assembler, patches=None):
        self.assembler = assembler
        if patches is None:
            patches = build_macrostar_patches(assembler.mesh)
        self.patches = patches
        V = assembler.spaces.velocity
        offsets, node_cells = V.node_cells
        degree = np.diff(offsets)
        vel, stress_count = [], np.zeros(assembler.spaces.sizes[0])
        S = assembler.spaces.stress
        for p in patches:
            nodes = V.cell_nodes[p.cells].ravel()
            uniq, cnt = np.unique(nodes, return_counts=True)
            inner = uniq[cnt == degree[uniq]]
            d = np.stack([2 * inner, 2 * inner + 1], axis=1).ravel()
            d = d[~assembler.bc_mask[d]]
            vel.append(d)
            p.interior_dof_mask = d
            stress_count[S.cell_dofs[p.cells].ravel()] += 1
        width = max((len(v) for v in vel), default=1)
        self.idx = np.full((len(patches), max(width, 1)), -1, dtype=np.int64)
        for i, d in enumerate(vel):
            self.idx[i, :len(d)] = d
        self.stress_count = stress_count
        self.velocity_dofs = vel

    def __len__(self):
        return len(self.patches)


def _cell_blocks(Q1, nS, bs):
    """Diagonal cell blocks of the block-diagonal stress matrix."""
    nc = nS // bs
    idx = np.arange(nS).reshape(nc, bs)
    return extract_blocks(Q1, idx)


def _block_diag_sparse(blocks):
    nc, bs, _ = blocks.shape
    idx = np.arange(nc * bs).reshape(nc, bs)
    rows = np.repeat(idx, bs, axis=1).ravel()
    cols = np.tile(idx, (1, bs)).ravel()
    return sp.csr_matrix((blocks.ravel(), (rows, cols)), shape=(nc * bs, nc * bs))


class MacrostarRelaxation:
    """Additive patch solves of the augmented stress-velocity block.

    Stress is discontinuous, so every patch system is eliminated exactly onto
    its velocity dofs with the cell-wise inverse of ``Q1``; the resulting
    operator equals the sum of patch-local solves of the full block.
    """

    def __init__(self, patch_dofs: PatchDofs):
        self.pd = patch_dofs
        self.ready = False

    def update(self, op):
        a = self.pd.assembler
        nS = a.spaces.sizes[0]
        bs = a.SB.shape[1]
        self.op = op
        self.Q1inv = _block_diag_sparse(np.linalg.inv(_cell_blocks(op.Q1, nS, bs)))
        self.Su = (op.K - op.C @ self.Q1inv @ op.Q2Ct).tocsr()
        self.inv = batched_inverse(extract_blocks(self.Su, self.pd.idx), self.pd.idx)
        self.nS = nS
        self.ready = True

    def apply(self, r: np.ndarray) -> np.ndarray:
        nS = self.nS
        rs, ru = r[:nS], r[nS:]
        op = self.op
        g = ru - op.C @ (self.Q1inv @ rs)
        idx = self.pd.idx
        valid = idx >= 0
        loc = np.where(valid, g[np.where(valid, idx, 0)], 0.0)
        sol = np.einsum("pij,pj->pi", self.inv, loc)
        U = np.bincount(idx[valid], weights=sol[valid], minlength=len(ru))
        S = self.Q1inv @ (self.pd.stress_count * rs - op.Q2Ct @ U)
        return np.concatenate([S, U])

    __call__ = apply


class JacobiRelaxation:
    """Point-Jacobi on the stress-velocity block."""

    def update(self, op):
        A = op.stress_velocity()
        d = A.diagonal()
        d[d == 0] = 1.0
        self.dinv = 1.0 / d

    def apply(self, r):
        return self.dinv * r

    __call__ = apply


def relax_gmres_wrapped(A, prec, b: np.ndarray, x: np.ndarray, sweeps: int) -> np.ndarray:
    """``sweeps`` GMRES iterations on ``A e = b - A x`` preconditioned by ``prec``."""
    r = b - A @ x
    return x + gmres_fixed(A, r, prec, sweeps)


def dense_schwarz(A: np.ndarray, patch_index_sets) -> np.ndarray:
    """Reference additive Schwarz operator ``sum_i R_i^T (R_i A R_i^T)^{-1} R_i``."""
    n = A.shape[0]
    out = np.zeros((n, n))
    for d in patch_index_sets:
        d = np.asarray(d)
        out[np.ix_(d, d)] += np.linalg.inv(A[np.ix_(d, d)])
    return out
