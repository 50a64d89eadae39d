"""Residual, Newton Jacobian and auxiliary matrices on one mesh level."""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.io
import scipy.sparse as sp

from ..fem import BlockField, lagrange_element, scott_vogelius, triangle_quadrature
from ..fem.element import interval_quadrature
from ..fem.space import dev_strain
from .pattern import BlockPattern, scatter_vector, zero_rows_cols
from .problem import ProblemDefinition, velocity_constraints


@dataclass
class BlockOperator:
    """Assembled Jacobian blocks with the velocity constraints applied.

    Layout ``[[Q1, Q2Ct, 0], [C, K, Bt], [0, B, 0]]`` with
    ``K = E + Ggamma + Sh`` (constrained rows/columns replaced by identity).
    """

    Q1: sp.csr_matrix
    Q2Ct: sp.csr_matrix
    C: sp.csr_matrix
    E: sp.csr_matrix
    Ggamma: sp.csr_matrix
    Sh: sp.csr_matrix
    Bt: sp.csr_matrix
    B: sp.csr_matrix
    Mp: sp.csr_matrix
    K: sp.csr_matrix
    bc_dofs: np.ndarray
    gamma: float
    sizes: tuple = field(default=(0, 0, 0))

    @property
    def offsets(self):
        return np.concatenate([[0], np.cumsum(self.sizes)])

    def stress_velocity(self) -> sp.csr_matrix:
        """Augmented stress-velocity block ``[[Q1, Q2Ct], [C, K]]``."""
        return sp.bmat([[self.Q1, self.Q2Ct], [self.C, self.K]], format="csr")

    def matrix(self) -> sp.csr_matrix:
        return sp.bmat([[self.Q1, self.Q2Ct, None], [self.C, self.K, self.Bt],
                        [None, self.B, None]], format="csr")

    def matvec(self, x: np.ndarray) -> np.ndarray:
        o = self.offsets
        s, u, p = x[o[0]:o[1]], x[o[1]:o[2]], x[o[2]:o[3]]
        return np.concatenate([self.Q1 @ s + self.Q2Ct @ u,
                               self.C @ s + self.K @ u + self.Bt @ p,
                               self.B @ u])

    def dump(self, directory, prefix: str = "") -> list[Path]:
        """Write every block as a MatrixMarket coordinate file."""
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        out = []
        for name in ("Q1", "Q2Ct", "C", "E", "Ggamma", "Sh", "Bt", "B", "Mp", "K"):
            path = directory / f"{prefix}{name}.mtx"
            scipy.io.mmwrite(str(path), getattr(self, name))
            out.append(path)
        return out


class LevelAssembler:
    """Cell-wise assembly of all forms on one barycentrically refined mesh."""

    def __init__(self, mesh, problem: ProblemDefinition):
        k = problem.k
        self.mesh = mesh
        self.problem = problem
        self.k = k
        self.spaces = scott_vogelius(mesh, k)
        Sspace, V, P = self.spaces.stress, self.spaces.velocity, self.spaces.pressure
        rule = triangle_quadrature(2 * k + 2)
        xi = rule.ref_points
        geo = V.geometry
        self.w = rule.weights[None, :] * np.abs(geo.detJ)[:, None]
        self.xq = geo.map(xi)
        nq = len(rule.weights)

        phs = lagrange_element(k - 1).tabulate(xi)
        phv, gref = lagrange_element(k).tabulate(xi, grad=True)
        gv = geo.physical_grads(gref)  # (nc, nq, nv, 2)
        ns, nv = phs.shape[1], phv.shape[1]
        self.phv, self.gv, self.php = phv, gv, phs

        # vector-valued local bases, local dof = 2 * node + comp
        SB = np.zeros((nq, 2 * ns, 2))
        SB[:, 0::2, 0] = phs
        SB[:, 1::2, 1] = phs
        VV = np.zeros((nq, 2 * nv, 2))
        VV[:, 0::2, 0] = phv
        VV[:, 1::2, 1] = phv
        # traceless part of D(v) and div v for each local velocity basis function
        nc = mesh.n_cells
        VD = np.zeros((nc, nq, 2 * nv, 2))
        VD[:, :, 0::2, 0] = 0.5 * gv[..., 0]
        VD[:, :, 0::2, 1] = 0.5 * gv[..., 1]
        VD[:, :, 1::2, 0] = -0.5 * gv[..., 1]
        VD[:, :, 1::2, 1] = 0.5 * gv[..., 0]
        VDIV = np.zeros((nc, nq, 2 * nv))
        VDIV[:, :, 0::2] = gv[..., 0]
        VDIV[:, :, 1::2] = gv[..., 1]
        self.SB, self.VV, self.VD, self.VDIV = SB, VV, VD, VDIV

        sd, vd, pd = Sspace.cell_dofs, V.cell_dofs, P.cell_dofs
        nS, nV, nP = self.spaces.sizes
        self.pat = {
            "SS": BlockPattern(sd, sd, (nS, nS)),
            "SV": BlockPattern(sd, vd, (nS, nV)),
            "VS": BlockPattern(vd, sd, (nV, nS)),
            "VV": BlockPattern(vd, vd, (nV, nV)),
            "VP": BlockPattern(vd, pd, (nV, nP)),
            "PP": BlockPattern(pd, pd, (nP, nP)),
        }
        self.bc_dofs, self.bc_values = velocity_constraints(problem, V)
        self.bc_mask = np.zeros(nV, dtype=bool)
        self.bc_mask[self.bc_dofs] = True
        self.fq = None
        if problem.forcing is not None:
            self.fq = np.asarray(problem.forcing(self.xq.reshape(-1, 2)), float).reshape(nc, nq, 2)

        # cell-local mass blocks of the stress and pressure spaces
        self.mass_scalar = np.einsum("nq,ql,qm->nlm", self.w, phs, phs, optimize=True)
        self._mass_scalar_inv = np.linalg.inv(self.mass_scalar)
        self.Mp = self.pat["PP"].assemble(self.mass_scalar)
        self.stab_delta = np.zeros(len(mesh.interior_edges))
        self._stab = None
        self.Sh = sp.csr_matrix((nV, nV))
        self._Ggamma = None

    # ------------------------------------------------------------------ state
    @property
    def n(self) -> int:
        return int(self.spaces.offsets[-1])

    def new_state(self) -> BlockField:
        x = BlockField(self.spaces)
        self.impose_bc(x)
        return x

    def impose_bc(self, x: BlockField):
        x.u[self.bc_dofs] = self.bc_values

    def _fields(self, x: BlockField):
        nc = self.mesh.n_cells
        Sl = x.S[self.spaces.stress.cell_dofs]
        ul = x.u[self.spaces.velocity.cell_dofs]
        pl = x.p[self.spaces.pressure.cell_dofs]
        Sq = np.einsum("qlc,nl->nqc", self.SB, Sl, optimize=True)
        uq = np.einsum("qlc,nl->nqc", self.VV, ul, optimize=True)
        un = ul.reshape(nc, -1, 2)
        # basis gradients sum to zero; removing the cell mean keeps round-off
        # in D(u) and div u proportional to the variation of u, not to |u|
        un = un - un.mean(axis=1, keepdims=True)
        grad = np.einsum("nqij,nic->nqcj", self.gv, un, optimize=True)
        dq, divq = dev_strain(grad)
        pq = np.einsum("ql,nl->nq", self.php, pl, optimize=True)
        return Sq, uq, grad, dq, divq, pq

    # --------------------------------------------------------------- residual
    def residual(self, x: BlockField) -> np.ndarray:
        """Block residual ``(F_S, F_u, F_p)``; constrained velocity rows are zero."""
        pb = self.problem
        w = self.w
        Sq, uq, _, dq, divq, pq = self._fields(x)
        G = pb.model.G(Sq, dq)
        if not np.all(np.isfinite(G)):
            raise FloatingPointError(f"constitutive residual is not finite (max |S| = {np.abs(Sq).max():.3e}, "
                                     f"max |D| = {np.abs(dq).max():.3e})")
        FS = np.einsum("nq,qlc,nqc->nl", 2 * w, self.SB, G, optimize=True)
        Fu = np.einsum("nq,nqlc,nqc->nl", 2 * w, self.VD, Sq, optimize=True)
        Fu -= np.einsum("nq,nql,nq->nl", w, self.VDIV, pq, optimize=True)
        if pb.gamma:
            Fu += pb.gamma * np.einsum("nq,nql,nq->nl", w, self.VDIV, divq, optimize=True)
        if pb.convection:
            a = np.einsum("nqj,nqij->nqi", uq, self.gv, optimize=True)
            conv = np.einsum("nq,nqi,nqc->nic", w, a, uq, optimize=True)
            Fu -= conv.reshape(len(w), -1)
        if self.fq is not None:
            Fu -= np.einsum("nq,qlc,nqc->nl", w, self.VV, self.fq, optimize=True)
        Fp = -np.einsum("nq,ql,nq->nl", w, self.php, divq, optimize=True)
        nS, nV, nP = self.spaces.sizes
        ru = scatter_vector(self.spaces.velocity.cell_dofs, Fu, nV)
        if self.problem.stabilization:
            ru += self.Sh @ x.u
        ru[self.bc_mask] = 0.0
        return np.concatenate([scatter_vector(self.spaces.stress.cell_dofs, FS, nS), ru,
                               scatter_vector(self.spaces.pressure.cell_dofs, Fp, nP)])

    # --------------------------------------------------------------- jacobian
    def _ggamma(self):
        if self._Ggamma is None:
            local = np.einsum("nq,nql,nqm->nlm", self.w, self.VDIV, self.VDIV, optimize=True)
            self._Ggamma = self.pat["VV"].assemble(local)
        return self._Ggamma

    def divergence(self) -> sp.csr_matrix:
        """Unconstrained ``Bt`` with entries ``-int q div v``."""
        local = -np.einsum("nq,nql,qm->nlm", self.w, self.VDIV, self.php, optimize=True)
        return self.pat["VP"].assemble(local)

    def jacobian(self, x: BlockField) -> BlockOperator:
        pb = self.problem
        w = self.w
        Sq, uq, _, dq, _, _ = self._fields(x)
        dS, dD = pb.model.dG(Sq, dq)
        Q1 = self.pat["SS"].assemble(np.einsum("nq,qlc,nqcd,qmd->nlm", 2 * w, self.SB, dS, self.SB, optimize=True))
        Q2Ct = self.pat["SV"].assemble(np.einsum("nq,qlc,nqcd,nqmd->nlm", 2 * w, self.SB, dD, self.VD, optimize=True))
        C = self.pat["VS"].assemble(np.einsum("nq,nqlc,qmc->nlm", 2 * w, self.VD, self.SB, optimize=True))
        nc = self.mesh.n_cells
        nv = self.phv.shape[1]
        if pb.convection:
            a = np.einsum("nqj,nqij->nqi", uq, self.gv, optimize=True)
            T1 = np.einsum("nq,nqi,qm->nim", w, a, self.phv, optimize=True)
            loc = np.einsum("nq,nqc,qm,nqid->nicmd", w, uq, self.phv, self.gv, optimize=True)
            loc[:, :, 0, :, 0] += T1
            loc[:, :, 1, :, 1] += T1
            E = self.pat["VV"].assemble(-loc.reshape(nc, 2 * nv, 2 * nv))
        else:
            E = sp.csr_matrix(self._ggamma().shape)
        Gg = pb.gamma * self._ggamma()
        Bt = self.divergence()
        bc = self.bc_mask
        nS = self.spaces.sizes[0]
        Sh = self.Sh if pb.stabilization else sp.csr_matrix(Gg.shape)
        K = zero_rows_cols((E + Gg + Sh).tocsr(), bc, bc, diag=1.0)
        return BlockOperator(
            Q1=Q1,
            Q2Ct=zero_rows_cols(Q2Ct, None, bc),
            C=zero_rows_cols(C, bc, None),
            E=zero_rows_cols(E, bc, bc),
            Ggamma=zero_rows_cols(Gg, bc, bc),
            Sh=zero_rows_cols(Sh.tocsr(), bc, bc),
            Bt=zero_rows_cols(Bt, bc, None),
            B=zero_rows_cols(Bt.T.tocsr(), None, bc),
            Mp=self.Mp,
            K=K,
            bc_dofs=self.bc_dofs,
            gamma=pb.gamma,
            sizes=self.spaces.sizes,
        )

    # ------------------------------------------------------- pressure helpers
    def apply_Mp_inv(self, r: np.ndarray) -> np.ndarray:
        P = self.spaces.pressure
        out = np.empty_like(r)
        out[P.cell_dofs] = np.einsum("nlm,nm->nl", self._mass_scalar_inv, r[P.cell_dofs])
        return out

    def pressure_mean(self, p: np.ndarray) -> float:
        area = self.w.sum()
        return float(np.sum(self.Mp @ p) / area)

    # ---------------------------------------------------------- stabilization
    def _stab_geometry(self):
        if self._stab is not None:
            return self._stab
        mesh, k = self.mesh, self.k
        V = self.spaces.velocity
        ie = mesh.interior_edges
        ed = mesh.edges[ie]
        cells = mesh.edge_cells[ie]
        t, wt = interval_quadrature(2 * (k - 1))
        P0, P1 = mesh.vertices[ed[:, 0]], mesh.vertices[ed[:, 1]]
        h = np.linalg.norm(P1 - P0, axis=1)
        X = P0[:, None, :] + t[None, :, None] * (P1 - P0)[:, None, :]
        geo = V.geometry
        el = lagrange_element(k)
        grads = []
        for side in range(2):
            c = cells[:, side]
            xi = np.einsum("eij,eqj->eqi", geo.invJ[c], X - geo.x0[c][:, None, :])
            _, gr = el.tabulate(xi.reshape(-1, 2), grad=True)
            gr = gr.reshape(len(ie), len(t), -1, 2)
            grads.append(np.einsum("eqnk,ekj->eqnj", gr, geo.invJ[c]))
        # jump basis on the facet patch: first cell's functions, then the second's with a minus sign
        jump = np.concatenate([grads[0], -grads[1]], axis=2)
        local = np.einsum("q,e,eqij,eqkj->eik", wt, h**3, jump, jump, optimize=True)
        nodes = np.concatenate([V.cell_nodes[cells[:, 0]], V.cell_nodes[cells[:, 1]]], axis=1)
        dofs = np.stack([2 * nodes, 2 * nodes + 1], axis=2).reshape(len(ie), -1)
        nloc = nodes.shape[1]
        vec = np.zeros((len(ie), 2 * nloc, 2 * nloc))
        vec[:, 0::2, 0::2] = local
        vec[:, 1::2, 1::2] = local
        self._stab = (cells, dofs, vec, BlockPattern(dofs, dofs, (V.ndofs, V.ndofs)))
        return self._stab

    def stabilization_delta(self, u: np.ndarray) -> np.ndarray:
        """Per-facet coefficient: the larger of the two cell values ``c max_nodes |u|``."""
        V = self.spaces.velocity
        un = u.reshape(-1, 2)
        mag = np.sqrt((un**2).sum(axis=1))
        cell_delta = self.problem.stab_coeff * mag[V.cell_nodes].max(axis=1)
        cells = self.mesh.edge_cells[self.mesh.interior_edges]
        return np.maximum(cell_delta[cells[:, 0]], cell_delta[cells[:, 1]])

    def assemble_stabilization(self, u: np.ndarray) -> sp.csr_matrix:
        """Jump penalty ``sum_F delta_F h_F^2 int_F [grad u]:[grad v]``."""
        _, _, vec, pat = self._stab_geometry()
        delta = self.stabilization_delta(u)
        return pat.assemble(delta[:, None, None] * vec)

    def update_stabilization(self, u: np.ndarray):
        """Freeze the stabilization matrix at velocity ``u`` (lagged coefficient)."""
        if self.problem.stabilization:
            self.Sh = self.assemble_stabilization(u)
