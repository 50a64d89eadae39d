"""Monolithic multigrid on the augmented stress-velocity block."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse.linalg as spla

from .relaxation import JacobiRelaxation, MacrostarRelaxation, PatchDofs, relax_gmres_wrapped


@dataclass
class MGConfig:
    cycles: int = 2
    sweeps: int = 5
    cycle: str = "F"
    relaxation: str = "macrostar"

    def __post_init__(self):
        if self.cycle not in ("F", "V"):
            raise ValueError(f"unknown cycle type {self.cycle!r}")
        if self.relaxation not in ("macrostar", "jacobi"):
            raise ValueError(f"unknown relaxation {self.relaxation!r}")
        if self.cycles < 1 or self.sweeps < 0:
            raise ValueError("cycles must be >= 1 and sweeps >= 0")


class Multigrid:
    """Cycles over a list of levels (coarsest first) with rediscretized operators."""

    def __init__(self, assemblers, transfers, cfg: MGConfig, patch_dofs=None):
        self.assemblers = assemblers
        self.transfers = transfers  # transfers[l] maps level l to level l + 1
        self.cfg = cfg
        self.relax = [None]
        for lev, a in enumerate(assemblers[1:], start=1):
            if cfg.relaxation == "jacobi":
                self.relax.append(JacobiRelaxation())
            else:
                pd = patch_dofs[lev] if patch_dofs is not None else PatchDofs(a)
                self.relax.append(MacrostarRelaxation(pd))
        self.A = [None] * len(assemblers)
        self.lu = None

    @property
    def n_levels(self) -> int:
        return len(self.assemblers)

    def update(self, ops):
        """Refresh level operators, patch factorizations and the coarse LU."""
        for lev, op in enumerate(ops):
            self.A[lev] = op.stress_velocity()
            if lev > 0:
                self.relax[lev].update(op)
        try:
            self.lu = spla.splu(self.A[0].tocsc())
        except RuntimeError as exc:
            raise RuntimeError(f"coarse level LU failed on level 0 ({self.A[0].shape[0]} dofs): {exc}") from exc

    def _smooth(self, lev, b, x):
        return relax_gmres_wrapped(self.A[lev], self.relax[lev], b, x, self.cfg.sweeps)

    def vcycle(self, lev: int, b: np.ndarray) -> np.ndarray:
        if lev == 0:
            return self.lu.solve(b)
        A, T = self.A[lev], self.transfers[lev - 1]
        x = self._smooth(lev, b, np.zeros_like(b))
        x += T.P @ self.vcycle(lev - 1, T.R @ (b - A @ x))
        return self._smooth(lev, b, x)

    def fcycle(self, lev: int, b: np.ndarray) -> np.ndarray:
        if lev == 0:
            return self.lu.solve(b)
        A, T = self.A[lev], self.transfers[lev - 1]
        x = self._smooth(lev, b, np.zeros_like(b))
        rc = T.R @ (b - A @ x)
        ec = self.fcycle(lev - 1, rc)
        if lev - 1 > 0:
            ec += self.vcycle(lev - 1, rc - self.A[lev - 1] @ ec)
        x += T.P @ ec
        return self._smooth(lev, b, x)

    def apply(self, b: np.ndarray, cycles: int | None = None) -> np.ndarray:
        top = self.n_levels - 1
        cyc = self.fcycle if self.cfg.cycle == "F" else self.vcycle
        x = cyc(top, b)
        for _ in range((cycles or self.cfg.cycles) - 1):
            x += cyc(top, b - self.A[top] @ x)
        return x

    __call__ = apply


class BlockPreconditioner:
    """Full block factorization with multigrid for the augmented block and
    ``-(nu + gamma) Mp^{-1}`` for the Schur complement."""

    def __init__(self, op, Ainv, assembler, nu_rep: float, nullspace: bool):
        self.op = op
        self.Ainv = Ainv
        self.assembler = assembler
        self.scale = -(nu_rep + op.gamma)
        self.nullspace = nullspace
        o = op.offsets
        self.nS, self.nSV = int(o[1]), int(o[2])

    def schur(self, q: np.ndarray) -> np.ndarray:
        z = self.scale * self.assembler.apply_Mp_inv(q)
        if self.nullspace:
            z -= z.mean()
        return z

    def __call__(self, r: np.ndarray) -> np.ndarray:
        nS, nSV = self.nS, self.nSV
        ra, rp = r[:nSV], r[nSV:]
        if not np.any(r):
            return np.zeros_like(r)
        y = self.Ainv(ra)
        zp = self.schur(rp - self.op.B @ y[nS:])
        ra2 = ra.copy()
        ra2[nS:] -= self.op.Bt @ zp
        return np.concatenate([self.Ainv(ra2), zp])
