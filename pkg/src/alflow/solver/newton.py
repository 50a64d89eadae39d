"""Newton's method with L2 line search, driven by the augmented Lagrangian solver."""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ..assembly import LevelAssembler, ProblemDefinition
from ..fem import BlockField
from .krylov import KrylovConfig, fgmres
from .multigrid import BlockPreconditioner, MGConfig, Multigrid
from .relaxation import PatchDofs
from .transfer import build_transfer

log = logging.getLogger(__name__)


@dataclass
class NewtonConfig:
    atol: float = 1e-8
    max_iter: int = 50
    line_search: bool = True
    fd_check: bool = False
    # give up once this many steps fail to reduce the best residual by 10%
    stall_iters: int = 5

    def __post_init__(self):
        if self.atol <= 0:
            raise ValueError("Newton tolerance must be positive")
        if self.stall_iters < 1:
            raise ValueError("stall_iters must be at least 1")


@dataclass
class NewtonResult:
    state: BlockField
    converged: bool
    iterations: int
    krylov_total: int
    history: list = field(default_factory=list)
    reason: str = ""
    wall: float = 0.0

    @property
    def krylov_avg(self) -> float:
        return self.krylov_total / self.iterations if self.iterations else 0.0


def line_search_l2(F: Callable[[np.ndarray], np.ndarray], x: np.ndarray, dx: np.ndarray,
                   f0: np.ndarray | None = None) -> float:
    """Step length from a quadratic fit of ``||F(x + t dx)||^2`` at ``t = 0, 1/2, 1``.

    Returns 1 if the full step already halves the residual norm or the fit is
    not convex; otherwise the fitted minimizer clamped to ``[0.1, 1]``.
    """
    r0 = F(x) if f0 is None else f0
    p0 = float(r0 @ r0)
    r1 = F(x + dx)
    p1 = float(r1 @ r1)
    if p1 <= 0.25 * p0:
        return 1.0
    rh = F(x + 0.5 * dx)
    ph = float(rh @ rh)
    a = 2.0 * (p1 - 2.0 * ph + p0)
    b = p1 - p0 - a
    if not np.isfinite(a) or a <= 0:
        return 1.0
    return float(np.clip(-b / (2 * a), 0.1, 1.0))


class ALSolver:
    """Augmented Lagrangian Newton-Krylov solver on a mesh hierarchy."""

    def __init__(self, problem: ProblemDefinition, mg: MGConfig | None = None,
                 krylov: KrylovConfig | None = None, newton: NewtonConfig | None = None):
        self.problem = problem
        self.mg_cfg = mg or MGConfig()
        self.krylov_cfg = krylov or KrylovConfig()
        self.newton_cfg = newton or NewtonConfig()
        h = problem.hierarchy
        self.assemblers = [LevelAssembler(m, problem) for m in h.levels]
        self.fine = self.assemblers[-1]
        self.patch_dofs = [None] + [PatchDofs(a) for a in self.assemblers[1:]] \
            if self.mg_cfg.relaxation == "macrostar" else None
        self._transfer_key = None
        self._build_transfers()

    def _build_transfers(self):
        pb = self.problem
        key = (pb.prolongation_nu, pb.gamma)
        if key == self._transfer_key:
            return
        h = pb.hierarchy
        self.transfers = [build_transfer(self.assemblers[i], self.assemblers[i + 1], h.supermeshes[i],
                                         h.coarse_macro_of_fine_cells(i + 1), pb.prolongation_nu, pb.gamma)
                          for i in range(len(self.assemblers) - 1)]
        self.mg = Multigrid(self.assemblers, self.transfers, self.mg_cfg, self.patch_dofs)
        self._transfer_key = key

    def set_model(self, model):
        self.problem.model = model
        self._build_transfers()

    def set_gamma(self, gamma: float):
        self.problem.gamma = float(gamma)
        self._build_transfers()

    # ------------------------------------------------------------------
    def new_state(self) -> BlockField:
        return self.fine.new_state()

    def residual(self, x: np.ndarray) -> np.ndarray:
        return self.fine.residual(BlockField(self.fine.spaces, x))

    def inject_state(self, state: BlockField) -> list[BlockField]:
        """Per-level states, coarsest first, for rediscretization."""
        out = [state]
        for lev in range(len(self.assemblers) - 2, -1, -1):
            T = self.transfers[lev]
            fine = out[0]
            coarse = BlockField(self.assemblers[lev].spaces)
            coarse.S[:] = T.inject_stress(fine.S)
            coarse.u[:] = T.inject_velocity(fine.u)
            out.insert(0, coarse)
        return out

    def linearize(self, state: BlockField):
        """Jacobian on every level and the matching block preconditioner."""
        states = self.inject_state(state)
        ops = []
        for a, s in zip(self.assemblers, states):
            if a is not self.fine:
                a.update_stabilization(s.u)
            ops.append(a.jacobian(s))
        self.mg.update(ops)
        nu_rep = float(getattr(self.problem.model, "nu", 1.0))
        prec = BlockPreconditioner(ops[-1], self.mg, self.fine, nu_rep, self.problem.has_pressure_nullspace)
        return ops[-1], prec

    def project(self, v: np.ndarray) -> np.ndarray:
        if not self.problem.has_pressure_nullspace:
            return v
        o = self.fine.spaces.offsets
        v = v.copy()
        v[o[2]:] -= v[o[2]:].mean()
        return v

    def recenter_pressure(self, state: BlockField):
        if self.problem.has_pressure_nullspace:
            state.p[:] -= self.fine.pressure_mean(state.p)

    def solve_linear(self, op, prec, rhs):
        return fgmres(op.matvec, rhs, prec, self.krylov_cfg, project=self.project)

    # ------------------------------------------------------------------
    def solve(self, initial: BlockField | None = None, cfg: NewtonConfig | None = None) -> NewtonResult:
        return newton_solve(self, initial, cfg)


def fd_check(solver: ALSolver, state: BlockField, op=None, n_dirs: int = 20, h: float = 1e-6, seed: int = 0) -> float:
    """Largest relative mismatch between ``J d`` and central differences of the residual."""
    rng = np.random.default_rng(seed)
    a = solver.fine
    op = op or a.jacobian(state)
    o = a.spaces.offsets
    worst = 0.0
    for _ in range(n_dirs):
        d = rng.standard_normal(len(state.data))
        d[o[1]:o[2]][a.bc_mask] = 0.0
        scale = h * (1 + np.linalg.norm(state.data)) / np.linalg.norm(d)
        fd = (solver.residual(state.data + scale * d) - solver.residual(state.data - scale * d)) / (2 * scale)
        jd = op.matvec(d)
        worst = max(worst, np.linalg.norm(fd - jd) / max(np.linalg.norm(jd), 1e-300))
    return worst


def newton_solve(solver: ALSolver, initial: BlockField | None = None, cfg: NewtonConfig | None = None) -> NewtonResult:
    cfg = cfg or solver.newton_cfg
    t0 = time.perf_counter()
    a = solver.fine
    x = initial.copy() if initial is not None else solver.new_state()
    a.impose_bc(x)
    history = []
    ktot = 0
    it = 0
    reason = "maximum iterations reached"
    converged = False
    best, since_best = np.inf, 0
    while True:
        a.update_stabilization(x.u)
        F = a.residual(x)
        fnorm = float(np.linalg.norm(F))
        if not np.isfinite(fnorm):
            reason = "residual is not finite"
            break
        if fnorm <= cfg.atol:
            converged, reason = True, "converged"
            history.append(dict(step=it, residual=fnorm, krylov=0, step_length=0.0))
            break
        if it >= cfg.max_iter:
            history.append(dict(step=it, residual=fnorm, krylov=0, step_length=0.0))
            break
        if fnorm < 0.9 * best:
            best, since_best = fnorm, 0
        else:
            since_best += 1
            if since_best >= cfg.stall_iters:
                reason = "residual stagnated"
                history.append(dict(step=it, residual=fnorm, krylov=0, step_length=0.0))
                break
        op, prec = solver.linearize(x)
        if cfg.fd_check:
            err = fd_check(solver, x, op)
            log.info("Jacobian finite-difference check: relative error %.2e", err)
        res = solver.solve_linear(op, prec, -F)
        ktot += res.iterations
        if not res.converged:
            log.warning("linear solve did not converge after %d iterations (%s)", res.iterations, res.reason)
        dx = res.x
        lam = line_search_l2(solver.residual, x.data, dx, F) if cfg.line_search else 1.0
        history.append(dict(step=it, residual=fnorm, krylov=res.iterations, step_length=lam))
        log.info("newton %2d  |F| = %.3e  krylov = %3d  lambda = %.3f", it, fnorm, res.iterations, lam)
        if lam * np.linalg.norm(dx) < 1e-12 * (1 + np.linalg.norm(x.data)):
            reason = "line search stagnated"
            x.data += lam * dx
            it += 1
            break
        x.data += lam * dx
        solver.recenter_pressure(x)
        it += 1
    return NewtonResult(x, converged, it, ktot, history, reason, time.perf_counter() - t0)


def continuation(solve: Callable, schedule, initial=None, kind: str = "secant", keep_going: bool = False):
    """Solve along ``schedule``; ``solve(param, guess) -> (state, ok, info)``.

    ``kind='secant'`` extrapolates from the two previous solutions once they
    exist; ``'naive'`` reuses the previous solution. Returns the list of
    ``(param, state, ok, info)`` computed before the first failure, or the
    whole schedule with ``keep_going`` (failed iterates then seed the next
    point).
    """
    if kind not in ("secant", "naive"):
        raise ValueError(f"unknown continuation {kind!r}")
    schedule = list(schedule)
    if not schedule:
        raise ValueError("empty continuation schedule")
    out = []
    prev = []  # (param, data)
    for param in schedule:
        if kind == "secant" and len(prev) >= 2:
            guess = secant_guess(param, prev[-2][0], prev[-1][0], prev[-2][1], prev[-1][1])
        elif prev:
            guess = prev[-1][1]
        else:
            guess = initial
        state, ok, info = solve(param, guess)
        out.append((param, state, ok, info))
        if not ok and not keep_going:
            break
        prev.append((param, state))
    return out


def secant_guess(eps, eps1, eps2, w1, w2):
    """``(eps - eps2)/(eps2 - eps1) (w2 - w1) + w2``."""
    if isinstance(w1, BlockField):
        out = w2.copy()
        out.data[:] = (eps - eps2) / (eps2 - eps1) * (w2.data - w1.data) + w2.data
        return out
    return (eps - eps2) / (eps2 - eps1) * (np.asarray(w2) - np.asarray(w1)) + np.asarray(w2)


secant_continuation = continuation
