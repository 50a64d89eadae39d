"""Benchmark problems and parameter sweeps."""
from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np

from ..assembly import ProblemDefinition, zero_bc
from ..fem import Function, dev_strain, norm, triangle_quadrature
from ..mesh import build_hierarchy, channel_with_hole, rect_mesh
from ..rheology import eff_viscosity_field, make_model
from ..solver import ALSolver, KrylovConfig, MGConfig, NewtonConfig, continuation, newton_solve
from .config import RunConfig
from .exact import exact_bingham

log = logging.getLogger(__name__)

# the profile's yield stress is a shear stress; the model uses the Frobenius norm
BINGHAM_C, BINGHAM_TAU, BINGHAM_L = 2.0, 1.0, 4.0


def case_defaults(case: str) -> RunConfig:
    if case == "bingham-channel":
        return RunConfig(case=case, refs=2, family="bingham-be", nu=1.0, tau_y=math.sqrt(2) * BINGHAM_TAU,
                         eps=1.0, sweep_param="eps", sweep_values=[1.0, 0.1, 0.01, 0.001, 0.0001],
                         continuation="secant", newton_atol=1e-10, krylov_rtol=1e-12,
                         mg_cycles=2, mg_sweeps=5, stabilization=False, mesh_nx=16, mesh_ny=8)
    if case == "ldc-carreau":
        return RunConfig(case=case, refs=1, family="carreau", nu=0.2, r1=1.8, r2=2.5, beta1=0.9, beta2=0.5,
                         Gamma1=200.0, Gamma2=200.0, sweep_param="nu",
                         sweep_values=[0.2, 0.1, 0.05, 0.02, 0.01, 0.005, 0.002, 0.001],
                         continuation="naive", mg_cycles=2, mg_sweeps=4, stabilization=True,
                         mesh_nx=8, mesh_ny=8)
    if case == "obstacle-euler":
        return RunConfig(case=case, refs=1, family="euler-power-law", nu=0.5, r=1.3, tau_y=3.0, eps=0.2,
                         sweep_param="eps", sweep_values=[0.2, 0.01, 0.0001, 0.00001], continuation="secant",
                         mg_cycles=2, mg_sweeps=3, stabilization=True, mesh_resolution=1.1)
    raise ValueError(f"unknown case {case!r}")


def lid_data(X):
    x = X[:, 0]
    return np.stack([x**2 * (2 - x) ** 2, np.zeros_like(x)], axis=1)


def inflow(X):
    y = X[:, 1]
    return np.stack([4 * 0.3 * y * (0.41 - y) / 0.41**2, np.zeros_like(y)], axis=1)


def bingham_velocity(X):
    return exact_bingham(X, BINGHAM_C, BINGHAM_TAU, BINGHAM_L)[0]


def build_problem(cfg: RunConfig) -> ProblemDefinition:
    model = make_model(cfg.family, **cfg.model_params())
    n_levels = cfg.refs + 1
    if cfg.case == "bingham-channel":
        mesh = rect_mesh(cfg.mesh_nx, cfg.mesh_ny, BINGHAM_L, 2.0, -1.0)
        bcs = {m: bingham_velocity for m in (1, 2, 3, 4)}
        outflow = ()
    elif cfg.case == "ldc-carreau":
        mesh = rect_mesh(cfg.mesh_nx, cfg.mesh_ny, 2.0, 2.0, 0.0)
        bcs = {1: zero_bc, 2: zero_bc, 3: zero_bc, 4: lid_data}
        outflow = ()
    else:
        mesh = channel_with_hole(cfg.mesh_resolution)
        bcs = {1: inflow, 3: zero_bc, 4: zero_bc, 5: zero_bc}
        outflow = (2,)
    h = build_hierarchy(mesh, n_levels)
    return ProblemDefinition(h, cfg.k, model, dirichlet=bcs, outflow=outflow, gamma=cfg.gamma,
                             convection=cfg.convection, stabilization=cfg.stabilization,
                             stab_coeff=cfg.stab_coeff)


def make_solver(cfg: RunConfig, problem: ProblemDefinition | None = None) -> ALSolver:
    problem = problem or build_problem(cfg)
    return ALSolver(problem,
                    MGConfig(cycles=cfg.mg_cycles, sweeps=cfg.mg_sweeps, relaxation=cfg.relaxation),
                    KrylovConfig(rtol=cfg.krylov_rtol, restart=cfg.restart, maxiter=cfg.krylov_maxiter),
                    NewtonConfig(atol=cfg.newton_atol, max_iter=cfg.newton_max_iter,
                                 line_search=cfg.line_search, fd_check=cfg.fd_check))


def velocity_error_L2(space, u: np.ndarray, exact) -> float:
    """``||u_h - u_e||_{L2}`` with a quadrature of degree ``2k + 2``."""
    rule = triangle_quadrature(2 * space.degree + 2)
    f = Function(space, u)
    uq = f.at_points(rule.ref_points)
    X = space.geometry.map(rule.ref_points)
    ue = exact(X.reshape(-1, 2)).reshape(uq.shape)
    w = rule.weights[None, :] * np.abs(space.geometry.detJ)[:, None]
    return float(np.sqrt(np.sum(w[..., None] * (uq - ue) ** 2)))


@dataclass
class SweepPoint:
    param: float
    newton_its: int
    krylov_total: int
    converged: bool
    err_L2: float
    div_L2: float
    wall_s: float
    dofs: int

    @property
    def krylov_avg(self) -> float:
        return self.krylov_total / self.newton_its if self.newton_its else float("nan")


@dataclass
class CaseReport:
    case: str
    k: int
    refs: int
    points: list = field(default_factory=list)
    extras: dict = field(default_factory=dict)
    state: object = None
    solver: object = None

    @property
    def all_converged(self) -> bool:
        return bool(self.points) and all(p.converged for p in self.points)


def cell_fields(solver: ALSolver, state) -> dict:
    """Cell-centered pressure, stress magnitude and effective viscosity."""
    a = solver.fine
    Sp, Vp, Pp = a.spaces.stress, a.spaces.velocity, a.spaces.pressure
    c = np.array([[1 / 3, 1 / 3]])
    S = Function(Sp, state.S).at_points(c)[:, 0]
    _, g = Function(Vp, state.u).at_points(c, grad=True)
    D, _ = dev_strain(g[:, 0])
    p = Function(Pp, state.p).at_points(c)[:, 0, 0]
    return dict(p=p, S_mag=np.sqrt(2 * (S**2).sum(axis=1)),
                mu_eff=eff_viscosity_field(solver.problem.model, S, D))


def far_field_viscosity(solver: ALSolver, state, xmin: float = 1.5) -> float:
    """Area-weighted mean effective viscosity over cells with centroid ``x > xmin``."""
    mesh = solver.fine.mesh
    mu = cell_fields(solver, state)["mu_eff"]
    sel = mesh.centroids[:, 0] > xmin
    return float(np.sum(mu[sel] * mesh.areas[sel]) / np.sum(mesh.areas[sel]))


def run_case(cfg: RunConfig, solver: ALSolver | None = None, dump_dir=None, initial=None) -> CaseReport:
    """Run the configured sweep with continuation, optionally from a given first guess."""
    solver = solver or make_solver(cfg)
    problem = solver.problem
    V = solver.fine.spaces.velocity
    report = CaseReport(cfg.case, cfg.k, cfg.refs)
    exact = bingham_velocity if cfg.case == "bingham-channel" else None
    ndofs = solver.fine.n

    def solve(param, guess):
        if cfg.sweep_param == "gamma":
            solver.set_gamma(param)
        else:
            solver.set_model(problem.model.replace(**{cfg.sweep_param: float(param)}))
        res = newton_solve(solver, guess)
        if cfg.dump_blocks and dump_dir is not None:
            op = solver.fine.jacobian(res.state)
            op.dump(dump_dir, prefix=f"{cfg.case}_{cfg.sweep_param}{param:g}_")
        div = norm(Function(V, res.state.u), "divL2")
        err = velocity_error_L2(V, res.state.u, exact) if exact is not None else float("nan")
        pt = SweepPoint(float(param), res.iterations, res.krylov_total, res.converged, err, div, res.wall, ndofs)
        report.points.append(pt)
        log.info("%s %s=%g: newton %d, krylov %d (avg %.2f), div %.2e, err %.3e, %.1fs%s",
                 cfg.case, cfg.sweep_param, param, res.iterations, res.krylov_total, pt.krylov_avg, div, err,
                 res.wall, "" if res.converged else f" [FAILED: {res.reason}]")
        return res.state, res.converged, res

    out = continuation(solve, cfg.sweep_values, initial, cfg.continuation, cfg.keep_going)
    report.state = out[-1][1]
    report.solver = solver
    good = [o for o in out if o[2]]
    if cfg.case == "obstacle-euler" and cfg.compare_power_law and good:
        # compare at the last converged point, even if the sweep stopped short
        param, state = good[-1][0], good[-1][1]
        solver.set_model(problem.model.replace(**{cfg.sweep_param: float(param)}))
        report.extras.update(power_law_contrast(cfg, solver, state), contrast_param=float(param))
    return report


def power_law_contrast(cfg: RunConfig, solver: ALSolver, activated_state) -> dict:
    """Far-field effective viscosity of the activated fluid and of the plain power law.

    The plain power law has a vanishing stress derivative at ``S = 0``, so it
    is reached by continuation in ``r`` from the Newtonian case.
    """
    activated_model = solver.problem.model
    mu_act = far_field_viscosity(solver, activated_state)
    r_target = activated_model.r
    schedule = [2.0, 1.8, 1.6, 1.45, r_target]
    base = activated_model.replace(tau_y=0.0, eps=1.0)

    def solve(r, guess):
        solver.set_model(base.replace(r=float(r)))
        res = newton_solve(solver, guess)
        return res.state, res.converged, res

    out = continuation(solve, schedule, None, "naive")
    ok = len(out) == len(schedule) and out[-1][2]
    mu_pl = far_field_viscosity(solver, out[-1][1]) if ok else float("nan")
    power_state = out[-1][1]
    solver.set_model(activated_model)
    return dict(mu_far_activated=mu_act, mu_far_power_law=mu_pl, power_law_converged=ok,
                power_law_state=power_state)
