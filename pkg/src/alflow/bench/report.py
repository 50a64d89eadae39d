"""CSV reports and field output."""
from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from ..fem import write_vtk
from .cases import CaseReport, cell_fields

HEADER = ["case", "k", "refs", "dofs", "param", "newton_its", "krylov_total", "krylov_avg", "err_L2", "div_L2",
          "wall_s"]


def write_report(report: CaseReport, path) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(HEADER)
            for p in report.points:
                w.writerow([report.case, report.k, report.refs, p.dofs, f"{p.param:g}", p.newton_its,
                            p.krylov_total, f"{p.krylov_avg:.2f}", f"{p.err_L2:.6e}", f"{p.div_L2:.6e}",
                            f"{p.wall_s:.2f}"])
    except OSError as exc:
        raise OSError(f"cannot write report {path}: {exc}") from exc
    return path


def read_report(path) -> list[dict]:
    with Path(path).open() as fh:
        return list(csv.DictReader(fh))


def write_fields(solver, state, path) -> Path:
    """VTK file with velocity at vertices and cell-centered p, |S| and effective viscosity."""
    mesh = solver.fine.mesh
    u = state.u.reshape(-1, 2)[: mesh.n_vertices]
    cf = cell_fields(solver, state)
    write_vtk(path, mesh.vertices, mesh.cells, point_data={"u": u},
              cell_data={"p": cf["p"], "S_magnitude": cf["S_mag"], "mu_eff": np.asarray(cf["mu_eff"])})
    return Path(path)
