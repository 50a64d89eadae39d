"""Problem description and boundary conditions."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ..rheology import ConstitutiveModel

BCFunction = Callable[[np.ndarray], np.ndarray]


def zero_bc(X):
    return np.zeros((len(X), 2))


@dataclass
class ProblemDefinition:
    """Stationary flow problem on a barycentric hierarchy.

    ``dirichlet`` maps boundary markers to velocity data ``g(X) -> (N, 2)``;
    markers in ``outflow`` get a zero tangential velocity and the natural
    condition for the normal stress.
    """

    hierarchy: object
    k: int
    model: ConstitutiveModel
    dirichlet: dict[int, BCFunction] = field(default_factory=dict)
    outflow: tuple[int, ...] = ()
    forcing: BCFunction | None = None
    gamma: float = 1e4
    convection: bool = True
    stabilization: bool = False
    stab_coeff: float = 5e-3
    nu_prol: float | None = None

    def __post_init__(self):
        if self.k < 2:
            raise ValueError("velocity degree k must be at least 2")
        if self.gamma < 0:
            raise ValueError("gamma must be nonnegative")
        self.outflow = tuple(self.outflow)
        both = set(self.dirichlet) & set(self.outflow)
        if both:
            raise ValueError(f"markers {sorted(both)} have two boundary conditions")
        present = set(np.unique(self.hierarchy.levels[-1].boundary_markers).tolist())
        missing = present - set(self.dirichlet) - set(self.outflow)
        if missing:
            raise ValueError(f"boundary markers {sorted(missing)} have no condition")

    @property
    def has_pressure_nullspace(self) -> bool:
        return len(self.outflow) == 0

    @property
    def prolongation_nu(self) -> float:
        return self.nu_prol if self.nu_prol is not None else float(getattr(self.model, "nu", 1.0))

    def with_model(self, model: ConstitutiveModel) -> "ProblemDefinition":
        out = ProblemDefinition(**{**self.__dict__, "model": model})
        return out


def velocity_constraints(problem: ProblemDefinition, V) -> tuple[np.ndarray, np.ndarray]:
    """Constrained velocity dofs and their values; rejects conflicting data."""
    values = {}

    def add(dofs, vals, what):
        for d, v in zip(dofs.tolist(), vals.tolist()):
            old = values.get(d)
            if old is not None and abs(old - v) > 1e-12 * max(1.0, abs(v)):
                raise ValueError(f"conflicting boundary values at velocity dof {d} ({what})")
            values[d] = v

    for marker in sorted(problem.dirichlet):
        nodes = V.boundary_nodes(marker)
        if len(nodes) == 0:
            continue
        g = np.asarray(problem.dirichlet[marker](V.node_coords[nodes]), dtype=float).reshape(len(nodes), 2)
        add(np.concatenate([2 * nodes, 2 * nodes + 1]), np.concatenate([g[:, 0], g[:, 1]]), f"marker {marker}")
    mesh = V.mesh
    for marker in problem.outflow:
        sel = mesh.boundary_markers == marker
        if not np.any(sel):
            continue
        t = mesh.vertices[mesh.boundary_facets[sel, 1]] - mesh.vertices[mesh.boundary_facets[sel, 0]]
        t = t / np.linalg.norm(t, axis=1)[:, None]
        if np.all(np.abs(t[:, 0]) < 1e-12):
            comp = 1
        elif np.all(np.abs(t[:, 1]) < 1e-12):
            comp = 0
        else:
            raise ValueError(f"outflow marker {marker} must be an axis-aligned straight boundary")
        nodes = V.boundary_nodes(marker)
        add(2 * nodes + comp, np.zeros(len(nodes)), f"outflow {marker}")
    dofs = np.array(sorted(values), dtype=np.int64)
    return dofs, np.array([values[d] for d in dofs.tolist()])
