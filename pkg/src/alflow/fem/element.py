"""Lagrange reference elements and quadrature on the reference triangle."""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi, roots_legendre

REF_VERTICES = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
# local edge j joins local vertices (j, j+1 mod 3), matching Triangulation
REF_EDGES = ((0, 1), (1, 2), (2, 0))


def _monomials(k):
    return [(i, d - i) for d in range(k + 1) for i in range(d, -1, -1)]


def lagrange_nodes(k: int) -> np.ndarray:
    """Equispaced nodes ordered vertices, edge interiors (per local edge), interior."""
    if k == 0:
        return np.array([[1.0 / 3.0, 1.0 / 3.0]])
    nodes = [v for v in REF_VERTICES]
    for a, b in REF_EDGES:
        for j in range(1, k):
            nodes.append(REF_VERTICES[a] + j / k * (REF_VERTICES[b] - REF_VERTICES[a]))
    for j in range(1, k):
        for i in range(1, k - j):
            nodes.append(np.array([i / k, j / k]))
    return np.array(nodes)


@dataclass(frozen=True, eq=False)
class ReferenceElement:
    degree: int
    nodes: np.ndarray
    coeffs: np.ndarray  # monomial coefficients, column i is basis function i

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    def tabulate(self, pts: np.ndarray, grad: bool = False):
        """Basis values ``(N, n)`` and optionally reference gradients ``(N, n, 2)``."""
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        x, y = pts[:, 0], pts[:, 1]
        mons = _monomials(self.degree)
        V = np.stack([x**i * y**j for i, j in mons], axis=1)
        vals = V @ self.coeffs
        if not grad:
            return vals
        dx = np.stack([i * x ** max(i - 1, 0) * y**j if i else np.zeros_like(x) for i, j in mons], axis=1)
        dy = np.stack([j * x**i * y ** max(j - 1, 0) if j else np.zeros_like(x) for i, j in mons], axis=1)
        grads = np.stack([dx @ self.coeffs, dy @ self.coeffs], axis=2)
        return vals, grads


@lru_cache(maxsize=None)
def lagrange_element(k: int) -> ReferenceElement:
    if k < 0 or k > 3:
        raise ValueError(f"unsupported degree {k}")
    nodes = lagrange_nodes(k)
    mons = _monomials(k)
    V = np.stack([nodes[:, 0] ** i * nodes[:, 1] ** j for i, j in mons], axis=1)
    return ReferenceElement(k, nodes, np.linalg.inv(V))


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    points: np.ndarray  # barycentric, (nq, 3)
    weights: np.ndarray  # sum to the reference area 1/2
    degree: int

    @property
    def ref_points(self) -> np.ndarray:
        return self.points[:, 1:]


@lru_cache(maxsize=None)
def triangle_quadrature(degree: int) -> QuadratureRule:
    """Collapsed Gauss-Jacobi rule exact for polynomials of total degree ``degree``."""
    n = max(1, (degree + 2) // 2)
    a, wa = roots_legendre(n)
    b, wb = roots_jacobi(n, 1.0, 0.0)
    A, B = np.meshgrid(a, b, indexing="ij")
    WA, WB = np.meshgrid(wa, wb, indexing="ij")
    xi = 0.25 * (1 + A) * (1 - B)
    eta = 0.5 * (1 + B)
    w = (WA * WB / 8.0).ravel()
    xi, eta = xi.ravel(), eta.ravel()
    return QuadratureRule(np.column_stack([1 - xi - eta, xi, eta]), w, degree)


@lru_cache(maxsize=None)
def interval_quadrature(degree: int):
    """Gauss-Legendre points and weights on [0, 1]."""
    n = max(1, (degree + 2) // 2)
    x, w = roots_legendre(n)
    return 0.5 * (x + 1), 0.5 * w
