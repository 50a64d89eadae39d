"""Flexible GMRES and a fixed-iteration GMRES used as a smoother."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

Op = Callable[[np.ndarray], np.ndarray]


@dataclass
class KrylovConfig:
    rtol: float = 1e-10
    atol: float = 0.0
    restart: int = 100
    maxiter: int = 400

    def __post_init__(self):
        if self.restart < 1:
            raise ValueError("restart must be at least 1")
        if self.rtol < 0 or self.atol < 0:
            raise ValueError("tolerances must be nonnegative")


@dataclass
class KrylovResult:
    x: np.ndarray
    converged: bool
    iterations: int
    residuals: list = field(default_factory=list)
    reason: str = ""


def _as_op(A) -> Op:
    if callable(A):
        return A
    return lambda v: A @ v


def fgmres(A, b: np.ndarray, M=None, cfg: KrylovConfig | None = None, x0=None,
           project: Op | None = None) -> KrylovResult:
    """Right-preconditioned flexible GMRES with restarts.

    ``M`` may change between iterations (e.g. an inner multigrid cycle).
    ``project`` is applied to every Arnoldi vector, which removes a known
    nullspace (constant pressures) from the Krylov space.
    Convergence: ``||b - A x|| <= max(rtol ||b||, atol)``.
    """
    cfg = cfg or KrylovConfig()
    A = _as_op(A)
    M = _as_op(M) if M is not None else (lambda v: v)
    P = project or (lambda v: v)
    b = np.asarray(b, dtype=float)
    x = np.zeros_like(b) if x0 is None else np.array(x0, dtype=float)
    bnorm = np.linalg.norm(b)
    target = max(cfg.rtol * bnorm, cfg.atol)
    r = P(b - A(x)) if x0 is not None else P(b.copy())
    beta = np.linalg.norm(r)
    history = [beta]
    if beta <= target:
        return KrylovResult(x, True, 0, history, "initial residual below tolerance")
    its = 0
    m = cfg.restart
    while its < cfg.maxiter:
        V = np.zeros((m + 1, len(b)))
        Z = np.zeros((m, len(b)))
        H = np.zeros((m + 1, m))
        cs, sn = np.zeros(m), np.zeros(m)
        g = np.zeros(m + 1)
        g[0] = beta
        V[0] = r / beta
        j_done = 0
        breakdown = False
        estimated = False
        for j in range(m):
            Z[j] = M(V[j])
            w = P(A(Z[j]))
            # modified Gram-Schmidt, repeated once for stability
            for _ in range(2):
                h = V[: j + 1] @ w
                w -= h @ V[: j + 1]
                H[: j + 1, j] += h
            H[j + 1, j] = np.linalg.norm(w)
            for i in range(j):
                t = cs[i] * H[i, j] + sn[i] * H[i + 1, j]
                H[i + 1, j] = -sn[i] * H[i, j] + cs[i] * H[i + 1, j]
                H[i, j] = t
            den = np.hypot(H[j, j], H[j + 1, j])
            if den == 0.0:
                breakdown = True
                j_done = j
                break
            cs[j], sn[j] = H[j, j] / den, H[j + 1, j] / den
            hn = H[j + 1, j]
            H[j, j] = den
            H[j + 1, j] = 0.0
            g[j + 1] = -sn[j] * g[j]
            g[j] = cs[j] * g[j]
            its += 1
            j_done = j + 1
            history.append(abs(g[j + 1]))
            if abs(g[j + 1]) <= target:
                estimated = True
                break
            if its >= cfg.maxiter:
                break
            if hn <= 1e-14 * beta:
                breakdown = True
                break
            V[j + 1] = w / hn
        if j_done:
            y = np.linalg.solve(np.triu(H[:j_done, :j_done]), g[:j_done])
            x += y @ Z[:j_done]
        r = P(b - A(x))
        prev, beta = beta, np.linalg.norm(r)
        history[-1] = beta
        if beta <= target:
            return KrylovResult(x, True, its, history, "converged")
        if breakdown and j_done == 0:
            return KrylovResult(x, False, its, history, "breakdown")
        if estimated and beta > 0.5 * prev:
            # the Arnoldi estimate met the target but the true residual did not
            # improve: it sits at round-off level
            return KrylovResult(x, False, its, history, "stagnation")
    return KrylovResult(x, False, its, history, "maximum iterations reached")


def gmres_fixed(A, b: np.ndarray, M, iters: int, side: str = "right") -> np.ndarray:
    """``iters`` preconditioned GMRES iterations from a zero guess, no tolerance.

    ``side='left'`` minimizes the preconditioned residual ``||M (b - A x)||``,
    ``side='right'`` the true residual.
    """
    if side not in ("left", "right"):
        raise ValueError(f"unknown preconditioning side {side!r}")
    A, M = _as_op(A), _as_op(M)
    if side == "left":
        r0 = M(b)
        op = lambda v: M(A(v))  # noqa: E731
    else:
        r0 = b
        op = A
    beta = np.linalg.norm(r0)
    if beta == 0.0 or iters < 1:
        return np.zeros_like(b)
    n = len(b)
    V = np.zeros((iters + 1, n))
    Z = np.zeros((iters, n))
    H = np.zeros((iters + 1, iters))
    V[0] = r0 / beta
    m = iters
    for j in range(iters):
        Z[j] = V[j] if side == "left" else M(V[j])
        w = op(Z[j])
        for _ in range(2):
            h = V[: j + 1] @ w
            w -= h @ V[: j + 1]
            H[: j + 1, j] += h
        H[j + 1, j] = np.linalg.norm(w)
        if H[j + 1, j] <= 1e-14 * beta:
            m = j + 1
            break
        V[j + 1] = w / H[j + 1, j]
    e = np.zeros(m + 1)
    e[0] = beta
    y = np.linalg.lstsq(H[: m + 1, :m], e, rcond=None)[0]
    return y @ Z[:m]
