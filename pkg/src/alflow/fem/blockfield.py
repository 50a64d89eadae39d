"""Storage for the stress-velocity-pressure triple."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .space import C0, DG, SCALAR, SYMTRACELESS, VECTOR, FunctionSpace, make_space


@dataclass
class Spaces:
    stress: FunctionSpace
    velocity: FunctionSpace
    pressure: FunctionSpace

    @property
    def sizes(self) -> tuple[int, int, int]:
        return self.stress.ndofs, self.velocity.ndofs, self.pressure.ndofs

    @property
    def offsets(self) -> np.ndarray:
        return np.concatenate([[0], np.cumsum(self.sizes)])


def scott_vogelius(mesh, k: int) -> Spaces:
    """DG P_{k-1} stress, C0 P_k velocity, DG P_{k-1} pressure."""
    if k < 2:
        raise ValueError("velocity degree must be at least 2")
    return Spaces(make_space(mesh, k - 1, SYMTRACELESS, DG),
                  make_space(mesh, k, VECTOR, C0),
                  make_space(mesh, k - 1, SCALAR, DG))


class BlockField:
    """Coefficient vectors ``(S, u, p)`` held as views into one flat array."""

    def __init__(self, spaces: Spaces, data: np.ndarray | None = None):
        self.spaces = spaces
        n = int(spaces.offsets[-1])
        if data is None:
            data = np.zeros(n)
        data = np.asarray(data, dtype=float)
        if data.shape != (n,):
            raise ValueError(f"expected {n} coefficients, got {data.shape}")
        self.data = data

    @property
    def S(self) -> np.ndarray:
        o = self.spaces.offsets
        return self.data[o[0]:o[1]]

    @property
    def u(self) -> np.ndarray:
        o = self.spaces.offsets
        return self.data[o[1]:o[2]]

    @property
    def p(self) -> np.ndarray:
        o = self.spaces.offsets
        return self.data[o[2]:o[3]]

    def copy(self) -> "BlockField":
        return BlockField(self.spaces, self.data.copy())

    def __len__(self):
        return len(self.data)
