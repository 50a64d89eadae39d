"""Fixed sparsity patterns for repeated cell-wise assembly."""
from __future__ import annotations

import numpy as np
import scipy.sparse as sp


class BlockPattern:
    """CSR pattern of a block coupling two dof maps.

    Assembly accumulates per-cell matrices with ``np.bincount`` in a fixed
    order, so re-assembly at the same state is bit-identical.
    """

    def __init__(self, row_dofs: np.ndarray, col_dofs: np.ndarray, shape: tuple[int, int]):
        nc, lr = row_dofs.shape
        lc = col_dofs.shape[1]
        r = np.broadcast_to(row_dofs[:, :, None], (nc, lr, lc)).ravel()
        c = np.broadcast_to(col_dofs[:, None, :], (nc, lr, lc)).ravel()
        key = r.astype(np.int64) * shape[1] + c
        uniq, self.inv = np.unique(key, return_inverse=True)
        self.shape = shape
        self.indices = (uniq % shape[1]).astype(np.int32)
        rows = uniq // shape[1]
        self.indptr = np.searchsorted(rows, np.arange(shape[0] + 1)).astype(np.int32)
        self.rows = rows
        self.local_shape = (nc, lr, lc)

    @property
    def nnz(self) -> int:
        return len(self.indices)

    def assemble(self, local: np.ndarray) -> sp.csr_matrix:
        if local.shape != self.local_shape:
            raise ValueError(f"local matrices have shape {local.shape}, expected {self.local_shape}")
        data = np.bincount(self.inv, weights=local.ravel(), minlength=self.nnz)
        return sp.csr_matrix((data, self.indices.copy(), self.indptr.copy()), shape=self.shape)


def scatter_vector(dofs: np.ndarray, local: np.ndarray, n: int) -> np.ndarray:
    return np.bincount(dofs.ravel(), weights=local.ravel(), minlength=n)


def zero_rows_cols(A: sp.csr_matrix, rows: np.ndarray | None = None, cols: np.ndarray | None = None,
                   diag: float | None = None) -> sp.csr_matrix:
    """Copy of ``A`` with masked rows/columns zeroed and optionally ``diag`` placed on them."""
    A = A.tocsr(copy=True)
    row_of = np.repeat(np.arange(A.shape[0]), np.diff(A.indptr))
    kill = np.zeros(A.nnz, dtype=bool)
    if rows is not None:
        kill |= rows[row_of]
    if cols is not None:
        kill |= cols[A.indices]
    A.data[kill] = 0.0
    if diag is not None and rows is not None:
        on = kill & (A.indices == row_of) & rows[row_of]
        A.data[on] = diag
        missing = np.setdiff1d(np.flatnonzero(rows), row_of[on])
        if len(missing):
            A = A + sp.csr_matrix((np.full(len(missing), diag), (missing, missing)), shape=A.shape)
    A.eliminate_zeros()
    return A
