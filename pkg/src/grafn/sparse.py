"""CSR adjacency structure for undirected graphs.

Values are float64 and non-negative; the sparsity pattern is symmetric.
The raw adjacency carries no self-loops; loops enter only through GCN
normalization (see grafn.data.normalize_adjacency).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import NumericsError


@dataclass
class SparseAdjacency:
    """Symmetric sparse matrix in CSR form."""

    n: int
    row_offsets: np.ndarray  # int64, length n+1
    col_indices: np.ndarray  # int64, length nnz, strictly increasing per row
    values: np.ndarray       # float64, length nnz
    _csr_cache: sp.csr_matrix | None = field(default=None, repr=False, compare=False)

    @property
    def nnz(self) -> int:
        return len(self.col_indices)

    def _entry_rows(self) -> np.ndarray:
        return np.repeat(np.arange(self.n, dtype=np.int64), np.diff(self.row_offsets))

    @property
    def num_undirected_edges(self) -> int:
        """Off-diagonal stored entries counted once per undirected edge."""
        n_diag = int(np.count_nonzero(self._entry_rows() == self.col_indices))
        return (self.nnz - n_diag) // 2

    @classmethod
    def from_edges(cls, n: int, edges, values=None) -> "SparseAdjacency":
        """Build from an iterable of (src, dst) pairs, each undirected edge once.

        Both CSR directions are materialized; duplicate pairs collapse to a
        single entry keeping the first value seen.
        """
        if values is None:
            entries = {}
            for i, j in edges:
                entries[(min(i, j), max(i, j))] = 1.0
        else:
            entries = {}
            for (i, j), v in zip(edges, values):
                entries.setdefault((min(i, j), max(i, j)), float(v))
        rows, cols, vals = [], [], []
        for (i, j), v in entries.items():
            if not (0 <= i < n and 0 <= j < n):
                raise NumericsError(f"edge ({i},{j}) out of range for n={n}")
            rows.append(i)
            cols.append(j)
            vals.append(v)
            if i != j:
                rows.append(j)
                cols.append(i)
                vals.append(v)
        mat = sp.coo_matrix(
            (np.asarray(vals, dtype=np.float64), (rows, cols)), shape=(n, n)
        ).tocsr()
        mat.sort_indices()
        return cls(
            n=n,
            row_offsets=mat.indptr.astype(np.int64),
            col_indices=mat.indices.astype(np.int64),
            values=mat.data.astype(np.float64),
        )

    @classmethod
    def from_scipy(cls, mat: sp.spmatrix) -> "SparseAdjacency":
        csr = sp.csr_matrix(mat)
        csr.sort_indices()
        return cls(
            n=csr.shape[0],
            row_offsets=csr.indptr.astype(np.int64),
            col_indices=csr.indices.astype(np.int64),
            values=csr.data.astype(np.float64),
        )

    def to_scipy(self) -> sp.csr_matrix:
        if self._csr_cache is None:
            self._csr_cache = sp.csr_matrix(
                (self.values, self.col_indices, self.row_offsets), shape=(self.n, self.n)
            )
        return self._csr_cache

    def to_dense(self) -> np.ndarray:
        return self.to_scipy().toarray()

    def degrees(self) -> np.ndarray:
        """Number of stored off-diagonal entries per row (raw degree)."""
        deg = np.diff(self.row_offsets).astype(np.int64)
        diag = self._entry_rows() == self.col_indices
        if diag.any():
            deg -= np.bincount(self._entry_rows()[diag], minlength=self.n).astype(np.int64)
        return deg

    def undirected_edge_list(self) -> np.ndarray:
        """Off-diagonal edges as an (m, 2) array with src < dst, row-major order."""
        rows = self._entry_rows()
        keep = rows < self.col_indices
        return np.column_stack([rows[keep], self.col_indices[keep]])

    def validate(self) -> None:
        """Check the structural invariants; raises NumericsError on violation."""
        if len(self.row_offsets) != self.n + 1:
            raise NumericsError("row_offsets length must be n+1")
        if self.row_offsets[0] != 0 or self.row_offsets[-1] != self.nnz:
            raise NumericsError("row_offsets endpoints inconsistent with nnz")
        if np.any(np.diff(self.row_offsets) < 0):
            raise NumericsError("row_offsets must be monotone")
        if self.nnz and (self.col_indices.min() < 0 or self.col_indices.max() >= self.n):
            raise NumericsError("col_indices out of range")
        for i in range(self.n):
            row = self.col_indices[self.row_offsets[i]:self.row_offsets[i + 1]]
            if len(row) > 1 and np.any(np.diff(row) <= 0):
                raise NumericsError(f"row {i}: col_indices not strictly increasing")
        if not np.all(np.isfinite(self.values)) or np.any(self.values < 0):
            raise NumericsError("values must be finite and non-negative")
        mat = self.to_scipy()
        if (mat != mat.T).nnz != 0:
            raise NumericsError("adjacency must be symmetric")
