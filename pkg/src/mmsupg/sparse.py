"""Compressed-row sparse matrices, triplet assembly and a direct LU solve.

Factorization is delegated to SuperLU through :mod:`scipy.sparse.linalg`;
storage, compression and the singularity policy live here.
"""
from __future__ import annotations

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import InvalidArgumentError, SingularMatrixError

PIVOT_RTOL = 1e-14
RESIDUAL_TOL = 1e-10


class SparseMatrix:
    """Square or rectangular matrix in compressed row storage.

    Column indices are sorted and unique within each row.
    """

    __slots__ = ("n_rows", "n_cols", "indptr", "indices", "data", "_csr")

    def __init__(self, n_rows, n_cols, indptr, indices, data):
        self.n_rows = int(n_rows)
        self.n_cols = int(n_cols)
        self.indptr = np.asarray(indptr, dtype=np.int64)
        self.indices = np.asarray(indices, dtype=np.int64)
        self.data = np.asarray(data, dtype=np.float64)
        if len(self.indptr) != self.n_rows + 1 or self.indptr[-1] != len(self.indices):
            raise InvalidArgumentError("inconsistent row offsets")
        if len(self.data) != len(self.indices):
            raise InvalidArgumentError("values and column indices differ in length")
        self._csr = None

    @property
    def shape(self):
        return (self.n_rows, self.n_cols)

    @property
    def nnz(self):
        return len(self.data)

    def tocsr(self):
        """The same matrix as a :class:`scipy.sparse.csr_matrix` (shared buffers)."""
        if self._csr is None:
            self._csr = sp.csr_matrix((self.data, self.indices, self.indptr), shape=self.shape)
        return self._csr

    def toarray(self):
        return self.tocsr().toarray()

    def row_of(self):
        """Row index of each stored entry."""
        return np.repeat(np.arange(self.n_rows), np.diff(self.indptr))

    def with_data(self, data):
        return SparseMatrix(self.n_rows, self.n_cols, self.indptr, self.indices, data)

    def __add__(self, other):
        return _from_scipy(self.tocsr() + other.tocsr())

    def __sub__(self, other):
        return _from_scipy(self.tocsr() - other.tocsr())

    def __mul__(self, scalar):
        return self.with_data(self.data * float(scalar))

    __rmul__ = __mul__

    def __repr__(self):
        return f"SparseMatrix({self.n_rows}x{self.n_cols}, nnz={self.nnz})"


def _from_scipy(m):
    m = sp.csr_matrix(m)
    m.sum_duplicates()
    m.sort_indices()
    return SparseMatrix(m.shape[0], m.shape[1], m.indptr, m.indices, m.data)


def from_dense(a):
    return _from_scipy(sp.csr_matrix(np.asarray(a, dtype=float)))


class Triplets:
    """Accumulates (row, col, value) entries; duplicates sum on compression."""

    def __init__(self):
        self._rows, self._cols, self._vals = [], [], []

    def add(self, row, col, value):
        self._rows.append(np.atleast_1d(np.asarray(row, dtype=np.int64)).ravel())
        self._cols.append(np.atleast_1d(np.asarray(col, dtype=np.int64)).ravel())
        self._vals.append(np.atleast_1d(np.asarray(value, dtype=np.float64)).ravel())

    def arrays(self):
        if not self._rows:
            return (np.empty(0, np.int64), np.empty(0, np.int64), np.empty(0))
        return (np.concatenate(self._rows), np.concatenate(self._cols),
                np.concatenate(self._vals))

    def __len__(self):
        return sum(len(r) for r in self._rows)


def compress(t, n_rows, n_cols):
    """Compress triplets into CSR.

    Entries are sorted by (row, col, value) before duplicate summation, so
    any permutation of the same triplets gives bitwise-identical output.
    """
    rows, cols, vals = t.arrays() if isinstance(t, Triplets) else map(np.asarray, t)
    rows = np.asarray(rows, dtype=np.int64)
    cols = np.asarray(cols, dtype=np.int64)
    vals = np.asarray(vals, dtype=np.float64)
    if len(rows) and (rows.min() < 0 or rows.max() >= n_rows
                      or cols.min() < 0 or cols.max() >= n_cols):
        raise InvalidArgumentError("triplet index out of range")
    order = np.lexsort((vals, cols, rows))
    rows, cols, vals = rows[order], cols[order], vals[order]
    if len(rows):
        start = np.concatenate([[True], (rows[1:] != rows[:-1]) | (cols[1:] != cols[:-1])])
        first = np.flatnonzero(start)
        data = np.add.reduceat(vals, first)
        rows, cols = rows[first], cols[first]
    else:
        data = vals
    indptr = np.searchsorted(rows, np.arange(n_rows + 1))
    return SparseMatrix(n_rows, n_cols, indptr, cols, data)


def matvec(a, x):
    x = np.asarray(x, dtype=float)
    if x.shape != (a.n_cols,):
        raise InvalidArgumentError(f"vector of length {x.shape} for matrix {a.shape}")
    return a.tocsr() @ x


def solve(a, rhs):
    """Solve ``a x = rhs`` by sparse LU with partial pivoting."""
    if a.n_rows != a.n_cols:
        raise InvalidArgumentError("matrix must be square")
    rhs = np.asarray(rhs, dtype=float)
    if rhs.shape != (a.n_rows,):
        raise InvalidArgumentError("right-hand side length mismatch")
    csc = a.tocsr().tocsc()
    scale = np.abs(a.data).max() if a.nnz else 0.0
    if scale == 0.0:
        raise SingularMatrixError("zero matrix")
    try:
        lu = spla.splu(csc, permc_spec="COLAMD", diag_pivot_thresh=1.0)
    except RuntimeError as exc:
        raise SingularMatrixError(str(exc)) from None
    if np.abs(lu.U.diagonal()).min() < PIVOT_RTOL * scale:
        raise SingularMatrixError("pivot below threshold")
    x = lu.solve(rhs)
    res = np.abs(a.tocsr() @ x - rhs).max() / (np.abs(rhs).max() + 1.0)
    if not np.isfinite(res) or res > RESIDUAL_TOL:
        # one step of iterative refinement before giving up
        x = x + lu.solve(rhs - a.tocsr() @ x)
        res = np.abs(a.tocsr() @ x - rhs).max() / (np.abs(rhs).max() + 1.0)
        if not np.isfinite(res) or res > RESIDUAL_TOL:
            raise SingularMatrixError(f"residual {res:.3e} after refinement")
    return x


def write_matrix_market(a, path):
    """Debug dump: one ``row col value`` line per stored entry (0-based)."""
    rows = a.row_of()
    with open(path, "w") as fh:
        for r, c, v in zip(rows, a.indices, a.data):
            fh.write(f"{int(r)} {int(c)} {float(v)!r}\n")
