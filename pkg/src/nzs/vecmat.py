"""Dense vector validation and compressed-sparse-row matrix kernels.

Every oracle in the library reduces to the three kernels here: CSR
matrix-vector products (forward and transposed) and a power-iteration
spectral norm. Products run row-sequentially so serial runs are
bitwise reproducible.
"""

import numpy as np
import scipy.sparse as _sp


class SpectralNormError(RuntimeError):
    """Power iteration failed to converge; carries the last estimate."""

    def __init__(self, message, estimate):
        super().__init__(message)
        self.estimate = estimate


def as_vector(entries):
    """Copy ``entries`` into a 1-D float64 array, rejecting NaN/Inf."""
    v = np.array(entries, dtype=np.float64)
    if v.ndim != 1:
        raise ValueError(f"expected a 1-D vector, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError("vector entries must be finite")
    return v


class SparseMatrix:
    """CSR matrix with validated structure.

    Invariants checked at construction: row offsets monotone nondecreasing
    with length n_rows + 1, column indices strictly increasing within each
    row, and finite values.
    """

    __slots__ = ("n_rows", "n_cols", "row_offsets", "col_indices", "values",
                 "_csr", "_csr_t")

    def __init__(self, n_rows, n_cols, row_offsets, col_indices, values,
                 validate=True):
        self.n_rows = int(n_rows)
        self.n_cols = int(n_cols)
        self.row_offsets = np.asarray(row_offsets, dtype=np.int64)
        self.col_indices = np.asarray(col_indices, dtype=np.int64)
        self.values = np.asarray(values, dtype=np.float64)
        self._csr = None
        self._csr_t = None
        if validate:
            self._validate()

    def _validate(self):
        if self.n_rows <= 0 or self.n_cols <= 0:
            raise ValueError("matrix dimensions must be positive")
        off = self.row_offsets
        if off.shape != (self.n_rows + 1,):
            raise ValueError("row_offsets must have length n_rows + 1")
        if off[0] != 0 or off[-1] != len(self.values):
            raise ValueError("row_offsets must start at 0 and end at nnz")
        if np.any(np.diff(off) < 0):
            raise ValueError("row_offsets must be nondecreasing")
        if len(self.col_indices) != len(self.values):
            raise ValueError("col_indices and values must have equal length")
        if len(self.col_indices):
            if self.col_indices.min() < 0 or self.col_indices.max() >= self.n_cols:
                raise ValueError("column index out of range")
            # strictly increasing inside each row: diffs may only be <= 0 at
            # row boundaries
            d = np.diff(self.col_indices)
            starts = off[1:-1] - 1  # positions of last element of each row
            bad = d <= 0
            bad[starts[(starts >= 0) & (starts < len(d))]] = False
            if np.any(bad):
                raise ValueError("col_indices must be strictly increasing per row")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("matrix values must be finite")

    # -- constructors ------------------------------------------------------

    @classmethod
    def from_coo(cls, rows, cols, values, shape):
        """Build from coordinate triplets. Duplicate coordinates are an error."""
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        values = np.asarray(values, dtype=np.float64)
        n_rows, n_cols = shape
        order = np.lexsort((cols, rows))
        rows, cols, values = rows[order], cols[order], values[order]
        if len(rows) > 1:
            same = (np.diff(rows) == 0) & (np.diff(cols) == 0)
            if np.any(same):
                raise ValueError("duplicate coordinates in COO input")
        offsets = np.zeros(n_rows + 1, dtype=np.int64)
        np.add.at(offsets, rows + 1, 1)
        np.cumsum(offsets, out=offsets)
        return cls(n_rows, n_cols, offsets, cols, values)

    @classmethod
    def from_dense(cls, array, keep_pattern_of=None):
        """Build from a dense 2-D array, dropping zeros.

        If ``keep_pattern_of`` is given (another SparseMatrix), reuse its
        sparsity pattern and just read values off the dense array.
        """
        a = np.asarray(array, dtype=np.float64)
        if a.ndim != 2:
            raise ValueError("expected a 2-D array")
        if keep_pattern_of is not None:
            p = keep_pattern_of
            rows = np.repeat(np.arange(p.n_rows), np.diff(p.row_offsets))
            vals = a[rows, p.col_indices]
            return cls(p.n_rows, p.n_cols, p.row_offsets.copy(),
                       p.col_indices.copy(), vals)
        rows, cols = np.nonzero(a)
        return cls.from_coo(rows, cols, a[rows, cols], a.shape)

    @classmethod
    def identity(cls, n):
        idx = np.arange(n, dtype=np.int64)
        return cls(n, n, np.arange(n + 1, dtype=np.int64), idx, np.ones(n))

    # -- basic views -------------------------------------------------------

    @property
    def shape(self):
        return (self.n_rows, self.n_cols)

    @property
    def nnz(self):
        return len(self.values)

    def to_dense(self):
        out = np.zeros((self.n_rows, self.n_cols))
        rows = np.repeat(np.arange(self.n_rows), np.diff(self.row_offsets))
        out[rows, self.col_indices] = self.values
        return out

    def with_values(self, values):
        """Same pattern, new values (no revalidation of structure)."""
        values = np.asarray(values, dtype=np.float64)
        if values.shape != self.values.shape:
            raise ValueError("value array must match the sparsity pattern")
        if not np.all(np.isfinite(values)):
            raise ValueError("matrix values must be finite")
        return SparseMatrix(self.n_rows, self.n_cols, self.row_offsets,
                            self.col_indices, values, validate=False)

    def scaled(self, c):
        return self.with_values(self.values * float(c))

    def _scipy(self):
        if self._csr is None:
            self._csr = _sp.csr_matrix(
                (self.values, self.col_indices, self.row_offsets),
                shape=self.shape)
        return self._csr

    def _scipy_t(self):
        # transposed copy in CSR layout so the transposed product is also a
        # row-sequential kernel
        if self._csr_t is None:
            self._csr_t = _sp.csr_matrix(self._scipy().T)
        return self._csr_t

    def transpose(self):
        t = self._scipy_t()
        return SparseMatrix(self.n_cols, self.n_rows, t.indptr.astype(np.int64),
                            t.indices.astype(np.int64), t.data,
                            validate=False)


def spmv(A, x):
    """Row-sequential product A @ x.

    Summation runs left to right within each row, so repeated serial calls
    are bitwise identical.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (A.n_cols,):
        raise ValueError(f"dimension mismatch: matrix is {A.shape}, vector has "
                         f"length {x.shape}")
    return A._scipy() @ x


def spmv_transpose(A, y):
    """Row-sequential product A.T @ y (on a cached transposed layout)."""
    y = np.asarray(y, dtype=np.float64)
    if y.shape != (A.n_rows,):
        raise ValueError(f"dimension mismatch: matrix is {A.shape}, vector has "
                         f"length {y.shape}")
    return A._scipy_t() @ y


def spectral_norm(A, tol=1e-8, max_iter=10000, seed=0):
    """Largest singular value by power iteration on A.T A.

    Returns sigma with |sigma - ||A||_2| <= tol * ||A||_2 for generic
    matrices (relative-change test must hold on three consecutive sweeps).

    Raises SpectralNormError (carrying the last estimate) if max_iter is
    exhausted first.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if A.nnz == 0:
        return 0.0
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(A.n_cols)
    for _ in range(4):
        nv = np.linalg.norm(v)
        if nv > 0:
            break
        v = rng.standard_normal(A.n_cols)
    v /= np.linalg.norm(v)
    lam_prev = 0.0
    streak = 0
    for _ in range(max_iter):
        w = spmv(A, v)
        lam = float(w @ w)  # Rayleigh quotient of A.T A at unit v
        if lam == 0.0:
            v = rng.standard_normal(A.n_cols)
            v /= np.linalg.norm(v)
            continue
        v = spmv_transpose(A, w)
        v /= np.linalg.norm(v)
        if abs(lam - lam_prev) <= tol * lam:
            streak += 1
            if streak >= 3:
                return float(np.sqrt(lam))
        else:
            streak = 0
        lam_prev = lam
    raise SpectralNormError(
        f"power iteration did not converge in {max_iter} sweeps",
        estimate=float(np.sqrt(lam_prev)))
