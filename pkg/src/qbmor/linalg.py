"""Dense linear algebra kernels and Kronecker-structured quadratic operators.

All routines work on plain numpy arrays (real or complex).  Quadratic terms
of size n x n^2 are never stored as dense two-dimensional matrices at scale;
:class:`QuadraticOperator` keeps them as n column slices of shape n x n
(dense 3-d array or a list of sparse matrices) and applies Kronecker products
column-block-wise.
"""

from __future__ import annotations

import warnings

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from .errors import DimensionMismatch, RankTooSmall, SingularMatrix

#: |pivot| below this times max|A| is treated as singular.
SINGULARITY_RTOL = 1e-13

#: Default orthonormalization cutoff relative to max|X|.
RANK_RTOL = 1e-10


class LuFactorization:
    """LU decomposition with partial pivoting and an explicit singularity check.

    Wraps LAPACK's getrf/getrs.  Construction raises
    :class:`~qbmor.errors.SingularMatrix` when a pivot falls below
    ``SINGULARITY_RTOL * max|A|``, so downstream code never silently divides
    by a vanishing pivot.
    """

    __slots__ = ("_lu", "_piv", "n", "dtype")

    def __init__(self, a):
        a = np.asarray(a)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise DimensionMismatch(f"expected a square matrix, got shape {a.shape}")
        if a.size and not np.all(np.isfinite(a)):
            raise ValueError("matrix has non-finite entries")
        scale = np.max(np.abs(a)) if a.size else 0.0
        if scale == 0.0:
            raise SingularMatrix("matrix is identically zero")
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")  # LAPACK warns before we can check pivots
            lu, piv = sla.lu_factor(a, check_finite=False)
        pivots = np.abs(np.diag(lu))
        if pivots.size and pivots.min() < SINGULARITY_RTOL * scale:
            raise SingularMatrix(
                f"pivot {pivots.min():.3e} below tolerance "
                f"{SINGULARITY_RTOL * scale:.3e}"
            )
        self._lu = lu
        self._piv = piv
        self.n = a.shape[0]
        self.dtype = lu.dtype

    def solve(self, b, adjoint: bool = False) -> np.ndarray:
        """Solve ``A x = b`` (or ``A^H x = b`` when ``adjoint``) for one or
        several right-hand sides."""
        b = np.asarray(b)
        if b.shape[0] != self.n:
            raise DimensionMismatch(
                f"right-hand side has {b.shape[0]} rows, expected {self.n}"
            )
        trans = 2 if adjoint else 0
        if np.iscomplexobj(b) and not np.iscomplexobj(self._lu):
            # Two real triangular solves beat factorizing the complex matrix.
            xr = sla.lu_solve((self._lu, self._piv), b.real, trans=trans, check_finite=False)
            xi = sla.lu_solve((self._lu, self._piv), b.imag, trans=trans, check_finite=False)
            return xr + 1j * xi
        return sla.lu_solve((self._lu, self._piv), b, trans=trans, check_finite=False)


def lu_factor(a) -> LuFactorization:
    """Factorize a square matrix for repeated solves."""
    return LuFactorization(a)


def solve(factorization: LuFactorization, b) -> np.ndarray:
    """Solve with a previously computed :class:`LuFactorization`."""
    return factorization.solve(b)


def kron_dims(a: tuple, b: tuple) -> tuple:
    """Shape of the Kronecker product of matrices with shapes ``a`` and ``b``."""
    return (a[0] * b[0], a[1] * b[1])


def orthonormalize(x, rank_tol: float | None = None) -> np.ndarray:
    """Orthonormal basis for the column span of ``x``.

    Rank-deficient directions (singular values at or below ``rank_tol``,
    default ``RANK_RTOL * max|x|``) are dropped, so repeated or dependent
    columns collapse gracefully.  May return fewer columns than the input.
    """
    x = np.atleast_2d(np.asarray(x))
    if x.shape[1] == 0 or x.size == 0:
        return np.zeros((x.shape[0], 0), dtype=x.dtype)
    if rank_tol is None:
        rank_tol = RANK_RTOL * np.max(np.abs(x))
    u, s, _ = np.linalg.svd(x, full_matrices=False)
    keep = int(np.count_nonzero(s > rank_tol))
    return u[:, :keep]


def truncated_svd_basis(x, r: int) -> np.ndarray:
    """The ``r`` leading left singular vectors of ``x``.

    Raises :class:`~qbmor.errors.RankTooSmall` when the numerical rank of
    ``x`` is below ``r`` (insufficient sampling).
    """
    x = np.asarray(x)
    if r > min(x.shape):
        raise RankTooSmall(f"requested {r} vectors from a {x.shape} matrix")
    u, s, _ = np.linalg.svd(x, full_matrices=False)
    if s[0] == 0.0:
        raise RankTooSmall("input matrix is zero")
    tol = max(x.shape) * np.finfo(s.dtype).eps * s[0]
    rank = int(np.count_nonzero(s > tol))
    if rank < r:
        raise RankTooSmall(f"numerical rank {rank} is below the requested {r}")
    return u[:, :r]


def _is_sparse(m) -> bool:
    return sp.issparse(m)


class QuadraticOperator:
    """A quadratic form H acting as ``H (x (x) y)`` without building x (x) y.

    Stored as n slices of shape n x n, where slice j multiplies the j-th
    entry of the left Kronecker factor::

        apply(x, y)[i] = sum_j x[j] * (slice_j @ y)[i]

    Dense slices live in a single (n, n, n) array; sparse slices in a list of
    CSR matrices with lazily built stacked forms for fast products.
    """

    def __init__(self, slices=None, tensor=None, n=None):
        if tensor is not None:
            tensor = np.asarray(tensor)
            if tensor.ndim != 3 or not (tensor.shape[0] == tensor.shape[1] == tensor.shape[2]):
                raise DimensionMismatch(f"expected (n, n, n) slices, got {tensor.shape}")
            self.n = tensor.shape[0]
            if np.any(tensor):
                self._tensor = tensor
                self._slices = None
            else:
                self._tensor = None
                self._slices = None
        elif slices is not None:
            slices = list(slices)
            n = len(slices)
            for s in slices:
                if s.shape != (n, n):
                    raise DimensionMismatch(
                        f"slice of shape {s.shape} in an operator of size {n}"
                    )
            self.n = n
            if any(_is_sparse(s) for s in slices):
                csr = [sp.csr_matrix(s) for s in slices]
                if sum(s.nnz for s in csr):
                    self._tensor = None
                    self._slices = csr
                else:
                    self._tensor = None
                    self._slices = None
            else:
                stacked = np.stack([np.asarray(s) for s in slices])
                self._tensor = stacked if np.any(stacked) else None
                self._slices = None
        else:
            if n is None:
                raise ValueError("need slices, tensor or n")
            self.n = int(n)
            self._tensor = None
            self._slices = None
        # lazily built stacked forms for the sparse path
        self._row_stacked = None  # (n^2, n): vstack of slices
        self._vec_stacked = None  # (n^2, n): column j = vec(slice_j)

    # -- constructors -----------------------------------------------------

    @classmethod
    def zeros(cls, n: int) -> "QuadraticOperator":
        return cls(n=n)

    @classmethod
    def from_flat(cls, h, n: int | None = None) -> "QuadraticOperator":
        """Build from the flat n x n^2 layout with slice j in columns
        ``j*n:(j+1)*n``."""
        h = np.asarray(h)
        if n is None:
            n = h.shape[0]
        if h.shape != (n, n * n):
            raise DimensionMismatch(f"expected ({n}, {n * n}), got {h.shape}")
        return cls(tensor=np.stack([h[:, j * n:(j + 1) * n] for j in range(n)]))

    @classmethod
    def coerce(cls, h, n: int) -> "QuadraticOperator":
        """Accept ``None`` (zero), an existing operator, an (n, n, n) slice
        array, or a flat n x n^2 matrix."""
        if h is None:
            return cls.zeros(n)
        if isinstance(h, cls):
            if h.n != n:
                raise DimensionMismatch(f"operator of size {h.n}, expected {n}")
            return h
        h_arr = np.asarray(h) if not _is_sparse(h) else h
        if not _is_sparse(h_arr) and h_arr.ndim == 3:
            return cls(tensor=h_arr)
        return cls.from_flat(h_arr, n)

    # -- basic properties --------------------------------------------------

    @property
    def is_zero(self) -> bool:
        return self._tensor is None and self._slices is None

    @property
    def is_sparse(self) -> bool:
        return self._slices is not None

    def slices(self) -> list:
        if self.is_zero:
            return [sp.csr_matrix((self.n, self.n)) for _ in range(self.n)]
        if self._slices is not None:
            return list(self._slices)
        return [self._tensor[j] for j in range(self.n)]

    def to_flat(self) -> np.ndarray:
        """Dense n x n^2 layout (small systems only; used by cross-checks)."""
        if self.is_zero:
            return np.zeros((self.n, self.n * self.n))
        sl = [np.asarray(s.todense()) if _is_sparse(s) else s for s in self.slices()]
        return np.hstack(sl)

    def _stacked_rows(self):
        if self._row_stacked is None:
            self._row_stacked = sp.vstack([sp.csr_matrix(s) for s in self._slices],
                                          format="csr")
        return self._row_stacked

    def _stacked_vecs(self):
        if self._vec_stacked is None:
            cols = [sp.csr_matrix(s.reshape(self.n * self.n, 1)) for s in self._slices]
            self._vec_stacked = sp.hstack(cols, format="csr")
        return self._vec_stacked

    # -- products ----------------------------------------------------------

    def apply(self, x, y) -> np.ndarray:
        """``H (x (x) y)`` for vectors x, y of length n."""
        x = np.asarray(x)
        y = np.asarray(y)
        if x.shape[0] != self.n or y.shape[0] != self.n:
            raise DimensionMismatch("vector length does not match operator size")
        if self.is_zero:
            return np.zeros(self.n, dtype=np.result_type(x, y, float))
        if self._tensor is not None:
            m = np.tensordot(x, self._tensor, axes=(0, 0))
            return m @ y
        r = (self._stacked_rows() @ y).reshape(self.n, self.n)
        return r.T @ x

    def apply_block(self, x_block, y_block) -> np.ndarray:
        """``H (X (x) Y)`` for column blocks X (n x a) and Y (n x b).

        The result has a*b columns ordered like ``np.kron(X, Y)``: the column
        for (x_i, y_j) sits at index i*b + j.
        """
        x_block = np.atleast_2d(np.asarray(x_block))
        y_block = np.atleast_2d(np.asarray(y_block))
        a, b = x_block.shape[1], y_block.shape[1]
        if x_block.shape[0] != self.n or y_block.shape[0] != self.n:
            raise DimensionMismatch("block rows do not match operator size")
        if self.is_zero:
            return np.zeros((self.n, a * b), dtype=np.result_type(x_block, y_block, float))
        if self._tensor is not None:
            t = np.tensordot(x_block, self._tensor, axes=(0, 0))  # (a, n, n)
            out = t @ y_block  # (a, n, b)
        else:
            t = (self._stacked_rows() @ y_block).reshape(self.n, self.n, b)
            out = np.tensordot(x_block, t, axes=(0, 0))  # (a, n, b)
        return out.transpose(1, 0, 2).reshape(self.n, a * b)

    def jacobian(self, x) -> np.ndarray:
        """Dense Jacobian of ``x -> H (x (x) x)`` at ``x``:
        ``J v = H (v (x) x) + H (x (x) v)``."""
        x = np.asarray(x)
        if self.is_zero:
            return np.zeros((self.n, self.n), dtype=np.result_type(x, float))
        if self._tensor is not None:
            m_right = np.tensordot(x, self._tensor, axes=(0, 0))
            m_left = np.tensordot(self._tensor, x, axes=(2, 0)).T
            return m_left + m_right
        m_right = (self._stacked_vecs() @ x).reshape(self.n, self.n)
        m_left = (self._stacked_rows() @ x).reshape(self.n, self.n).T
        return m_left + m_right

    def compress(self, w_adj, v) -> "QuadraticOperator":
        """Project to order r: slices of ``W^H H (V (x) V)`` with
        ``w_adj = W^H`` (r x n) and ``v`` (n x r)."""
        w_adj = np.asarray(w_adj)
        v = np.asarray(v)
        r = v.shape[1]
        if w_adj.shape != (r, self.n) or v.shape != (self.n, r):
            raise DimensionMismatch(
                f"incompatible projection shapes {w_adj.shape}, {v.shape} "
                f"for operator size {self.n}"
            )
        if self.is_zero:
            return QuadraticOperator.zeros(r)
        if self._tensor is not None:
            t = np.tensordot(self._tensor, v, axes=(2, 0))      # (n, n, r)
            t = np.tensordot(t, w_adj, axes=(1, 1))             # (n, r, r') -> slices^T
            t = t.transpose(0, 2, 1)                            # (n, r', r)
        else:
            mats = []
            for s in self._slices:
                if s.nnz == 0:
                    mats.append(np.zeros((r, r), dtype=np.result_type(w_adj, v)))
                else:
                    mats.append(w_adj @ (s @ v))
            t = np.stack(mats)
        reduced = np.tensordot(v, t, axes=(0, 0))               # (r, r, r)
        return QuadraticOperator(tensor=reduced)

    def scaled(self, alpha) -> "QuadraticOperator":
        if self.is_zero:
            return QuadraticOperator.zeros(self.n)
        if self._tensor is not None:
            return QuadraticOperator(tensor=alpha * self._tensor)
        return QuadraticOperator(slices=[alpha * s for s in self._slices])

    @staticmethod
    def linear_combination(coeffs, ops) -> "QuadraticOperator":
        """``sum_k coeffs[k] * ops[k]`` as a single operator."""
        coeffs = list(coeffs)
        ops = list(ops)
        if len(coeffs) != len(ops):
            raise DimensionMismatch("one coefficient per operator required")
        if not ops:
            raise ValueError("need at least one operator")
        return _combine(coeffs, ops)


def _combine(coeffs, ops) -> QuadraticOperator:
    n = ops[0].n
    pairs = [(c, op) for c, op in zip(coeffs, ops) if not op.is_zero and c != 0]
    if not pairs:
        return QuadraticOperator.zeros(n)
    if all(op._tensor is not None for _, op in pairs):
        acc = sum(c * op._tensor for c, op in pairs)
        return QuadraticOperator(tensor=acc)
    out = []
    for j in range(n):
        acc = None
        for c, op in pairs:
            piece = op.slices()[j]
            piece = c * (piece if _is_sparse(piece) else sp.csr_matrix(piece))
            acc = piece if acc is None else acc + piece
        out.append(acc)
    return QuadraticOperator(slices=out)
