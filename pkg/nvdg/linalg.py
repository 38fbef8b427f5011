#
# nvdg - A discontinuous Galerkin solver for nonvariational elliptic problems
# Copyright (C) 2026  nvdg contributors
#
# This program is free software: you can redistribute it and/or modify
# it under the terms of the GNU General Public License as published by
# the Free Software Foundation, either version 3 of the License, or
# (at your option) any later version.
#
# This program is distributed in the hope that it will be useful,
# but WITHOUT ANY WARRANTY; without even the implied warranty of
# MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE.  See the
# GNU General Public License for more details.
#
# You should have received a copy of the GNU General Public License
# along with this program.  If not, see <https://www.gnu.org/licenses/>.
#

"""
Sparse CSR matrices, BiCGSTAB with ILU(0)/Jacobi preconditioning and
small dense solves.
"""

import logging
from dataclasses import dataclass

import numba
import numpy as np
import scipy.io
import scipy.linalg
import scipy.sparse as sp

logging.basicConfig()
logger = logging.getLogger('nvdg.linalg')

PRECONDITIONERS = ("ilu0", "jacobi", "none")


class DimensionError(ValueError):
    pass


class SingularMatrixError(ArithmeticError):
    pass


class ZeroPivotError(ArithmeticError):
    pass


@numba.njit(parallel=True, cache=True)
def _csr_matvec(indptr, indices, data, x):
    n = indptr.shape[0] - 1
    y = np.empty(n)
    for i in numba.prange(n):
        acc = 0.0
        for jj in range(indptr[i], indptr[i + 1]):
            acc += data[jj] * x[indices[jj]]
        y[i] = acc
    return y


@numba.njit(cache=True)
def _csr_abs_matvec(indptr, indices, data, x):
    n = indptr.shape[0] - 1
    y = np.empty(n)
    for i in range(n):
        acc = 0.0
        for jj in range(indptr[i], indptr[i + 1]):
            acc += abs(data[jj]) * abs(x[indices[jj]])
        y[i] = acc
    return y


@numba.njit(cache=True)
def _ilu0_inplace(indptr, indices, data, diag):
    """IKJ variant of ILU(0) on a CSR copy with sorted column indices.

    Returns -1 on success, otherwise the row where a zero pivot showed up.
    """
    n = indptr.shape[0] - 1
    marker = np.full(n, -1, dtype=np.int64)
    for i in range(n):
        start, end = indptr[i], indptr[i + 1]
        for jj in range(start, end):
            marker[indices[jj]] = jj
        for kk in range(start, end):
            k = indices[kk]
            if k >= i:
                break
            pivot = data[diag[k]]
            if pivot == 0.0:
                return k
            data[kk] /= pivot
            lik = data[kk]
            for jj in range(diag[k] + 1, indptr[k + 1]):
                pos = marker[indices[jj]]
                if pos >= 0:
                    data[pos] -= lik * data[jj]
        for jj in range(start, end):
            marker[indices[jj]] = -1
        if data[diag[i]] == 0.0:
            return i
    return -1


@numba.njit(cache=True)
def _ilu0_solve(indptr, indices, data, diag, b):
    n = b.shape[0]
    y = np.empty(n)
    for i in range(n):
        acc = b[i]
        for jj in range(indptr[i], diag[i]):
            acc -= data[jj] * y[indices[jj]]
        y[i] = acc
    x = np.empty(n)
    for i in range(n - 1, -1, -1):
        acc = y[i]
        for jj in range(diag[i] + 1, indptr[i + 1]):
            acc -= data[jj] * x[indices[jj]]
        x[i] = acc / data[diag[i]]
    return x


@dataclass(frozen=True)
class BlockStats:
    nnz: int
    n_block_rows: int
    max_blocks_per_row: int
    max_bandwidth: int


class CsrMatrix:
    """Square sparse matrix in compressed row storage.

    Column indices are sorted and unique in every row.
    """

    def __init__(self, indptr, indices, data, n):
        self.indptr = np.ascontiguousarray(indptr, dtype=np.int64)
        self.indices = np.ascontiguousarray(indices, dtype=np.int64)
        self.data = np.ascontiguousarray(data, dtype=float)
        self.n = int(n)
        if self.indptr.shape[0] != self.n + 1:
            raise DimensionError(f"row pointer of length {self.indptr.shape[0]} "
                                 f"for a {self.n}x{self.n} matrix")
        if self.indices.shape != self.data.shape or self.indptr[-1] != self.data.shape[0]:
            raise DimensionError("inconsistent CSR arrays")

    @classmethod
    def from_scipy(cls, mat):
        if mat.shape[0] != mat.shape[1]:
            raise DimensionError(f"matrix must be square, got {mat.shape}")
        csr = sp.csr_matrix(mat)
        csr.sum_duplicates()
        csr.sort_indices()
        return cls(csr.indptr, csr.indices, csr.data, csr.shape[0])

    @classmethod
    def from_triplets(cls, rows, cols, vals, n):
        """Sum duplicate (row, col) entries, as in COO assembly."""
        coo = sp.coo_matrix((np.ravel(vals), (np.ravel(rows), np.ravel(cols))), shape=(n, n))
        return cls.from_scipy(coo.tocsr())

    @classmethod
    def from_dense(cls, a):
        return cls.from_scipy(sp.csr_matrix(np.asarray(a, dtype=float)))

    @property
    def shape(self):
        return (self.n, self.n)

    @property
    def nnz(self):
        return int(self.data.shape[0])

    def to_scipy(self):
        return sp.csr_matrix((self.data, self.indices, self.indptr), shape=self.shape)

    def to_dense(self):
        return self.to_scipy().toarray()

    def transpose(self):
        return CsrMatrix.from_scipy(self.to_scipy().T.tocsr())

    def diagonal(self):
        return self.to_scipy().diagonal()

    def matvec(self, x):
        x = np.ascontiguousarray(x, dtype=float)
        if x.shape != (self.n,):
            raise DimensionError(f"vector of shape {x.shape} for a {self.n}x{self.n} matrix")
        return _csr_matvec(self.indptr, self.indices, self.data, x)

    def abs_matvec(self, x):
        return _csr_abs_matvec(self.indptr, self.indices, self.data,
                               np.ascontiguousarray(x, dtype=float))

    def __matmul__(self, x):
        return self.matvec(x)

    def max_row_nnz(self):
        return int(np.diff(self.indptr).max()) if self.n else 0

    def block_stats(self, n_loc):
        """Coupling between element blocks of size `n_loc`."""
        rows = np.repeat(np.arange(self.n), np.diff(self.indptr))
        nz = self.data != 0.0
        brows = rows[nz] // n_loc
        bcols = self.indices[nz] // n_loc
        pairs = np.unique(np.column_stack((brows, bcols)), axis=0)
        per_row = np.bincount(pairs[:, 0], minlength=self.n // n_loc)
        bandwidth = int(np.abs(rows[nz] - self.indices[nz]).max()) if nz.any() else 0
        return BlockStats(self.nnz, self.n // n_loc, int(per_row.max()), bandwidth)

    def __repr__(self):
        return f"<CsrMatrix n={self.n} nnz={self.nnz}>"


def dense_solve(m, b):
    """Partial-pivoted LU solve of a small dense system."""
    m = np.asarray(m, dtype=float)
    b = np.asarray(b, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionError(f"matrix must be square, got {m.shape}")
    if b.shape[0] != m.shape[0]:
        raise DimensionError(f"right-hand side of shape {b.shape} for a {m.shape} matrix")

    lu, piv = scipy.linalg.lu_factor(m, check_finite=True)
    pivots = np.abs(np.diag(lu))
    scale = np.abs(m).max() if m.size else 0.0
    if scale == 0.0 or pivots.min() <= 1e3 * np.finfo(float).eps * scale:
        raise SingularMatrixError(f"singular matrix (smallest pivot {pivots.min():.3e})")
    return scipy.linalg.lu_solve((lu, piv), b)


class IdentityPreconditioner:
    name = "none"

    def apply(self, r):
        return r.copy()


class JacobiPreconditioner:
    name = "jacobi"

    def __init__(self, k):
        d = k.diagonal()
        if np.any(d == 0.0):
            raise ZeroPivotError("zero diagonal entry, Jacobi undefined")
        self.inv_diag = 1.0 / d

    def apply(self, r):
        return self.inv_diag * r


class Ilu0Preconditioner:
    """L and U stored in the pattern of K, L with unit diagonal."""
    name = "ilu0"

    def __init__(self, k):
        self.indptr = k.indptr
        self.indices = k.indices
        self.data, self.diag = ilu0_factor(k)

    def apply(self, r):
        return _ilu0_solve(self.indptr, self.indices, self.data, self.diag,
                           np.ascontiguousarray(r, dtype=float))


def _diagonal_pointers(k):
    rows = np.repeat(np.arange(k.n), np.diff(k.indptr))
    on_diag = np.flatnonzero(k.indices == rows)
    diag = np.full(k.n, -1, dtype=np.int64)
    diag[rows[on_diag]] = on_diag
    return diag


def ilu0_factor(k):
    """Incomplete LU without fill-in. Returns (factor values, diagonal
    positions) sharing the index arrays of `k`.
    """
    logger.debug(f"({k=})")
    diag = _diagonal_pointers(k)
    if np.any(diag < 0):
        raise ZeroPivotError(f"row {int(np.argmin(diag))} has no diagonal entry")
    data = k.data.copy()
    bad = _ilu0_inplace(k.indptr, k.indices, data, diag)
    if bad >= 0:
        raise ZeroPivotError(f"zero pivot in row {bad}")
    return data, diag


def make_preconditioner(k, kind):
    logger.debug(f"({k=}, {kind=})")
    if kind not in PRECONDITIONERS:
        raise ValueError(f"unknown preconditioner {kind!r}, expected one of {PRECONDITIONERS}")
    if kind == "none":
        return IdentityPreconditioner()
    if kind == "ilu0":
        try:
            return Ilu0Preconditioner(k)
        except ZeroPivotError as exc:
            logger.warning(f"ILU(0) failed ({exc}), falling back to Jacobi")
    try:
        return JacobiPreconditioner(k)
    except ZeroPivotError as exc:
        logger.warning(f"{exc}, running unpreconditioned")
        return IdentityPreconditioner()


@dataclass(frozen=True)
class SolverConfig:
    tol: float = 1e-12
    precond: str = "ilu0"
    max_iter: int = None


@dataclass(frozen=True)
class SolverReport:
    """Outcome of a Krylov solve.

    `residual` is the recomputed ||b - Kx|| / ||b||. `floor` is the
    attainable relative residual in floating point for the returned x;
    a run counts as converged once the residual is below max(tol, floor).
    """
    iterations: int
    residual: float
    converged: bool
    reason: str
    precond: str
    floor: float = 0.0


def attainable_residual(k, x, b):
    """Rounding-error bound on the relative residual of `x`."""
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return 0.0
    bound = k.abs_matvec(x) + np.abs(b)
    return float((k.max_row_nnz() + 1) * np.finfo(float).eps * np.linalg.norm(bound) / bnorm)


def bicgstab(k, b, precond="ilu0", tol=1e-12, max_iter=None, x0=None, max_restarts=20):
    """Right-preconditioned BiCGSTAB.

    The recursive residual is checked against the true one whenever it
    claims convergence; on disagreement the iteration restarts from the
    current iterate. Breakdowns and an exhausted budget end the run with
    `converged=False`.
    """
    logger.debug(f"({k=}, {precond=}, {tol=}, {max_iter=})")
    b = np.ascontiguousarray(b, dtype=float)
    if b.shape != (k.n,):
        raise DimensionError(f"right-hand side of shape {b.shape} for a {k.n}x{k.n} matrix")
    if tol <= 0:
        raise ValueError(f"tolerance must be positive, got {tol}")
    max_iter = int(max_iter) if max_iter else 10 * k.n
    prec = precond if hasattr(precond, "apply") else make_preconditioner(k, precond)

    x = np.zeros(k.n) if x0 is None else np.array(x0, dtype=float)
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return np.zeros(k.n), SolverReport(0, 0.0, True, "zero right-hand side", prec.name)

    iterations = 0
    reason = "max_iter"
    best_true = np.inf
    for restart in range(max_restarts + 1):
        r = b - k.matvec(x)
        true_res = np.linalg.norm(r) / bnorm
        floor = attainable_residual(k, x, b)
        target = max(tol, floor)
        if true_res <= target:
            reason = "converged"
            break
        if restart > 0 and true_res > 0.5 * best_true:
            reason = "stagnated"
            break
        best_true = min(best_true, true_res)

        r_hat = r.copy()
        rho_old = alpha = omega = 1.0
        p = v = None
        cycle_reason = None
        while iterations < max_iter:
            iterations += 1
            rho = r_hat @ r
            if abs(rho) < 1e-300:
                cycle_reason = "rho breakdown"
                break
            if p is None:
                p = r.copy()
            else:
                beta = (rho / rho_old) * (alpha / omega)
                p = r + beta * (p - omega * v)
            z = prec.apply(p)
            v = k.matvec(z)
            rv = r_hat @ v
            if abs(rv) < 1e-300:
                cycle_reason = "alpha breakdown"
                break
            alpha = rho / rv
            s = r - alpha * v
            if np.linalg.norm(s) <= target * bnorm:
                x += alpha * z
                cycle_reason = "check"
                break
            y = prec.apply(s)
            t = k.matvec(y)
            tt = t @ t
            if tt == 0.0:
                cycle_reason = "omega breakdown"
                break
            omega = (t @ s) / tt
            if omega == 0.0:
                cycle_reason = "omega breakdown"
                break
            x += alpha * z + omega * y
            r = s - omega * t
            rnorm = np.linalg.norm(r)
            if not np.isfinite(rnorm):
                cycle_reason = "non-finite residual"
                break
            if rnorm <= target * bnorm:
                cycle_reason = "check"
                break
            rho_old = rho

        if cycle_reason is None:
            reason = "max_iter"
            break
        if cycle_reason != "check":
            reason = cycle_reason
            break
    else:
        reason = "too many restarts"

    residual = float(np.linalg.norm(b - k.matvec(x)) / bnorm)
    floor = attainable_residual(k, x, b)
    converged = residual <= max(tol, floor)
    if converged:
        reason = "converged"
    report = SolverReport(iterations, residual, converged, reason, prec.name, floor)
    if converged:
        logger.info(f"BiCGSTAB/{prec.name}: {iterations} iterations, residual {residual:.3e}")
    else:
        logger.warning(f"BiCGSTAB/{prec.name} did not converge: {reason} after "
                       f"{iterations} iterations, residual {residual:.3e}")
    return x, report


def write_matrix_market(k, path):
    logger.debug(f"({k=}, {path=})")
    scipy.io.mmwrite(str(path), k.to_scipy().tocoo(), precision=17, symmetry="general")


def read_matrix_market(path):
    logger.debug(f"({path=})")
    return CsrMatrix.from_scipy(scipy.io.mmread(str(path)).tocsr())
