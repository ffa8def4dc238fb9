"""Sparse symmetric positive definite solves for the condensed trace system.

The direct path uses CHOLMOD's supernodal Cholesky (fill-reducing AMD
ordering) through cvxopt; the iterative path runs Jacobi-preconditioned
conjugate gradients.  Both report the achieved relative residual.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import NoConvergence, NotPositiveDefinite

__all__ = ["SparseSymmetric", "SolveResult", "solve_spd", "export_matrix_market"]

_DROP_REL = 1e-15


@dataclass
class SparseSymmetric:
    """Lower-triangle coordinate storage of a symmetric matrix plus rhs.

    Entries smaller than 1e-15 of the largest magnitude are dropped.
    """

    n: int
    rows: np.ndarray
    cols: np.ndarray
    vals: np.ndarray
    rhs: np.ndarray

    @classmethod
    def from_csr(cls, matrix: sp.csr_matrix, rhs: np.ndarray) -> "SparseSymmetric":
        coo = sp.tril(matrix).tocoo()
        vmax = np.abs(coo.data).max() if coo.nnz else 0.0
        keep = np.abs(coo.data) > _DROP_REL * vmax
        return cls(n=matrix.shape[0], rows=coo.row[keep], cols=coo.col[keep],
                   vals=coo.data[keep], rhs=np.asarray(rhs, dtype=float))

    def to_csr(self) -> sp.csr_matrix:
        full = sp.coo_matrix((self.vals, (self.rows, self.cols)), shape=(self.n, self.n))
        strict = sp.coo_matrix(
            (self.vals[self.rows != self.cols],
             (self.cols[self.rows != self.cols], self.rows[self.rows != self.cols])),
            shape=(self.n, self.n))
        return (full + strict).tocsr()


@dataclass
class SolveResult:
    x: np.ndarray
    residual: float
    method: str
    iterations: int = 0


def _as_parts(system) -> tuple[sp.csr_matrix, np.ndarray]:
    if isinstance(system, SparseSymmetric):
        return system.to_csr(), system.rhs
    matrix, rhs = system
    return matrix.tocsr(), np.asarray(rhs, dtype=float)


def _relative_residual(matrix, x, rhs) -> float:
    denom = np.linalg.norm(rhs)
    if denom == 0.0:
        return float(np.linalg.norm(matrix @ x))
    return float(np.linalg.norm(matrix @ x - rhs) / denom)


def _solve_cholmod(matrix: sp.csr_matrix, rhs: np.ndarray) -> np.ndarray:
    from cvxopt import cholmod, matrix as dmatrix, spmatrix

    low = sp.tril(matrix).tocoo()
    A = spmatrix(low.data.tolist(), low.row.tolist(), low.col.tolist(),
                 size=matrix.shape)
    b = dmatrix(rhs)
    try:
        cholmod.linsolve(A, b)
    except ArithmeticError as exc:
        raise NotPositiveDefinite(
            "sparse Cholesky factorization failed; the condensed matrix is not "
            "positive definite (degenerate geometry or assembly bug)"
        ) from exc
    return np.asarray(b).ravel()


def solve_spd(system, method: str = "direct", tol: float = 1e-12,
              max_iter: int | None = None) -> SolveResult:
    """Solve an SPD system given as ``SparseSymmetric`` or ``(csr, rhs)``.

    direct: sparse Cholesky (CHOLMOD; scipy splu fallback if cvxopt is
    unavailable).  iterative: CG with diagonal preconditioning to a relative
    residual of ``tol``.
    """
    matrix, rhs = _as_parts(system)
    if matrix.shape[0] == 0:
        return SolveResult(x=np.zeros(0), residual=0.0, method=method)
    if method == "direct":
        try:
            x = _solve_cholmod(matrix, rhs)
            used = "direct-cholmod"
        except ImportError:
            x = spla.splu(matrix.tocsc()).solve(rhs)
            used = "direct-splu"
        res = _relative_residual(matrix, x, rhs)
        if not np.isfinite(res):
            raise NotPositiveDefinite("direct solve produced non-finite residual")
        return SolveResult(x=x, residual=res, method=used)
    if method == "iterative":
        diag = matrix.diagonal()
        if np.any(diag <= 0):
            raise NotPositiveDefinite("nonpositive diagonal entry; matrix cannot be SPD")
        M = sp.diags(1.0 / diag)
        count = {"n": 0}

        def cb(_):
            count["n"] += 1

        x, info = spla.cg(matrix, rhs, rtol=tol, atol=0.0, M=M,
                          maxiter=max_iter or 20 * matrix.shape[0], callback=cb)
        if info > 0:
            raise NoConvergence(f"CG did not reach tol={tol} in {info} iterations")
        if info < 0:
            raise NotPositiveDefinite("CG broke down; matrix likely not SPD")
        return SolveResult(x=x, residual=_relative_residual(matrix, x, rhs),
                           method="iterative-cg", iterations=count["n"])
    raise ValueError(f"unknown method {method!r}; use 'direct' or 'iterative'")


def export_matrix_market(system, path) -> None:
    """Write the symmetric matrix in MatrixMarket coordinate format."""
    from scipy.io import mmwrite

    matrix, _ = _as_parts(system)
    mmwrite(str(path), sp.coo_matrix(matrix), symmetry="symmetric")
