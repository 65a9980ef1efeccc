"""Small numeric kernels: sparse SPD solves, generalized symmetric eigenproblems
and SVD nullspaces.

All routines are deterministic for identical inputs.
"""
import logging
from typing import NamedTuple

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import IndefiniteError, NumericalError

log = logging.getLogger(__name__)


class GeneralizedEig(NamedTuple):
    values: np.ndarray
    vectors: np.ndarray
    deflated: int


def _fix_signs(V):
    # largest-magnitude entry of each column made positive
    if V.size == 0:
        return V
    idx = np.argmax(np.abs(V), axis=0)
    signs = np.sign(V[idx, np.arange(V.shape[1])])
    signs[signs == 0] = 1.0
    return V * signs


def smallest_eigenvalue(A):
    """Estimate of the algebraically smallest eigenvalue of a symmetric matrix."""
    n = A.shape[0]
    if n <= 2000:
        dense = A.toarray() if sp.issparse(A) else np.asarray(A)
        return float(sla.eigvalsh(dense, subset_by_index=[0, 0])[0])
    val = spla.eigsh(A, k=1, which="SA", return_eigenvectors=False, tol=1e-8)
    return float(val[0])


def spd_factor(A):
    """LDL^T-style factorization of a sparse SPD matrix via SuperLU in symmetric mode.

    Raises IndefiniteError if a non-positive pivot appears.
    """
    A = sp.csc_matrix(A)
    try:
        lu = spla.splu(
            A,
            permc_spec="MMD_AT_PLUS_A",
            diag_pivot_thresh=0.0,
            options={"SymmetricMode": True},
        )
    except RuntimeError as exc:
        raise IndefiniteError(
            f"factorization breakdown: {exc}", smallest_eigenvalue(A)
        ) from exc
    d = lu.U.diagonal()
    pivoted = np.any(lu.perm_r != lu.perm_c)
    if pivoted or np.any(d <= 0):
        lam = smallest_eigenvalue(A)
        raise IndefiniteError(
            f"matrix is not positive definite (smallest eigenvalue ~ {lam:.3e})", lam
        )
    return lu


def sparse_spd_solve(A, B, rtol=1e-12, factor=None):
    """Solve A X = B for SPD sparse ``A`` and one or many right-hand sides.

    One step of iterative refinement is applied to columns whose relative
    residual exceeds ``rtol``.
    """
    lu = spd_factor(A) if factor is None else factor
    B = np.asarray(B, dtype=float)
    X = lu.solve(B)
    R = B - A @ X
    bn = np.linalg.norm(B, axis=0)
    bn = np.where(bn == 0, 1.0, bn)
    if np.any(np.linalg.norm(R, axis=0) / bn > rtol):
        X = X + lu.solve(R)
    return X


def cg_solve(A, b, rtol=1e-12, maxiter=None):
    x, info = spla.cg(A, b, rtol=rtol, atol=0.0, maxiter=maxiter)
    if info != 0:
        raise NumericalError(f"conjugate gradient did not converge (info={info})")
    return x


def semidefinite_solve(A, b, rel_tol=1e-10, dense_limit=6000):
    """Minimum-norm solution of ``A x = b`` for symmetric positive semidefinite ``A``.

    Eigen-directions below ``rel_tol * max eig`` are discarded, so rounding
    noise in a numerically singular matrix cannot blow up the solution.
    Above ``dense_limit`` unknowns MINRES is used instead.
    """
    n = A.shape[0]
    if n > dense_limit:
        x, info = spla.minres(A, b, rtol=1e-12, maxiter=10 * n)
        if info != 0:
            raise NumericalError(f"MINRES did not converge (info={info})")
        return x
    dense = A.toarray() if sp.issparse(A) else np.asarray(A)
    w, V = np.linalg.eigh(0.5 * (dense + dense.T))
    keep = w > rel_tol * max(w[-1], 0.0)
    return V[:, keep] @ ((V[:, keep].T @ b) / w[keep])


def sym_generalized_eig(K, M, rank_tol=1e-12):
    """Ascending eigenpairs of K v = lam M v, normalized so that v^T M v = 1.

    Directions in the numerical null space of ``M`` (eigenvalues below
    ``rank_tol * max eig``) are deflated; their count is returned.
    """
    K = 0.5 * (K + K.T)
    M = 0.5 * (M + M.T)
    w, Q = np.linalg.eigh(M)
    if w.size == 0:
        return GeneralizedEig(w, Q, 0)
    keep = w > rank_tol * w[-1]
    deflated = int(np.count_nonzero(~keep))
    if deflated:
        log.debug("mass matrix numerically singular: deflating %d direction(s)", deflated)
    Z = Q[:, keep] / np.sqrt(w[keep])
    Kr = Z.T @ K @ Z
    lam, Y = np.linalg.eigh(0.5 * (Kr + Kr.T))
    V = _fix_signs(Z @ Y)
    return GeneralizedEig(lam, V, deflated)


def svd_nullspace(C, rel_tol=1e-10):
    """Orthonormal basis (columns) of the numerical null space of ``C``."""
    C = np.atleast_2d(np.asarray(C, dtype=float))
    n = C.shape[1]
    if C.shape[0] == 0:
        return np.eye(n)
    _, s, Vt = np.linalg.svd(C, full_matrices=True)
    if s.size == 0 or s[0] == 0.0:
        return np.eye(n)
    rank = int(np.count_nonzero(s > rel_tol * s[0]))
    return _fix_signs(Vt[rank:].T.copy())


def orth(X, rel_tol=1e-10):
    """Orthonormal basis of the column range of ``X`` with rank truncation."""
    if X.shape[1] == 0:
        return X.copy()
    U, s, _ = np.linalg.svd(X, full_matrices=False)
    if s[0] == 0.0:
        return U[:, :0]
    rank = int(np.count_nonzero(s > rel_tol * s[0]))
    return _fix_signs(U[:, :rank].copy())
