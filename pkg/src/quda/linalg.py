"""Dense symmetric linear algebra and proximal primitives."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .constants import TOL
from .errors import (
    NegativeThreshold,
    NoConvergence,
    NonFinite,
    NotPositiveDefinite,
    ShapeMismatch,
)

__all__ = [
    "SymEigen",
    "as_sym_matrix",
    "symmetrize",
    "sym_eigen",
    "jacobi_eigen",
    "soft_threshold",
    "mat_inverse_spd",
    "log_det_spd",
]


@dataclass(frozen=True)
class SymEigen:
    """Eigendecomposition ``a = U @ diag(d) @ U.T`` with ``d`` descending."""

    U: np.ndarray
    d: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return (self.U * self.d) @ self.U.T


def symmetrize(a) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    return 0.5 * (a + a.T)


def as_sym_matrix(a, name="matrix", tol=None) -> np.ndarray:
    """Validate ``a`` as a finite, square, symmetric matrix and return it
    as a float array (exactly symmetrized)."""
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise ShapeMismatch(f"{name} must be a non-empty square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise NonFinite(f"{name} contains NaN or Inf")
    tol = TOL.symmetry if tol is None else tol
    scale = max(1.0, float(np.max(np.abs(a))))
    if np.max(np.abs(a - a.T)) > tol * scale:
        raise ShapeMismatch(f"{name} is not symmetric")
    return symmetrize(a)


def _canonical_signs(U):
    # Flip each column so its largest-magnitude entry is positive; makes
    # the output independent of the backend's sign choice.
    idx = np.argmax(np.abs(U), axis=0)
    signs = np.sign(U[idx, np.arange(U.shape[1])])
    signs[signs == 0] = 1.0
    return U * signs


def sym_eigen(a, method: str = "lapack") -> SymEigen:
    """Symmetric eigendecomposition with eigenvalues sorted descending.

    Parameters
    ----------
    a : array_like, shape (p, p)
        Symmetric matrix with finite entries.
    method : {"lapack", "jacobi"}
        ``"lapack"`` uses :func:`numpy.linalg.eigh`; ``"jacobi"`` runs the
        cyclic Jacobi iteration in :func:`jacobi_eigen`. Both return the
        same canonical sign convention.
    """
    a = np.asarray(a, dtype=float)
    if a.ndim == 2 and not np.all(np.isfinite(a)):
        raise NonFinite("matrix contains NaN or Inf")
    a = as_sym_matrix(a, tol=1e-10)
    if method == "jacobi":
        return jacobi_eigen(a)
    if method != "lapack":
        raise ValueError(f"unknown method {method!r}")
    d, U = np.linalg.eigh(a)
    order = np.argsort(-d, kind="stable")
    return SymEigen(U=_canonical_signs(U[:, order]), d=d[order])


def jacobi_eigen(a, max_sweeps: int | None = None, tol: float = 1e-15) -> SymEigen:
    """Cyclic Jacobi eigenvalue iteration.

    Sweeps visit the pairs ``(i, j), i < j`` in row order and annihilate
    each off-diagonal entry with a plane rotation. Iteration stops once the
    off-diagonal Frobenius mass falls below ``tol * ||a||_F``.

    Raises
    ------
    NoConvergence
        If ``max_sweeps`` (default ``TOL.jacobi_max_sweeps``) is exhausted.
    """
    if max_sweeps is None:
        max_sweeps = TOL.jacobi_max_sweeps
    A = as_sym_matrix(a, tol=1e-10).copy()
    p = A.shape[0]
    V = np.eye(p)
    total = np.linalg.norm(A)
    if p == 1 or total == 0.0:
        return SymEigen(U=V, d=np.diag(A).copy())

    def off(m):
        return np.sqrt(max(np.sum(m * m) - np.sum(np.diag(m) ** 2), 0.0))

    for sweep in range(max_sweeps):
        if off(A) <= tol * total:
            break
        for i in range(p - 1):
            for j in range(i + 1, p):
                aij = A[i, j]
                if aij == 0.0:
                    continue
                theta = (A[j, j] - A[i, i]) / (2.0 * aij)
                t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                if theta == 0.0:
                    t = 1.0
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                ai = A[:, i].copy()
                aj = A[:, j].copy()
                A[:, i] = c * ai - s * aj
                A[:, j] = s * ai + c * aj
                ai = A[i, :].copy()
                aj = A[j, :].copy()
                A[i, :] = c * ai - s * aj
                A[j, :] = s * ai + c * aj
                A[i, j] = A[j, i] = 0.0
                vi = V[:, i].copy()
                vj = V[:, j].copy()
                V[:, i] = c * vi - s * vj
                V[:, j] = s * vi + c * vj
    else:
        if off(A) > tol * total:
            raise NoConvergence(
                f"Jacobi iteration did not converge in {max_sweeps} sweeps",
                iterations=max_sweeps,
                residuals=(off(A),),
            )
    d = np.diag(A).copy()
    order = np.argsort(-d, kind="stable")
    return SymEigen(U=_canonical_signs(V[:, order]), d=d[order])


def soft_threshold(a, b):
    """Entrywise ``sign(a) * max(|a| - b, 0)``; the prox of ``b * |.|_1``.

    Works for scalars, vectors and matrices. Zeros in the output are exact.
    """
    if b < 0:
        raise NegativeThreshold(f"threshold must be nonnegative, got {b}")
    a = np.asarray(a, dtype=float)
    out = np.sign(a) * np.maximum(np.abs(a) - b, 0.0)
    return out + 0.0  # normalizes -0.0 to 0.0


def _spd_eigen(a, name):
    eig = sym_eigen(a)
    d_max = eig.d[0]
    if d_max <= 0 or eig.d[-1] <= TOL.pd_relative * d_max:
        raise NotPositiveDefinite(
            f"{name} is not positive definite (eigenvalues in [{eig.d[-1]:.3g}, {d_max:.3g}])"
        )
    return eig


def mat_inverse_spd(a) -> np.ndarray:
    """Inverse of a symmetric positive definite matrix via its eigenvalues."""
    eig = _spd_eigen(a, "matrix")
    return symmetrize((eig.U / eig.d) @ eig.U.T)


def log_det_spd(a) -> float:
    """``log |a|`` for a symmetric positive definite matrix."""
    eig = _spd_eigen(a, "matrix")
    return float(np.sum(np.log(eig.d)))
