"""ADMM solver for the sparse precision-difference matrix.

Minimizes over p x p matrices ``W``::

    0.5 * tr(W' S1 W S2) - tr(W (S1 - S2)) + lam * ||W||_1

by splitting ``W = Psi`` and alternating a closed-form smooth step, an
entrywise soft-threshold, and a dual ascent step. With ``S_i = U_i D_i U_i'``
the smooth step is ``U1 [B o (U1' A U2)] U2'`` where
``B[j, k] = 1 / (d1[j] d2[k] + rho)``, so each iteration costs a handful of
p x p matrix products and no p^2 x p^2 object is ever formed.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .constants import TOL
from .errors import ConvergenceWarning, NoConvergence, NonPositiveRho, ShapeMismatch
from .linalg import SymEigen, soft_threshold, sym_eigen
from .moments import ClassMoments

__all__ = [
    "AdmmConfig",
    "OmegaSolution",
    "OmegaSolver",
    "build_b_matrix",
    "omega_update",
    "default_rho",
    "solve_omega",
    "solve_omega_path",
    "kkt_residual_omega",
    "omega_objective",
]


@dataclass(frozen=True)
class AdmmConfig:
    """ADMM settings.

    ``rho=None`` selects :func:`default_rho` from the covariance spectra.
    With ``strict=True`` a run that hits ``max_iter`` raises
    :class:`NoConvergence`; otherwise it warns and returns the flagged
    iterate.
    """

    rho: float | None = None
    max_iter: int = 500
    tol_abs: float = 1e-5
    tol_rel: float = 1e-4
    strict: bool = False

    def __post_init__(self):
        if self.rho is not None and not self.rho > 0:
            raise NonPositiveRho(f"rho must be positive, got {self.rho}")
        if self.max_iter < 1:
            raise ValueError("max_iter must be positive")
        if not (self.tol_abs > 0 and self.tol_rel > 0):
            raise ValueError("tolerances must be positive")


@dataclass(frozen=True)
class OmegaSolution:
    omega: np.ndarray
    omega_raw: np.ndarray
    lam: float
    iterations: int
    primal_residual: float
    dual_residual: float
    converged: bool
    rho: float
    dual: np.ndarray = field(repr=False)

    @property
    def support(self) -> frozenset:
        """Index pairs ``(i, j)`` where the symmetrized estimate is nonzero."""
        rows, cols = np.nonzero(self.omega)
        return frozenset(zip(rows.tolist(), cols.tolist()))

    def unique_support(self) -> frozenset:
        """Support restricted to the upper triangle, diagonal included."""
        return frozenset((i, j) for i, j in self.support if i <= j)


def build_b_matrix(d1, d2, rho: float) -> np.ndarray:
    """``B[j, k] = 1 / (d1[j] * d2[k] + rho)``.

    Slightly negative eigenvalues (round-off on singular covariances) are
    clamped to zero, which keeps every entry in ``(0, 1/rho]``.
    """
    if not rho > 0:
        raise NonPositiveRho(f"rho must be positive, got {rho}")
    d1 = np.maximum(np.asarray(d1, dtype=float), 0.0)
    d2 = np.maximum(np.asarray(d2, dtype=float), 0.0)
    return 1.0 / (np.outer(d1, d2) + rho)


def omega_update(a_k, eig1: SymEigen, eig2: SymEigen, b) -> np.ndarray:
    """Solve ``S1 W S2 + rho W = a_k`` given the eigenpairs of ``S1, S2``
    and the matching ``B`` matrix."""
    a_k = np.asarray(a_k, dtype=float)
    p = eig1.U.shape[0]
    if a_k.shape != (p, p) or eig2.U.shape != (p, p) or np.shape(b) != (p, p):
        raise ShapeMismatch(
            f"shape mismatch: A {a_k.shape}, U1 {eig1.U.shape}, U2 {eig2.U.shape}, B {np.shape(b)}"
        )
    U1, U2 = eig1.U, eig2.U
    return U1 @ (b * (U1.T @ a_k @ U2)) @ U2.T


def default_rho(d1, d2, eps: float | None = None) -> float:
    """Geometric mean of the extreme eigenvalues of ``S2 (x) S1``.

    ``sqrt((d1_max d2_max + eps) (d1_min+ d2_min+ + eps))`` where ``min+``
    is the smallest eigenvalue counted as positive.
    """
    eps = TOL.rho_eps if eps is None else eps

    def extremes(d):
        d = np.asarray(d, dtype=float)
        top = float(np.max(d))
        if top <= 0:
            return 0.0, 0.0
        pos = d[d > TOL.pd_relative * top]
        return top, float(np.min(pos))

    hi1, lo1 = extremes(d1)
    hi2, lo2 = extremes(d2)
    return float(np.sqrt((hi1 * hi2 + eps) * (lo1 * lo2 + eps)))


def omega_objective(omega, m: ClassMoments, lam: float) -> float:
    omega = np.asarray(omega, dtype=float)
    smooth = 0.5 * np.sum(omega * (m.sigma1 @ omega @ m.sigma2))
    linear = np.sum(omega * (m.sigma1 - m.sigma2))
    return float(smooth - linear + lam * np.sum(np.abs(omega)))


def kkt_residual_omega(omega, m: ClassMoments, lam: float) -> float:
    """Largest violation of the optimality conditions at ``omega``.

    With ``G = S1 W S2 - (S1 - S2)``: ``|G_ij + lam sign(W_ij)|`` on the
    nonzeros of ``W`` and ``max(|G_ij| - lam, 0)`` on its zeros.
    """
    omega = np.asarray(omega, dtype=float)
    p = m.p
    if omega.shape != (p, p):
        raise ShapeMismatch(f"omega must be {p}x{p}, got {omega.shape}")
    grad = m.sigma1 @ omega @ m.sigma2 - (m.sigma1 - m.sigma2)
    nz = omega != 0
    viol = np.where(
        nz,
        np.abs(grad + lam * np.sign(omega)),
        np.maximum(np.abs(grad) - lam, 0.0),
    )
    return float(np.max(viol))


class OmegaSolver:
    """Reusable solver bound to one pair of covariance matrices.

    The eigendecompositions and ``rho`` are computed once at construction;
    :meth:`solve` may then be called for many penalties, optionally
    warm-started from a previous solution.
    """

    def __init__(self, m: ClassMoments, cfg: AdmmConfig | None = None):
        self.moments = m
        self.cfg = cfg or AdmmConfig()
        self.eig1 = sym_eigen(m.sigma1)
        self.eig2 = sym_eigen(m.sigma2)
        d1 = np.maximum(self.eig1.d, 0.0)
        d2 = np.maximum(self.eig2.d, 0.0)
        self.rho = self.cfg.rho if self.cfg.rho is not None else default_rho(d1, d2)
        self.b = build_b_matrix(d1, d2, self.rho)
        self.diff = m.sigma1 - m.sigma2

    def solve(self, lam: float, warm_start: OmegaSolution | None = None) -> OmegaSolution:
        if lam < 0:
            raise ValueError(f"lambda must be nonnegative, got {lam}")
        cfg, rho, p = self.cfg, self.rho, self.moments.p
        if warm_start is not None and warm_start.rho == rho:
            psi = warm_start.omega_raw.copy()
            dual = warm_start.dual.copy()
        else:
            psi = np.zeros((p, p))
            dual = np.zeros((p, p))
        U1, U2, b = self.eig1.U, self.eig2.U, self.b
        U1t, U2t = U1.T, U2.T
        thresh = lam / rho
        r_norm = s_norm = np.inf
        converged = False
        it = 0
        for it in range(1, cfg.max_iter + 1):
            a_k = self.diff - dual + rho * psi
            omega = U1 @ (b * (U1t @ a_k @ U2)) @ U2t
            psi_new = soft_threshold(omega + dual / rho, thresh)
            resid = omega - psi_new
            dual += rho * resid
            r_norm = np.linalg.norm(resid)
            s_norm = rho * np.linalg.norm(psi_new - psi)
            psi = psi_new
            eps_pri = p * cfg.tol_abs + cfg.tol_rel * max(np.linalg.norm(omega), np.linalg.norm(psi))
            eps_dual = p * cfg.tol_abs + cfg.tol_rel * np.linalg.norm(dual)
            if r_norm <= eps_pri and s_norm <= eps_dual:
                converged = True
                break
        sol = OmegaSolution(
            omega=0.5 * (psi + psi.T),
            omega_raw=psi,
            lam=float(lam),
            iterations=it,
            primal_residual=float(r_norm),
            dual_residual=float(s_norm),
            converged=converged,
            rho=rho,
            dual=dual,
        )
        if not converged:
            msg = (
                f"ADMM stopped after {it} iterations at lambda={lam:.4g} "
                f"(primal {r_norm:.3g}, dual {s_norm:.3g})"
            )
            if cfg.strict:
                raise NoConvergence(msg, iterations=it, residuals=(r_norm, s_norm), result=sol)
            warnings.warn(msg, ConvergenceWarning, stacklevel=2)
        return sol

    def path(self, lambdas) -> list[OmegaSolution]:
        """Solve along ``lambdas`` in the given order, warm-starting each
        solve from the previous one. Pass a descending sequence."""
        out = []
        prev = None
        for lam in lambdas:
            prev = self.solve(float(lam), warm_start=prev)
            out.append(prev)
        return out


def solve_omega(m: ClassMoments, lam: float, cfg: AdmmConfig | None = None) -> OmegaSolution:
    """Sparse estimate of ``inv(Sigma2) - inv(Sigma1)`` at penalty ``lam``."""
    return OmegaSolver(m, cfg).solve(lam)


def solve_omega_path(m: ClassMoments, lambdas, cfg: AdmmConfig | None = None) -> list[OmegaSolution]:
    return OmegaSolver(m, cfg).path(lambdas)
