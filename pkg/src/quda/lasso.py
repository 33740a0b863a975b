"""Lasso estimate of the linear index by cyclic coordinate descent.

Solves ``min_d 0.5 d' A d - g' d + lam ||d||_1`` with ``A = S1 + S2`` (the
plain sum, not the average) and ``g = 4 dmu + (S1 - S2) W dmu``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .constants import TOL
from .errors import ConvergenceWarning, NoConvergence, ShapeMismatch, ZeroDiagonal
from .moments import ClassMoments

__all__ = [
    "DeltaSolution",
    "compute_gamma_hat",
    "lasso_objective",
    "kkt_residual_delta",
    "solve_delta",
    "solve_delta_path",
]


@dataclass(frozen=True)
class DeltaSolution:
    delta: np.ndarray
    gamma_hat: np.ndarray
    lambda_delta: float
    iterations: int
    kkt_residual: float
    converged: bool = True
    objective_trace: tuple = field(default=(), repr=False)

    @property
    def support(self) -> frozenset:
        return frozenset(np.flatnonzero(self.delta).tolist())


def compute_gamma_hat(m: ClassMoments, omega) -> np.ndarray:
    omega = np.asarray(omega, dtype=float)
    if omega.shape != (m.p, m.p):
        raise ShapeMismatch(f"omega must be {m.p}x{m.p}, got {omega.shape}")
    dmu = m.mean_diff
    return 4.0 * dmu + (m.sigma1 - m.sigma2) @ (omega @ dmu)


def lasso_objective(a, gamma, delta, lam) -> float:
    return float(0.5 * delta @ a @ delta - gamma @ delta + lam * np.sum(np.abs(delta)))


def kkt_residual_delta(a, gamma, delta, lam) -> float:
    """Max violation of ``A d - g + lam * sign(d) = 0`` (active set) and
    ``|A d - g| <= lam`` (inactive set)."""
    grad = a @ delta - gamma
    viol = np.where(
        delta != 0,
        np.abs(grad + lam * np.sign(delta)),
        np.maximum(np.abs(grad) - lam, 0.0),
    )
    return float(np.max(viol)) if viol.size else 0.0


def _cd(a, gamma, lam, delta, tol, max_sweeps, trace):
    """Cyclic coordinate descent, updating ``delta`` in place.

    After each full sweep the current sign pattern ``s`` on the support
    ``S`` is tried directly: ``A_SS x = g_S - lam s`` is solved and the
    point accepted if ``sign(x) == s``. That point minimizes the objective
    on the current orthant face, so the objective still never increases.
    Otherwise sweeps over the support alternate with full sweeps. The run
    is declared converged only after a *full* sweep moves no coordinate by
    ``tol`` or more.
    """
    p = a.shape[0]
    diag = np.diag(a).tolist()
    cols = [a[:, j] for j in range(p)]
    # resid = gamma - A @ delta, maintained incrementally
    resid = gamma - a @ delta
    cur = delta.tolist()
    history = [lasso_objective(a, gamma, delta, lam)] if trace else None

    def sweep(coords):
        max_change = 0.0
        for j in coords:
            old = cur[j]
            z = resid.item(j) + diag[j] * old
            if z > lam:
                new = (z - lam) / diag[j]
            elif z < -lam:
                new = (z + lam) / diag[j]
            else:
                new = 0.0
            if new != old:
                step = new - old
                np.subtract(resid, cols[j] * step, out=resid)
                cur[j] = new
                delta[j] = new
                if abs(step) > max_change:
                    max_change = abs(step)
        if trace:
            history.append(lasso_objective(a, gamma, delta, lam))
        return max_change

    def face_solve():
        nonlocal resid
        active = np.flatnonzero(delta)
        if active.size == 0:
            return False
        signs = np.sign(delta[active])
        try:
            x = np.linalg.solve(a[np.ix_(active, active)], gamma[active] - lam * signs)
        except np.linalg.LinAlgError:
            return False
        if not np.array_equal(np.sign(x), signs):
            return False
        delta[active] = x
        for j, v in zip(active.tolist(), x.tolist()):
            cur[j] = v
        resid = gamma - a @ delta
        if trace:
            history.append(lasso_objective(a, gamma, delta, lam))
        return True

    everything = range(p)
    sweeps = 0
    converged = False
    while sweeps < max_sweeps:
        sweeps += 1
        if sweep(everything) < tol:
            converged = True
            break
        while sweeps < max_sweeps and not face_solve():
            active = np.flatnonzero(delta).tolist()
            if not active:
                break
            sweeps += 1
            if sweep(active) < tol:
                break
    return sweeps, converged, tuple(history) if trace else ()


def solve_delta(
    m: ClassMoments,
    gamma_hat,
    lambda_delta: float,
    *,
    init=None,
    tol: float | None = None,
    max_sweeps: int | None = None,
    trace: bool = False,
    strict: bool = False,
) -> DeltaSolution:
    """Coordinate descent for the linear index.

    Parameters
    ----------
    m : ClassMoments
        Supplies ``A = sigma1 + sigma2``.
    gamma_hat : array_like, shape (p,)
        Linear term, usually from :func:`compute_gamma_hat`.
    lambda_delta : float
        Nonnegative penalty.
    init : array_like, optional
        Warm start; zeros by default.
    trace : bool
        Record the objective after every full sweep.

    Raises
    ------
    ZeroDiagonal
        A variable has (numerically) zero variance in both classes.
    NoConvergence
        Only with ``strict=True``; otherwise a warning is issued and the
        flagged iterate is returned.

    Notes
    -----
    With fewer observations than variables ``A`` is singular and
    ``mu1 - mu2`` usually lies outside its range, so below some penalty
    the objective has no minimizer and the iterates drift off. Such runs
    end at the sweep cap and are reported as not converged.
    """
    if lambda_delta < 0:
        raise ValueError(f"lambda_delta must be nonnegative, got {lambda_delta}")
    gamma = np.asarray(gamma_hat, dtype=float)
    if gamma.shape != (m.p,):
        raise ShapeMismatch(f"gamma_hat must have length {m.p}, got {gamma.shape}")
    a = m.sigma1 + m.sigma2
    bad = np.flatnonzero(np.diag(a) <= TOL.zero_diagonal)
    if bad.size:
        raise ZeroDiagonal(f"variable(s) {bad.tolist()} have zero variance in both classes")
    tol = TOL.cd_tol if tol is None else tol
    max_sweeps = TOL.cd_max_sweeps if max_sweeps is None else max_sweeps
    delta = np.zeros(m.p) if init is None else np.array(init, dtype=float)
    if delta.shape != (m.p,):
        raise ShapeMismatch(f"init must have length {m.p}, got {delta.shape}")
    sweeps, converged, history = _cd(a, gamma, float(lambda_delta), delta, tol, max_sweeps, trace)
    sol = DeltaSolution(
        delta=delta,
        gamma_hat=gamma,
        lambda_delta=float(lambda_delta),
        iterations=sweeps,
        kkt_residual=kkt_residual_delta(a, gamma, delta, lambda_delta),
        converged=converged,
        objective_trace=history,
    )
    if not converged:
        msg = f"coordinate descent stopped after {sweeps} sweeps at lambda_delta={lambda_delta:.4g}"
        if strict:
            raise NoConvergence(msg, iterations=sweeps, result=sol)
        warnings.warn(msg, ConvergenceWarning, stacklevel=2)
    return sol


def solve_delta_path(m: ClassMoments, gamma_hat, lambdas, **kwargs) -> list[DeltaSolution]:
    """Solve along ``lambdas`` (descending), warm-starting each solve."""
    out = []
    prev = None
    for lam in lambdas:
        sol = solve_delta(m, gamma_hat, float(lam), init=prev, **kwargs)
        prev = sol.delta
        out.append(sol)
    return out
