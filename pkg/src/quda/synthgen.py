"""Synthetic two-class Gaussian benchmarks (Models 1 to 5).

Every model has ``mu2 = 0`` and ``mu1 = Sigma1 @ beta`` with
``beta = (0.6, 0.8, 0, ..., 0)``. The precision matrices are

=====  ==============================================  =========================
model  Omega1 = inv(Sigma1)                            Omega2 - Omega1
=====  ==============================================  =========================
1      tridiagonal, 1 on the diagonal, 0.3 off it      six fixed entries (below)
2      ``0.5 ** |i - j|``                              identity
3      as model 2                                      zero
4      as model 2                                      tridiagonal, 1 / 0.5
5      identity                                        random sparse, cond. 10
=====  ==============================================  =========================

Randomness comes from counter-based Philox streams keyed by
``(seed, purpose, ...)`` through :class:`numpy.random.SeedSequence`, so a
given seed produces the same bytes on every platform.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .constants import TOL
from .errors import InvalidSpec, NotPositiveDefinite, NotPSD
from .linalg import as_sym_matrix, mat_inverse_spd, sym_eigen, symmetrize
from .moments import LabeledDataset

__all__ = [
    "SyntheticSpec",
    "SyntheticTruth",
    "make_rng",
    "derive_seed",
    "build_truth",
    "sample_mvn",
    "draw_dataset",
    "make_dataset",
    "make_test_set",
    "model1_difference",
    "model5_difference",
]

# 1-based (row, col, value) of the upper triangle of Omega2 - Omega1, model 1
MODEL1_ENTRIES = (
    (10, 10, -0.3758),
    (10, 30, 0.0616),
    (10, 50, 0.2037),
    (30, 30, -0.5482),
    (30, 50, 0.0286),
    (50, 50, -0.4614),
)
BETA_HEAD = (0.6, 0.8)
MODEL5_COND = 10.0
MODEL5_DENSITY_FACTOR = 0.7
MODEL5_MAX_RETRIES = 20
MODEL5_EIG_FLOOR = 0.05

# stream identifiers for derived seeds
_TRAIN, _TEST, _STRUCTURE, _REPLICATION = 0, 1, 2, 3


def make_rng(seed: int, *keys: int) -> np.random.Generator:
    """Philox generator for the stream ``(seed, *keys)``."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in keys))
    return np.random.Generator(np.random.Philox(ss))


def derive_seed(seed: int, *keys: int) -> int:
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in keys))
    return int(ss.generate_state(1, dtype=np.uint32)[0])


@dataclass(frozen=True)
class SyntheticSpec:
    model_id: int
    p: int
    n1: int = 100
    n2: int = 100
    seed: int = 0

    def __post_init__(self):
        if self.model_id not in (1, 2, 3, 4, 5):
            raise InvalidSpec(f"model_id must be in 1..5, got {self.model_id}")
        if self.p < 1:
            raise InvalidSpec(f"p must be positive, got {self.p}")
        if self.model_id == 1 and self.p < 50:
            raise InvalidSpec("model 1 needs p >= 50 (entries at indices 10, 30, 50)")
        if self.n1 < 2 or self.n2 < 2:
            raise InvalidSpec("n1 and n2 must be at least 2")


@dataclass(frozen=True)
class SyntheticTruth:
    """True parameters of a two-class Gaussian model."""

    mu1: np.ndarray
    mu2: np.ndarray
    sigma1: np.ndarray
    sigma2: np.ndarray
    omega_true: np.ndarray
    delta_true: np.ndarray
    pi1: float = 0.5
    pi2: float = 0.5

    @property
    def p(self) -> int:
        return self.mu1.shape[0]

    def omega_support(self, tol: float | None = None) -> frozenset:
        """Upper-triangle (diagonal included) nonzeros of ``omega_true``."""
        tol = TOL.support_zero if tol is None else tol
        rows, cols = np.nonzero(np.triu(np.abs(self.omega_true) > tol))
        return frozenset(zip(rows.tolist(), cols.tolist()))

    def delta_support(self, tol: float | None = None) -> frozenset:
        tol = TOL.support_zero if tol is None else tol
        return frozenset(np.flatnonzero(np.abs(self.delta_true) > tol).tolist())


def _toeplitz_power(p, base):
    idx = np.arange(p)
    return base ** np.abs(idx[:, None] - idx[None, :])


def _band(p, diag, off):
    m = np.eye(p) * diag
    i = np.arange(p - 1)
    m[i, i + 1] = off
    m[i + 1, i] = off
    return m


def model1_difference(p: int) -> np.ndarray:
    omega = np.zeros((p, p))
    for i, j, v in MODEL1_ENTRIES:
        omega[i - 1, j - 1] = v
        omega[j - 1, i - 1] = v
    return omega


def model5_difference(p: int, n1: int, rng: np.random.Generator) -> np.ndarray:
    """Random sparse symmetric matrix with 2-norm condition number 10.

    ``round(0.7 * n1)`` positions are drawn without replacement from the
    upper triangle (diagonal included) and filled with standard normal
    values, mirrored to the lower triangle. The spectrum ``s`` of that
    matrix is then mapped affinely onto ``[0.1, 1]``; the map is
    ``a * S + b * I``, so off-diagonal sparsity is kept exactly while the
    diagonal fills in.
    """
    iu, ju = np.triu_indices(p)
    m = min(int(round(MODEL5_DENSITY_FACTOR * n1)), iu.size)
    pick = rng.choice(iu.size, size=m, replace=False)
    s = np.zeros((p, p))
    vals = rng.standard_normal(m)
    s[iu[pick], ju[pick]] = vals
    s[ju[pick], iu[pick]] = vals
    ev = np.linalg.eigvalsh(s)
    lo, hi = ev[0], ev[-1]
    top, bottom = 1.0, 1.0 / MODEL5_COND
    if hi - lo <= 1e-12:
        return np.eye(p) * top
    a = (top - bottom) / (hi - lo)
    b = bottom - a * lo
    return symmetrize(a * s + b * np.eye(p))


def _floor_spectrum(m, floor):
    eig = sym_eigen(m)
    if eig.d[-1] >= floor:
        return m
    return symmetrize((eig.U * np.maximum(eig.d, floor)) @ eig.U.T)


def _precisions(spec: SyntheticSpec, attempt: int):
    p = spec.p
    if spec.model_id == 1:
        omega1 = _band(p, 1.0, 0.3)
        diff = model1_difference(p)
    elif spec.model_id in (2, 3, 4):
        omega1 = _toeplitz_power(p, 0.5)
        diff = {2: np.eye(p), 3: np.zeros((p, p)), 4: _band(p, 1.0, 0.5)}[spec.model_id]
    else:
        omega1 = np.eye(p)
        rng = make_rng(spec.seed, _STRUCTURE, attempt)
        diff = model5_difference(p, spec.n1, rng)
        omega2 = _floor_spectrum(omega1 + diff, MODEL5_EIG_FLOOR)
        return omega1, omega2, omega2 - omega1
    return omega1, omega1 + diff, diff


def truth_from_precisions(omega1, omega2, diff, beta) -> SyntheticTruth:
    sigma1 = mat_inverse_spd(omega1)
    sigma2 = mat_inverse_spd(omega2)
    mu1 = sigma1 @ beta
    mu2 = np.zeros_like(mu1)
    delta = (omega1 + omega2) @ (mu1 - mu2)
    return SyntheticTruth(
        mu1=mu1, mu2=mu2, sigma1=sigma1, sigma2=sigma2, omega_true=diff, delta_true=delta
    )


def build_truth(spec: SyntheticSpec, _precision_fn=None) -> SyntheticTruth:
    """True means, covariances, interaction matrix and linear index.

    Model 5 draws its structure at random; draws whose precision matrices
    fail the positive-definiteness check are regenerated from the next
    sub-seed, up to ``MODEL5_MAX_RETRIES`` times.
    """
    precision_fn = _precision_fn or _precisions
    beta = np.zeros(spec.p)
    beta[: len(BETA_HEAD)] = BETA_HEAD[: spec.p]
    last_err = None
    attempts = MODEL5_MAX_RETRIES if spec.model_id == 5 else 1
    for attempt in range(attempts):
        omega1, omega2, diff = precision_fn(spec, attempt)
        try:
            return truth_from_precisions(omega1, omega2, diff, beta)
        except NotPositiveDefinite as err:
            last_err = err
    raise NotPositiveDefinite(
        f"model {spec.model_id}: no positive definite draw in {attempts} attempt(s): {last_err}"
    )


def sample_mvn(mu, sigma, n: int, rng) -> np.ndarray:
    """``n`` rows from ``N(mu, sigma)`` as ``mu + g @ L.T`` with
    ``L = U diag(sqrt(d))`` from the eigendecomposition of ``sigma``.

    ``rng`` is a :class:`numpy.random.Generator` or an integer seed.
    """
    if not isinstance(rng, np.random.Generator):
        rng = make_rng(rng)
    mu = np.asarray(mu, dtype=float)
    sigma = as_sym_matrix(sigma, "sigma", tol=1e-10)
    eig = sym_eigen(sigma)
    scale = max(1.0, abs(float(eig.d[0])))
    if eig.d[-1] < -TOL.psd_slack * scale:
        raise NotPSD(f"sigma has a negative eigenvalue {eig.d[-1]:.3g}")
    L = eig.U * np.sqrt(np.maximum(eig.d, 0.0))
    g = rng.standard_normal((int(n), mu.shape[0]))
    return mu + g @ L.T


def draw_dataset(truth: SyntheticTruth, n1: int, n2: int, rng) -> LabeledDataset:
    x1 = sample_mvn(truth.mu1, truth.sigma1, n1, rng)
    x2 = sample_mvn(truth.mu2, truth.sigma2, n2, rng)
    labels = np.r_[np.ones(n1, dtype=np.int64), np.full(n2, 2, dtype=np.int64)]
    return LabeledDataset(np.vstack([x1, x2]), labels)


def make_dataset(spec: SyntheticSpec) -> tuple[LabeledDataset, SyntheticTruth]:
    """Training sample of ``n1 + n2`` rows plus the truth it came from."""
    truth = build_truth(spec)
    train = draw_dataset(truth, spec.n1, spec.n2, make_rng(spec.seed, _TRAIN))
    return train, truth


def make_test_set(spec: SyntheticSpec, truth: SyntheticTruth, n_per_class: int) -> LabeledDataset:
    """Independent test draw from a stream disjoint from the training one."""
    return draw_dataset(truth, n_per_class, n_per_class, make_rng(spec.seed, _TEST))
