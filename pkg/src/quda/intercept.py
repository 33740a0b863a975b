"""Intercept selection by scanning sorted discriminant scores.

Given scores ``d_i`` and 0/1 labels (1 for class 1), an intercept ``e``
predicts class 1 exactly when ``d_i + e > 0``. Sorting the scores, every
threshold between consecutive distinct scores is one candidate split ``k``
(the ``k`` lowest scores go to class 2), so the in-sample error of all
``n + 1`` splits comes from two prefix sums.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EmptyInput, ShapeMismatch

__all__ = ["SplitChoice", "discriminant_raw", "discriminant_scores", "best_split", "search_eta"]


def discriminant_raw(mu, omega, delta, z) -> float:
    """``(z - mu)' W (z - mu) + delta' (z - mu)`` for a single point."""
    z = np.asarray(z, dtype=float)
    mu = np.asarray(mu, dtype=float)
    omega = np.asarray(omega, dtype=float)
    p = z.size
    if z.ndim != 1 or mu.shape != (p,) or omega.shape != (p, p) or np.shape(delta) != (p,):
        raise ShapeMismatch(f"z has shape {z.shape}, model has p={np.shape(delta)}")
    w = z - mu
    return float(w @ omega @ w + np.asarray(delta) @ w)


def discriminant_scores(mu, omega, delta, x) -> np.ndarray:
    """Vectorized :func:`discriminant_raw` over the rows of ``x``."""
    x = np.asarray(x, dtype=float)
    p = np.shape(delta)[0]
    if x.ndim != 2 or x.shape[1] != p:
        raise ShapeMismatch(f"expected an (n, {p}) array, got shape {x.shape}")
    w = x - mu
    return np.einsum("ij,ij->i", w @ omega, w) + w @ delta


@dataclass(frozen=True)
class SplitChoice:
    eta: float
    error_count: int
    n: int
    k_star: int
    lower: float
    upper: float

    @property
    def error(self) -> float:
        return self.error_count / self.n


def best_split(scores, labels01) -> SplitChoice:
    """Optimal split of the sorted scores and the intercept placed in it.

    Among optimal splits the widest interval wins, then the smallest ``k``;
    the two unbounded end splits count as infinitely wide. The intercept is
    the interval midpoint, or one unit past the extreme score for the end
    splits.
    """
    scores = np.asarray(scores, dtype=float)
    labels01 = np.asarray(labels01)
    n = scores.shape[0]
    if n == 0:
        raise EmptyInput("no scores to search")
    if labels01.shape != scores.shape:
        raise ShapeMismatch("scores and labels must have the same length")
    order = np.lexsort((labels01, scores))
    s = scores[order]
    ones = (labels01[order] == 1).astype(np.int64)
    # errors(k) = #ones among the k lowest + #zeros among the rest
    ones_below = np.r_[0, np.cumsum(ones)]
    zeros_above = (n - np.arange(n + 1)) - (ones_below[-1] - ones_below)
    errors = ones_below + zeros_above

    width = np.full(n + 1, np.inf)
    width[1:n] = s[1:] - s[:-1]
    valid = width > 0
    best = errors[valid].min()
    cand = np.flatnonzero(valid & (errors == best))
    k = int(cand[np.argmax(width[cand])])  # argmax keeps the first (smallest k) on ties

    if k == 0:
        lower, upper = -s[0], np.inf
        eta = -s[0] + 1.0
    elif k == n:
        lower, upper = -np.inf, -s[-1]
        eta = -s[-1] - 1.0
    else:
        lower, upper = -s[k], -s[k - 1]
        eta = 0.5 * (lower + upper)
    return SplitChoice(
        eta=float(eta), error_count=int(best), n=n, k_star=k, lower=float(lower), upper=float(upper)
    )


def search_eta(scores, labels01) -> tuple[float, float]:
    """In-sample-error-minimizing intercept; returns ``(eta, error_rate)``."""
    choice = best_split(scores, labels01)
    return choice.eta, choice.error
