"""Per-class sample moments.

Covariances use the ``1/n_k`` divisor (maximum-likelihood form), not the
``1/(n_k - 1)`` default of most statistics libraries.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ClassTooSmall, EmptyInput, InvalidLabel, MissingClass, NonFinite, ShapeMismatch
from .linalg import symmetrize

__all__ = ["LabeledDataset", "ClassMoments", "estimate_moments"]


@dataclass(frozen=True)
class LabeledDataset:
    """Feature matrix ``x`` (n, p) with class labels in ``{1, 2}``."""

    x: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        labels = np.asarray(self.labels)
        if x.ndim != 2:
            raise ShapeMismatch(f"x must be 2-D, got shape {x.shape}")
        if labels.ndim != 1 or labels.shape[0] != x.shape[0]:
            raise ShapeMismatch(
                f"labels must have length {x.shape[0]}, got shape {labels.shape}"
            )
        if x.shape[1] < 1:
            raise ShapeMismatch("x must have at least one column")
        if not np.all(np.isfinite(x)):
            raise NonFinite("x contains NaN or Inf")
        bad = ~np.isin(labels, (1, 2))
        if np.any(bad):
            raise InvalidLabel(
                f"labels must be 1 or 2; found {labels[bad][0]!r} at row {int(np.argmax(bad))}"
            )
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "labels", labels.astype(np.int64))

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def p(self) -> int:
        return self.x.shape[1]

    def class_rows(self, k: int) -> np.ndarray:
        return self.x[self.labels == k]

    def subset(self, idx) -> "LabeledDataset":
        return LabeledDataset(self.x[idx], self.labels[idx])

    def shifted(self, c) -> "LabeledDataset":
        return LabeledDataset(self.x + np.asarray(c, dtype=float), self.labels)


@dataclass(frozen=True)
class ClassMoments:
    mu1: np.ndarray
    mu2: np.ndarray
    sigma1: np.ndarray
    sigma2: np.ndarray
    n1: int
    n2: int

    @property
    def p(self) -> int:
        return self.mu1.shape[0]

    @property
    def mean_diff(self) -> np.ndarray:
        return self.mu1 - self.mu2

    @property
    def midpoint(self) -> np.ndarray:
        return 0.5 * (self.mu1 + self.mu2)


def _mean_cov(rows):
    mu = rows.mean(axis=0)
    centered = rows - mu
    return mu, symmetrize(centered.T @ centered / rows.shape[0])


def estimate_moments(data: LabeledDataset) -> ClassMoments:
    """Class means and ``1/n_k`` sample covariances.

    Raises
    ------
    MissingClass
        If one of the labels 1, 2 never occurs.
    ClassTooSmall
        If a class has fewer than two rows.
    """
    if data.n == 0:
        raise EmptyInput("dataset has no rows")
    out = {}
    for k in (1, 2):
        rows = data.class_rows(k)
        if rows.shape[0] == 0:
            raise MissingClass(f"class {k} has no observations")
        if rows.shape[0] < 2:
            raise ClassTooSmall(f"class {k} has {rows.shape[0]} observation(s); need at least 2")
        out[k] = (*_mean_cov(rows), rows.shape[0])
    (mu1, s1, n1), (mu2, s2, n2) = out[1], out[2]
    return ClassMoments(mu1=mu1, mu2=mu2, sigma1=s1, sigma2=s2, n1=n1, n2=n2)
