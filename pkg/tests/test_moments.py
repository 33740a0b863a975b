import numpy as np
import pytest

from quda.errors import ClassTooSmall, InvalidLabel, MissingClass, NonFinite, ShapeMismatch
from quda.moments import LabeledDataset, estimate_moments

from conftest import random_dataset


def _data(class1, class2):
    x = np.array(class1 + class2, dtype=float)
    labels = [1] * len(class1) + [2] * len(class2)
    return LabeledDataset(x, labels)


def test_two_point_class():
    m = estimate_moments(_data([[0, 0], [2, 2]], [[1, 0], [0, 1], [3, 3]]))
    np.testing.assert_array_equal(m.mu1, [1, 1])
    np.testing.assert_array_equal(m.sigma1, [[1, 1], [1, 1]])
    assert (m.n1, m.n2) == (2, 3)


def test_identical_rows_give_zero_covariance():
    m = estimate_moments(_data([[1.5, -2.0]] * 4, [[0, 0], [1, 1]]))
    np.testing.assert_array_equal(m.sigma1, np.zeros((2, 2)))


def test_one_dimensional():
    m = estimate_moments(_data([[0], [1], [2]], [[5], [7]]))
    assert m.mu1[0] == 1.0
    assert m.sigma1[0, 0] == pytest.approx(2 / 3, abs=1e-15)
    assert m.sigma2[0, 0] == 1.0


def test_translation_equivariance(rng):
    data = random_dataset(rng, 5, 20)
    c = rng.standard_normal(5) * 10
    m0, m1 = estimate_moments(data), estimate_moments(data.shifted(c))
    np.testing.assert_allclose(m1.mu1, m0.mu1 + c, atol=1e-12)
    np.testing.assert_allclose(m1.mu2, m0.mu2 + c, atol=1e-12)
    np.testing.assert_allclose(m1.sigma1, m0.sigma1, atol=1e-12)
    np.testing.assert_allclose(m1.sigma2, m0.sigma2, atol=1e-12)


def test_double_loop_oracle(rng):
    data = random_dataset(rng, 4, 9)
    m = estimate_moments(data)
    for k, sigma in ((1, m.sigma1), (2, m.sigma2)):
        rows = data.class_rows(k)
        n, p = rows.shape
        mu = [sum(rows[i, a] for i in range(n)) / n for a in range(p)]
        for a in range(p):
            for b in range(p):
                s = sum((rows[i, a] - mu[a]) * (rows[i, b] - mu[b]) for i in range(n)) / n
                assert abs(sigma[a, b] - s) <= 1e-12


def test_symmetric_and_psd(rng):
    m = estimate_moments(random_dataset(rng, 12, 8))  # n < p: singular
    for s in (m.sigma1, m.sigma2):
        assert np.array_equal(s, s.T)
        assert np.linalg.eigvalsh(s).min() >= -1e-10


def test_errors():
    with pytest.raises(MissingClass):
        estimate_moments(LabeledDataset(np.zeros((3, 2)), [1, 1, 1]))
    with pytest.raises(ClassTooSmall):
        estimate_moments(_data([[0, 0]], [[1, 1], [2, 2]]))
    with pytest.raises(InvalidLabel):
        LabeledDataset(np.zeros((2, 1)), [1, 3])
    with pytest.raises(NonFinite):
        LabeledDataset([[0.0], [np.inf]], [1, 2])
    with pytest.raises(ShapeMismatch):
        LabeledDataset(np.zeros((3, 2)), [1, 2])
