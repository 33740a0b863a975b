import itertools

import numpy as np
import pytest

from quda.moments import LabeledDataset, estimate_moments


def random_dataset(rng, p, n_per_class, scale2=None):
    x1 = rng.standard_normal((n_per_class, p))
    mix = np.eye(p) + 0.3 * rng.standard_normal((p, p)) / np.sqrt(p)
    x2 = rng.standard_normal((n_per_class, p)) @ mix
    if scale2 is not None:
        x2 = x2 * scale2
    x2 = x2 + 0.5
    labels = np.r_[np.ones(n_per_class, dtype=int), np.full(n_per_class, 2)]
    return LabeledDataset(np.vstack([x1, x2]), labels)


def random_moments(rng, p, n_per_class=None):
    n = n_per_class or 10 * p
    return estimate_moments(random_dataset(rng, p, n, scale2=rng.uniform(0.6, 1.6, size=p)))


def random_spd(rng, p, cond=10.0):
    q, _ = np.linalg.qr(rng.standard_normal((p, p)))
    d = np.geomspace(1.0, 1.0 / cond, p)
    return (q * d) @ q.T


def kron_solve(s1, s2, rhs, rho=0.0):
    """Dense oracle for ``s1 W s2 + rho W = rhs`` via the p^2 x p^2 system."""
    p = s1.shape[0]
    # vec (column-major) of s1 W s2 is kron(s2.T, s1) vec(W)
    k = np.kron(s2.T, s1) + rho * np.eye(p * p)
    w = np.linalg.solve(k, rhs.reshape(-1, order="F"))
    return w.reshape(p, p, order="F")


def lasso_enumeration(a, gamma, lam):
    """Brute-force lasso: try every sign pattern in {-1, 0, 1}^p and keep
    the one whose restricted solve satisfies all optimality conditions."""
    p = a.shape[0]
    found = []
    for pattern in itertools.product((-1, 0, 1), repeat=p):
        s = np.array(pattern, dtype=float)
        act = np.flatnonzero(s)
        x = np.zeros(p)
        if act.size:
            x[act] = np.linalg.solve(a[np.ix_(act, act)], gamma[act] - lam * s[act])
            if np.any(np.sign(x[act]) != s[act]):
                continue
        grad = a @ x - gamma
        inact = np.flatnonzero(s == 0)
        if np.all(np.abs(grad[inact]) <= lam + 1e-12):
            found.append(x)
    assert len(found) >= 1
    return found[0]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def acceptance_log():
    return _ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
