import warnings

import numpy as np
import pytest

import quda.admm as admm_mod
from quda.admm import (
    AdmmConfig,
    OmegaSolver,
    build_b_matrix,
    default_rho,
    kkt_residual_omega,
    omega_update,
    solve_omega,
)
from quda.errors import ConvergenceWarning, NoConvergence, NonPositiveRho, ShapeMismatch
from quda.linalg import sym_eigen
from quda.moments import ClassMoments, estimate_moments

from conftest import kron_solve, random_dataset, random_moments, random_spd

TIGHT = AdmmConfig(tol_abs=1e-10, tol_rel=1e-9, max_iter=5000)


def _moments(s1, s2):
    p = s1.shape[0]
    return ClassMoments(np.zeros(p), np.zeros(p), s1, s2, 10, 10)


class TestBMatrix:
    def test_examples(self):
        np.testing.assert_allclose(build_b_matrix([2.0], [3.0], 1.0), [[1 / 7]])
        np.testing.assert_array_equal(build_b_matrix(np.zeros(3), np.zeros(3), 2.0), np.full((3, 3), 0.5))
        np.testing.assert_allclose(build_b_matrix([1.0, 0.0], [1.0, 0.0], 1.0), [[0.5, 1], [1, 1]])

    def test_clamps_round_off_negatives(self):
        b = build_b_matrix([1.0, -1e-14], [2.0, 1.0], 1.0)
        assert np.all(b <= 1.0) and np.all(b > 0)

    @pytest.mark.parametrize("rho", [0.0, -1.0])
    def test_rejects_nonpositive_rho(self, rho):
        with pytest.raises(NonPositiveRho):
            build_b_matrix([1.0], [1.0], rho)
        with pytest.raises(NonPositiveRho):
            AdmmConfig(rho=rho)


class TestOmegaUpdate:
    def test_identity_covariances(self, rng):
        eig = sym_eigen(np.eye(3))
        a = rng.standard_normal((3, 3))
        out = omega_update(a, eig, eig, build_b_matrix(eig.d, eig.d, 1.0))
        np.testing.assert_allclose(out, a / 2, atol=1e-15)

    def test_diagonal_small_rho_limit(self):
        s1, s2 = np.diag([1.0, 2.0]), np.diag([2.0, 1.0])
        e1, e2 = sym_eigen(s1), sym_eigen(s2)
        out = omega_update(s1 - s2, e1, e2, build_b_matrix(e1.d, e2.d, 1e-12))
        np.testing.assert_allclose(out, np.diag([-0.5, 0.5]), atol=1e-10)

    def test_matches_kronecker_system(self, rng):
        s1, s2 = random_spd(rng, 4, 5), random_spd(rng, 4, 8)
        a = rng.standard_normal((4, 4))
        e1, e2 = sym_eigen(s1), sym_eigen(s2)
        out = omega_update(a, e1, e2, build_b_matrix(e1.d, e2.d, 0.7))
        expected = kron_solve(s1, s2, a, rho=0.7)
        assert np.max(np.abs(out - expected)) <= 1e-8
        # residual of the linear system itself
        resid = s1 @ out @ s2 + 0.7 * out - a
        assert np.linalg.norm(resid) <= 1e-8 * np.linalg.norm(a)

    def test_shape_mismatch(self):
        eig = sym_eigen(np.eye(3))
        with pytest.raises(ShapeMismatch):
            omega_update(np.zeros((2, 2)), eig, eig, np.ones((3, 3)))


def test_default_rho():
    # sqrt((4*1 + eps) * (1*0.5 + eps))
    assert default_rho([4.0, 1.0], [1.0, 0.5], eps=0.0) == pytest.approx(np.sqrt(2.0))
    # zero eigenvalues are skipped when looking for the smallest positive one
    assert default_rho([2.0, 0.0], [2.0, 1.0], eps=0.0) == pytest.approx(np.sqrt(8.0))


class TestSolveOmega:
    @pytest.mark.parametrize("lam", [0.0, 0.1, 5.0])
    def test_equal_covariances_give_zero(self, rng, lam):
        s = random_spd(rng, 5)
        sol = solve_omega(_moments(s, s.copy()), lam)
        assert np.max(np.abs(sol.omega)) <= 1e-12
        assert sol.converged

    def test_lambda_zero_matches_dense_solve(self, rng):
        m = random_moments(rng, 3)
        sol = solve_omega(m, 0.0, TIGHT)
        expected = kron_solve(m.sigma1, m.sigma2, m.sigma1 - m.sigma2)
        assert np.max(np.abs(sol.omega - expected)) <= 1e-5
        assert kkt_residual_omega(sol.omega_raw, m, 0.0) <= 1e-6

    def test_large_lambda_gives_zero(self, rng):
        m = random_moments(rng, 6)
        lam = np.max(np.abs(m.sigma1 - m.sigma2))
        sol = solve_omega(m, lam)
        assert not np.any(sol.omega)
        assert sol.support == frozenset()

    def test_symmetrization_and_support(self, rng):
        m = random_moments(rng, 8)
        sol = solve_omega(m, 0.05)
        np.testing.assert_array_equal(sol.omega, 0.5 * (sol.omega_raw + sol.omega_raw.T))
        nz = {(i, j) for i in range(8) for j in range(8) if sol.omega[i, j] != 0}
        assert sol.support == nz
        assert 0 < len(nz) < 64  # some, not all, entries are exact zeros
        assert sol.unique_support() == {(i, j) for i, j in nz if i <= j}

    def test_residuals_below_threshold_at_exit(self, rng):
        m = random_moments(rng, 10)
        cfg = AdmmConfig()
        sol = solve_omega(m, 0.1, cfg)
        assert sol.converged
        p = m.p
        scale = np.linalg.norm(sol.omega_raw) + sol.primal_residual
        assert sol.primal_residual <= p * cfg.tol_abs + cfg.tol_rel * scale
        assert sol.dual_residual <= p * cfg.tol_abs + cfg.tol_rel * np.linalg.norm(sol.dual)

    def test_kkt_random_p10(self, rng):
        m = random_moments(rng, 10)
        for lam in (0.02, 0.2):
            sol = solve_omega(m, lam)
            assert kkt_residual_omega(sol.omega_raw, m, lam) <= 1e-3 * max(lam, 1)

    def test_permutation_invariance(self, rng):
        data = random_dataset(rng, 8, 60, scale2=rng.uniform(0.7, 1.5, 8))
        perm = rng.permutation(8)
        m = estimate_moments(data)
        mp = estimate_moments(type(data)(data.x[:, perm], data.labels))
        a = solve_omega(m, 0.05, TIGHT).omega
        b = solve_omega(mp, 0.05, TIGHT).omega
        np.testing.assert_allclose(b, a[np.ix_(perm, perm)], atol=1e-7)

    def test_eigendecomposition_computed_once(self, rng, monkeypatch):
        calls = []
        real = admm_mod.sym_eigen

        def counting(a, *args, **kwargs):
            calls.append(1)
            return real(a, *args, **kwargs)

        monkeypatch.setattr(admm_mod, "sym_eigen", counting)
        solver = OmegaSolver(random_moments(rng, 5))
        solver.path([0.3, 0.1, 0.03])
        assert len(calls) == 2

    def test_warm_start_agrees_with_cold(self, rng):
        m = random_moments(rng, 6)
        solver = OmegaSolver(m, TIGHT)
        warm = solver.path([0.2, 0.05])[-1]
        cold = solver.solve(0.05)
        np.testing.assert_allclose(warm.omega, cold.omega, atol=1e-7)

    def test_nonconvergence_is_flagged(self, rng):
        m = random_moments(rng, 6)
        with pytest.warns(ConvergenceWarning):
            sol = solve_omega(m, 0.01, AdmmConfig(max_iter=1))
        assert not sol.converged and sol.iterations == 1
        with pytest.raises(NoConvergence) as info:
            solve_omega(m, 0.01, AdmmConfig(max_iter=1, strict=True))
        assert info.value.result is not None

    def test_negative_lambda(self, rng):
        with pytest.raises(ValueError):
            solve_omega(random_moments(rng, 3), -0.1)


class TestKkt:
    def test_exact_lambda_zero_solution(self, rng):
        m = random_moments(rng, 4)
        exact = kkt_residual_omega(kron_solve(m.sigma1, m.sigma2, m.sigma1 - m.sigma2), m, 0.0)
        assert exact <= 1e-8

    def test_zero_at_large_lambda(self, rng):
        m = random_moments(rng, 4)
        lam = np.max(np.abs(m.sigma1 - m.sigma2))
        assert kkt_residual_omega(np.zeros((4, 4)), m, lam) == 0.0

    def test_zero_matrix_below_threshold(self, rng):
        m = random_moments(rng, 4)
        gap = np.max(np.abs(m.sigma1 - m.sigma2))
        assert kkt_residual_omega(np.zeros((4, 4)), m, 0.0) == pytest.approx(gap)

    def test_shape_check(self, rng):
        with pytest.raises(ShapeMismatch):
            kkt_residual_omega(np.zeros((2, 2)), random_moments(rng, 3), 0.1)
