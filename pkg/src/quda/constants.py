"""Numerical tolerances used across solvers and tests.

Keeping them in one record means the solvers and the test-suite check the
same thresholds.
"""

from dataclasses import dataclass


@dataclass(frozen=True)
class Tolerances:
    # symmetry check for inputs declared symmetric
    symmetry: float = 1e-12
    # eigenvalue d is treated as positive iff d > pd_relative * d_max
    pd_relative: float = 1e-12
    # covariance eigenvalues above -psd_slack count as nonnegative
    psd_slack: float = 1e-10
    jacobi_max_sweeps: int = 100
    # absolute threshold used to read supports from true parameters
    support_zero: float = 1e-10
    # coordinate descent: stop when max |change| over a sweep drops below this
    cd_tol: float = 1e-8
    # when p >= n - 1 the lasso can be unbounded below for small penalties;
    # the cap bounds the time spent before such a run is flagged
    cd_max_sweeps: int = 1000
    zero_diagonal: float = 1e-12
    # regularizer inside the default ADMM penalty heuristic
    rho_eps: float = 1e-8


TOL = Tolerances()
