import numpy as np
import pytest

from srbo.data import Dataset


def random_psd(rng, n, rank=None, jitter=1e-3):
    """M'M plus a small ridge; well-posed for every solver."""
    m = rank or n
    M = rng.standard_normal((m, n))
    return M.T @ M / m + jitter * np.eye(n)


def two_blobs(rng, n_per_class, mu=2.0, dim=2):
    X = np.vstack([rng.normal(mu, 1.0, (n_per_class, dim)),
                   rng.normal(-mu, 1.0, (n_per_class, dim))])
    y = np.r_[np.ones(n_per_class), -np.ones(n_per_class)]
    return Dataset(X, y)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_instance(rng, n_max=60, n_min=10):
    """Small labelled problem with a random kernel; sizes and overlap vary."""
    from srbo.kernel import KernelSpec
    n_per = int(rng.integers(n_min // 2, n_max // 2 + 1))
    d = two_blobs(rng, n_per, mu=float(rng.uniform(0.3, 2.5)), dim=int(rng.integers(2, 4)))
    if rng.random() < 0.5:
        spec = KernelSpec("linear")
    else:
        spec = KernelSpec("rbf", sigma=float(2.0 ** rng.uniform(-1, 2)))
    return d, spec


def random_nu_pair(rng, n):
    lo, hi = 0.05, 1.0 - 1.0 / n
    a, b = np.sort(rng.uniform(lo, hi, 2))
    if b - a < 1e-3:
        b = min(a + 0.05, hi)
    return float(a), float(b)


def oracle_alpha(oracle, nu, n, eps=1e-10):
    """Reference-solver optimum; a tightly converged DCDM when the reference stalls."""
    from srbo.qp import NuBoxConstraints, dcdm_solve, pg_reference_solve
    c = NuBoxConstraints.full(nu, n)
    sol = pg_reference_solve(oracle, None, c, eps=eps, max_iters=100000)
    if sol.converged:
        return sol.alpha
    sol = dcdm_solve(oracle, None, c, eps=1e-13, max_sweeps=100000)
    assert sol.converged
    return sol.alpha


def screening_ball(oracle, nu0, nu1, n):
    """(alpha0, ball) built the way the path driver builds it."""
    from srbo.qp import NuBoxConstraints, dcdm_solve
    from srbo.screening import linear_gap, make_ball, solve_delta_full
    a0 = dcdm_solve(oracle, None, NuBoxConstraints.full(nu0, n), eps=1e-12,
                    max_sweeps=100000).alpha
    Qa0 = oracle.matvec(a0)
    delta = solve_delta_full(oracle, a0, nu1, 1.0 / n, eps=1e-12, Qalpha0=Qa0)
    slack = linear_gap(Qa0, a0, 1.0 / n, nu0)
    return a0, make_ball(oracle, a0, delta, nu0, nu1, Qalpha_k=Qa0, slack=slack)


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.report_lines():
        terminalreporter.write_line(line)
