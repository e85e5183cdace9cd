import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import random_psd
from srbo.qp import (NuBoxConstraints, SimplexBoxConstraints, SubsetView, dcdm_solve, objective,
                     pg_reference_solve, project_box_linear, smo_equality_solve)


def _feasible_nu(alpha, c, tol=1e-10):
    return (alpha.min() >= -tol and alpha.max() <= c.upper + tol
            and alpha.sum() >= c.linear_floor - tol)


def test_dcdm_identity_example():
    c = NuBoxConstraints(nu=0.5, upper=0.5, linear_floor=0.5)
    sol = dcdm_solve(np.eye(2), None, c, eps=1e-8)
    np.testing.assert_allclose(sol.alpha, [0.25, 0.25], atol=1e-12)
    assert sol.objective == pytest.approx(0.0625, abs=1e-12)
    ref = pg_reference_solve(np.eye(2), None, c)
    np.testing.assert_allclose(ref.alpha, [0.25, 0.25], atol=1e-9)


def test_dcdm_optimal_start_returns_unchanged():
    c = NuBoxConstraints(nu=0.5, upper=0.5, linear_floor=0.5)
    a0 = np.array([0.25, 0.25])
    sol = dcdm_solve(np.eye(2), None, c, alpha0=a0)
    np.testing.assert_array_equal(sol.alpha, a0)
    assert sol.sweeps == 1 and sol.converged


def test_dcdm_escapes_tight_floor():
    # once the floor binds, single coordinates cannot move mass; optimum is 10/11, 1/11
    Q = np.diag([1.0, 10.0])
    c = NuBoxConstraints(nu=1.0, upper=1.0, linear_floor=1.0)
    sol = dcdm_solve(Q, None, c, alpha0=[0.5, 0.5])
    np.testing.assert_allclose(sol.alpha, [10 / 11, 1 / 11], atol=1e-9)


def test_dcdm_random_against_reference(rng):
    for _ in range(10):
        Q = random_psd(rng, 20)
        c = NuBoxConstraints.full(0.3, 20)
        a = dcdm_solve(Q, None, c, eps=1e-10)
        b = pg_reference_solve(Q, None, c, eps=1e-10)
        assert a.converged
        assert abs(a.objective - b.objective) <= 1e-6 * (1 + abs(b.objective))


def test_dcdm_with_linear_term_against_reference(rng):
    for _ in range(10):
        n = 15
        Q = random_psd(rng, n)
        f = rng.standard_normal(n) * 0.1
        c = NuBoxConstraints(nu=0.4, upper=1.0 / n, linear_floor=0.4)
        a = dcdm_solve(Q, f, c, eps=1e-10)
        b = pg_reference_solve(Q, f, c, eps=1e-10)
        assert abs(a.objective - b.objective) <= 1e-6 * (1 + abs(b.objective))


def test_dcdm_monotone_and_feasible_every_sweep(rng):
    for _ in range(20):
        n = int(rng.integers(5, 30))
        Q = random_psd(rng, n, rank=max(2, n // 3))
        c = NuBoxConstraints.full(float(rng.uniform(0.05, 0.9)), n)
        sol = dcdm_solve(Q, None, c, eps=1e-9)
        assert np.all(np.diff(sol.history) <= 1e-12)
        assert _feasible_nu(sol.alpha, c)
        if sol.converged:
            assert sol.max_projected_gradient <= 1e-9


def test_smo_examples():
    sol = smo_equality_solve(np.eye(2), SimplexBoxConstraints.one_class(1.0, 2))
    np.testing.assert_allclose(sol.alpha, [0.5, 0.5], atol=1e-12)
    sol = smo_equality_solve(np.eye(4), SimplexBoxConstraints.one_class(0.5, 4))
    np.testing.assert_allclose(sol.alpha, np.full(4, 0.25), atol=1e-10)


def test_smo_random_against_reference(rng):
    for _ in range(10):
        H = random_psd(rng, 15)
        c = SimplexBoxConstraints.one_class(0.4, 15)
        a = smo_equality_solve(H, c, eps=1e-10)
        b = pg_reference_solve(H, None, c, eps=1e-10)
        assert abs(a.objective - b.objective) <= 1e-6 * (1 + abs(b.objective))
        assert abs(a.alpha.sum() - 1.0) <= 1e-10
        assert np.all(np.diff(a.history) <= 1e-12)


def test_infeasible_and_nonfinite_inputs():
    with pytest.raises(ValueError):
        dcdm_solve(np.eye(2), None, NuBoxConstraints(nu=2.0, upper=0.5, linear_floor=2.0))
    with pytest.raises(ValueError):
        smo_equality_solve(np.eye(2), SimplexBoxConstraints(upper=0.2, sum_target=1.0))
    bad = np.eye(2)
    bad[0, 1] = np.nan
    with pytest.raises(FloatingPointError):
        dcdm_solve(bad, None, NuBoxConstraints.full(0.5, 2))
    with pytest.raises(ValueError):
        dcdm_solve(np.eye(2), None, NuBoxConstraints.full(0.5, 2), alpha0=[0.0, 0.1])


def test_subset_view_matches_copy(rng):
    Q = random_psd(rng, 25)
    idx = np.sort(rng.choice(25, 11, replace=False))
    c = NuBoxConstraints(nu=0.3, upper=1 / 25, linear_floor=0.3)
    f = rng.standard_normal(11) * 0.01
    a = dcdm_solve(SubsetView(Q, idx), f, c, eps=1e-10)
    b = dcdm_solve(Q[np.ix_(idx, idx)], f, c, eps=1e-10)
    np.testing.assert_allclose(a.alpha, b.alpha, atol=1e-12)
    assert objective(Q[np.ix_(idx, idx)], a.alpha, f) == pytest.approx(a.objective, rel=1e-10)


def test_project_examples():
    np.testing.assert_allclose(project_box_linear([2, -1], 1.0, floor=0.5), [1, 0])
    np.testing.assert_allclose(project_box_linear([0, 0], 1.0, floor=1.0), [0.5, 0.5])
    np.testing.assert_allclose(project_box_linear([0.3, 0.3], 0.5, target=1.0), [0.5, 0.5])
    with pytest.raises(ValueError):
        project_box_linear([0, 0], 0.4, floor=1.0)


def _random_feasible(rng, n, upper, floor=None, target=None):
    q = rng.uniform(0, upper, n)
    goal = target if target is not None else floor
    if target is not None or q.sum() < floor:
        return project_box_linear(q, upper, target=goal) if target is not None else \
            project_box_linear(q, upper, floor=goal)
    return q


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 12), st.floats(0.05, 1.0), st.floats(0.0, 1.0), st.booleans(),
       st.integers(0, 2 ** 32 - 1))
def test_projection_optimality(n, upper, frac, equality, seed):
    rng = np.random.default_rng(seed)
    v = rng.normal(0, 1, n)
    goal = frac * n * upper
    kw = {"target": goal} if equality else {"floor": goal}
    p = project_box_linear(v, upper, **kw)
    assert p.min() >= -1e-12 and p.max() <= upper + 1e-12
    if equality:
        assert abs(p.sum() - goal) <= 1e-9
    else:
        assert p.sum() >= goal - 1e-9
    for _ in range(20):
        q = _random_feasible(rng, n, upper, **kw)
        assert (v - p) @ (q - p) <= 1e-9


def test_reference_fixed_point():
    c = NuBoxConstraints(nu=0.5, upper=0.5, linear_floor=0.5)
    sol = pg_reference_solve(np.eye(2), None, c, alpha0=[0.25, 0.25])
    assert sol.sweeps == 1
    np.testing.assert_allclose(sol.alpha, [0.25, 0.25])
