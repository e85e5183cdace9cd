"""Dual QP solvers for the two SVM constraint shapes.

* ``dcdm_solve``: cyclic dual coordinate descent over
  {sum(alpha) >= floor, 0 <= alpha <= upper}, with a linear term.
* ``smo_equality_solve``: pairwise updates over
  {sum(alpha) == target, 0 <= alpha <= upper}.
* ``pg_reference_solve``: plain projected gradient, slow but independent,
  used to check the other two.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _accel
from . import _qp_numpy
from .kernel import GramOracle

FEAS_TOL = 1e-10


@dataclass(frozen=True)
class NuBoxConstraints:
    """sum(alpha) >= linear_floor, 0 <= alpha <= upper."""

    nu: float
    upper: float
    linear_floor: float

    @classmethod
    def full(cls, nu, n):
        return cls(nu=nu, upper=1.0 / n, linear_floor=nu)

    def check(self, n):
        if not self.upper >= 0:
            raise ValueError(f"box upper must be >= 0, got {self.upper}")
        if self.linear_floor > n * self.upper + FEAS_TOL:
            raise ValueError(
                f"infeasible: sum floor {self.linear_floor:.6g} exceeds "
                f"{n} * {self.upper:.6g}")


@dataclass(frozen=True)
class SimplexBoxConstraints:
    """sum(alpha) == sum_target, 0 <= alpha <= upper."""

    upper: float
    sum_target: float = 1.0

    @classmethod
    def one_class(cls, nu, n):
        return cls(upper=1.0 / (nu * n), sum_target=1.0)

    def check(self, n):
        if not self.upper > 0:
            raise ValueError(f"box upper must be > 0, got {self.upper}")
        if self.sum_target < -FEAS_TOL or self.sum_target > n * self.upper + FEAS_TOL:
            raise ValueError(
                f"infeasible: target {self.sum_target:.6g} outside [0, {n} * {self.upper:.6g}]")


@dataclass
class DualSolution:
    alpha: np.ndarray
    objective: float
    sweeps: int
    max_projected_gradient: float
    converged: bool
    history: np.ndarray = field(default_factory=lambda: np.empty(0), repr=False)


class SubsetView:
    """Principal submatrix Q[idx, idx] of a dense matrix or Gram oracle, never copied."""

    def __init__(self, base, idx):
        self.base = base
        self.idx = np.ascontiguousarray(idx, dtype=np.intp)
        self.n = self.idx.size
        if isinstance(base, np.ndarray):
            self.base_dense = base
            self._diag = np.diag(base)[self.idx].copy()
        else:
            self.base_dense = base.dense() if hasattr(base, "dense") else None
            self._diag = np.asarray(base.diag(), dtype=np.float64)[self.idx]

    def row(self, i):
        if self.base_dense is not None:
            return self.base_dense[self.idx[i]][self.idx]
        return self.base.row(self.idx[i])[self.idx]

    def diag(self):
        return self._diag

    def dense(self):
        return None


class _Access:
    """Uniform view over a dense array, a GramOracle, a SubsetView, or anything
    with row/diag. ``base``/``idx`` describe the matrix handed to numba."""

    def __init__(self, Q):
        self.idx = None
        if isinstance(Q, np.ndarray):
            Q = np.ascontiguousarray(Q, dtype=np.float64)
            if Q.ndim != 2 or Q.shape[0] != Q.shape[1]:
                raise ValueError("Q must be a square matrix")
            if not np.all(np.isfinite(Q)):
                raise FloatingPointError("non-finite Gram entries")
            self.base = Q
            self.n = Q.shape[0]
            self.row = Q.__getitem__
            self.diag = np.diag(Q).copy()
        elif isinstance(Q, SubsetView):
            # GramOracle checks its dense matrix once when building it
            self.base = Q.base_dense
            self.idx = Q.idx
            self.n = Q.n
            self.row = Q.row
            self.diag = Q.diag()
        else:
            self.base = Q.dense() if hasattr(Q, "dense") else None
            self.n = Q.n
            self.row = Q.row
            self.diag = np.asarray(Q.diag(), dtype=np.float64)
        if self.base is not None and self.idx is None:
            self.idx = np.arange(self.n, dtype=np.intp)
        if not np.all(np.isfinite(self.diag)):
            raise FloatingPointError("non-finite Gram entries")

    @property
    def is_full(self):
        return self.base is not None and self.idx.size == self.base.shape[0]

    def matvec(self, v):
        if self.base is not None:
            if self.is_full:
                return self.base @ v
            if _accel.USE_NUMBA:
                from . import _qp_numba
                return _qp_numba.subset_matvec(self.base, self.idx, v)
        out = np.zeros(self.n)
        for j in np.flatnonzero(v):
            out += v[j] * self.row(j)
        return out


def _linear_term(f, n):
    if f is None:
        return np.zeros(n)
    f = np.asarray(f, dtype=np.float64).copy()
    if f.shape != (n,):
        raise ValueError(f"linear term has shape {f.shape}, expected ({n},)")
    if not np.all(np.isfinite(f)):
        raise FloatingPointError("non-finite linear term")
    return f


def objective(Q, alpha, f=None):
    """0.5 a'Qa + f'a, recomputed from scratch."""
    acc = Q if isinstance(Q, _Access) else _Access(Q)
    alpha = np.asarray(alpha, dtype=np.float64)
    val = 0.5 * float(alpha @ acc.matvec(alpha))
    if f is not None:
        val += float(np.asarray(f) @ alpha)
    return val


def _check_start(alpha0, c, n):
    alpha = np.array(alpha0, dtype=np.float64)
    if alpha.shape != (n,):
        raise ValueError(f"alpha0 has shape {alpha.shape}, expected ({n},)")
    if alpha.min(initial=0.0) < -FEAS_TOL or alpha.max(initial=0.0) > c.upper + FEAS_TOL:
        raise ValueError("alpha0 violates the box")
    np.clip(alpha, 0.0, c.upper, out=alpha)
    return alpha


def _use_jit(acc):
    return _accel.USE_NUMBA and acc.base is not None


def dcdm_solve(Q, f=None, constraints: NuBoxConstraints = None, alpha0=None,
               eps=1e-8, max_sweeps=10000) -> DualSolution:
    """Minimize 0.5 a'Qa + f'a over {sum(a) >= floor, 0 <= a <= upper}.

    Each sweep visits the coordinates in order and minimizes exactly along
    each one (step 1/Q_ii), clipped to [max(0, floor - sum_{k!=i} a_k), upper].
    A coordinate is only moved when its projected gradient exceeds ``eps``.
    The sweep then runs mass-preserving pair moves so that progress does not
    stall once the sum floor is tight. Stops when neither pass finds a
    violation above ``eps``.
    """
    acc = Q if isinstance(Q, _Access) else _Access(Q)
    n = acc.n
    c = constraints
    c.check(n)
    f = _linear_term(f, n)
    if alpha0 is None:
        alpha = np.full(n, max(c.linear_floor, 0.0) / n) if n else np.zeros(0)
        np.minimum(alpha, c.upper, out=alpha)
    else:
        alpha = _check_start(alpha0, c, n)
        if alpha.sum() < c.linear_floor - FEAS_TOL:
            raise ValueError("alpha0 violates the sum floor")
    if n == 0:
        return DualSolution(alpha, 0.0, 0, 0.0, True, np.zeros(1))
    if _use_jit(acc):
        from . import _qp_numba
        sweeps, worst, conv, hist = _qp_numba.dcdm(
            acc.base, acc.idx, f, alpha, float(c.linear_floor), float(c.upper), float(eps), int(max_sweeps))
    else:
        sweeps, worst, conv, hist = _qp_numpy.dcdm(
            acc.row, acc.diag, f, alpha, float(c.linear_floor), float(c.upper), float(eps),
            int(max_sweeps))
    return DualSolution(alpha=alpha, objective=objective(acc, alpha, f), sweeps=int(sweeps),
                        max_projected_gradient=float(worst), converged=bool(conv),
                        history=np.asarray(hist))


def smo_equality_solve(Q, constraints: SimplexBoxConstraints, alpha0=None, eps=1e-8,
                       max_sweeps=10000, f=None) -> DualSolution:
    """Minimize 0.5 a'Qa + f'a over {sum(a) == target, 0 <= a <= upper}.

    Each step moves mass from the coordinate with the largest gradient that
    can still decrease to the one with the smallest gradient that can still
    increase, with an exact line search. A sweep is n such steps.
    """
    acc = Q if isinstance(Q, _Access) else _Access(Q)
    n = acc.n
    c = constraints
    c.check(n)
    f = _linear_term(f, n)
    if alpha0 is None:
        alpha = np.full(n, c.sum_target / n) if n else np.zeros(0)
    else:
        alpha = _check_start(alpha0, c, n)
        if abs(alpha.sum() - c.sum_target) > FEAS_TOL * max(1, n):
            raise ValueError("alpha0 violates the equality constraint")
    if n == 0:
        return DualSolution(alpha, 0.0, 0, 0.0, True, np.zeros(1))
    if _use_jit(acc):
        from . import _qp_numba
        sweeps, worst, conv, hist = _qp_numba.smo(
            acc.base, acc.idx, f, alpha, float(c.upper), float(eps), int(max_sweeps))
    else:
        sweeps, worst, conv, hist = _qp_numpy.smo(
            acc.row, acc.diag, f, alpha, float(c.upper), float(eps), int(max_sweeps))
    return DualSolution(alpha=alpha, objective=objective(acc, alpha, f), sweeps=int(sweeps),
                        max_projected_gradient=float(worst), converged=bool(conv),
                        history=np.asarray(hist))


def _clip_sum(v, lam, upper):
    return np.clip(v + lam, 0.0, upper)


def project_box_linear(v, upper, floor=None, target=None):
    """Euclidean projection onto [0, upper]^n intersected with sum >= floor or sum == target.

    The sum of clip(v + lam, 0, upper) is piecewise linear and nondecreasing
    in the shift lam, with kinks at -v_i and upper - v_i. Bisection over the
    sorted kinks brackets the target sum inside one linear piece, where lam
    is then solved exactly.
    """
    v = np.asarray(v, dtype=np.float64)
    n = v.shape[0]
    if (floor is None) == (target is None):
        raise ValueError("give exactly one of floor / target")
    goal = float(target if target is not None else floor)
    if goal > n * upper + FEAS_TOL or (target is not None and goal < -FEAS_TOL):
        raise ValueError("empty feasible set")
    p = _clip_sum(v, 0.0, upper)
    if n == 0 or (floor is not None and p.sum() >= goal):
        return p
    goal = min(max(goal, 0.0), n * upper)
    kinks = np.unique(np.concatenate([-v, upper - v]))
    lo, hi = 0, kinks.size - 1
    # invariant: s(kinks[lo]) <= goal <= s(kinks[hi])
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if _clip_sum(v, kinks[mid], upper).sum() < goal:
            lo = mid
        else:
            hi = mid
    a, b = kinks[lo], kinks[hi]
    sa = _clip_sum(v, a, upper).sum()
    sb = _clip_sum(v, b, upper).sum()
    lam = b if sb <= sa else a + (goal - sa) * (b - a) / (sb - sa)
    return _clip_sum(v, lam, upper)


def _project(v, c):
    if isinstance(c, NuBoxConstraints):
        return project_box_linear(v, c.upper, floor=c.linear_floor)
    return project_box_linear(v, c.upper, target=c.sum_target)


def lipschitz_estimate(acc, n_iter=20, safety=1.1, seed=0):
    """Power-iteration estimate of the top eigenvalue of Q, inflated by ``safety``."""
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(acc.n)
    x /= np.linalg.norm(x)
    lam = 0.0
    for _ in range(n_iter):
        y = acc.matvec(x)
        nrm = np.linalg.norm(y)
        if nrm == 0.0:
            return 1.0
        lam = float(x @ y)
        x = y / nrm
    return max(safety * max(lam, float(np.max(acc.diag, initial=0.0))), 1e-12)


def pg_reference_solve(Q, f=None, constraints=None, eps=1e-10, max_iters=500000,
                       alpha0=None) -> DualSolution:
    """Projected gradient with fixed step 1/L.

    Works for both constraint shapes; stops once
    ||a - P(a - grad F(a))||_inf <= eps.
    """
    acc = Q if isinstance(Q, _Access) else _Access(Q)
    n = acc.n
    c = constraints
    c.check(n)
    f = _linear_term(f, n)
    if alpha0 is None:
        alpha = _project(np.zeros(n), c)
    else:
        alpha = _project(np.asarray(alpha0, dtype=np.float64), c)
    L = lipschitz_estimate(acc)
    step = 1.0 / L
    hist = []
    res = np.inf
    it = 0
    converged = False
    for it in range(1, max_iters + 1):
        grad = acc.matvec(alpha) + f
        res = float(np.max(np.abs(alpha - _project(alpha - grad, c)), initial=0.0))
        if res <= eps:
            converged = True
            break
        alpha = _project(alpha - step * grad, c)
        if it % 1000 == 0:
            hist.append(objective(acc, alpha, f))
    return DualSolution(alpha=alpha, objective=objective(acc, alpha, f), sweeps=it,
                        max_projected_gradient=res, converged=converged,
                        history=np.asarray(hist))


def warm_up():
    """Compile (or load from cache) the jit kernels so later timings exclude it."""
    Q = np.array([[2.0, 0.5], [0.5, 1.0]])
    dcdm_solve(Q, None, NuBoxConstraints.full(0.5, 2))
    smo_equality_solve(Q, SimplexBoxConstraints.one_class(0.6, 2))
    acc = _Access(SubsetView(Q, [0]))
    acc.matvec(np.ones(1))
