"""Safe screening along an increasing nu grid.

Given the optimum at nu_k, a ball in weight space is built that provably
contains the optimum at nu_{k+1}. Its centre and radius are kernelized:
the centre is Z' beta with beta = alpha_k + delta/2 and the squared radius
is r(delta) = delta'Q delta / 4 + alpha_k'Q delta. Interval bounds on each
margin then bound the offset rho through order statistics, and samples
whose whole interval sits on one side of the rho interval get their dual
coordinate fixed at 0 or at the box bound before the solve.

The helpers take a ``shape`` of "nu" (sum >= nu, box 1/l) or "oc"
(sum == 1, box 1/(nu l)) so the one-class model reuses them.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .data import Dataset
from .kernel import GramOracle, KernelSpec
from .qp import (FEAS_TOL, NuBoxConstraints, SimplexBoxConstraints, SubsetView, dcdm_solve,
                 pg_reference_solve, smo_equality_solve)


@dataclass
class SafeBall:
    beta: np.ndarray
    radius_sq: float
    nu_from: float
    nu_to: float
    delta: np.ndarray = field(repr=False, default=None)
    # extra radius covering an inexact alpha_k; 0 when alpha_k is exact
    slack: float = 0.0
    center_score: np.ndarray = field(repr=False, default=None)

    @property
    def effective_radius_sq(self):
        return self.radius_sq + self.slack


@dataclass
class ScoreBounds:
    center_score: np.ndarray
    self_norm: np.ndarray
    lower: np.ndarray
    upper: np.ndarray


@dataclass
class ScreenOutcome:
    fixed_zero: np.ndarray
    fixed_upper: np.ndarray
    survivors: np.ndarray
    upper_value: float
    rho_lower: float
    rho_upper: float
    n: int

    @property
    def screening_ratio(self):
        return (self.fixed_zero.size + self.fixed_upper.size) / self.n if self.n else 0.0

    @property
    def fixed(self):
        return np.sort(np.concatenate([self.fixed_zero, self.fixed_upper]))

    @property
    def fixed_values(self):
        vals = {int(i): 0.0 for i in self.fixed_zero}
        vals.update({int(i): self.upper_value for i in self.fixed_upper})
        return vals

    def fixed_alpha(self):
        """Length-n vector holding the fixed values and zeros on survivors."""
        a = np.zeros(self.n)
        a[self.fixed_upper] = self.upper_value
        return a


# ---------------------------------------------------------------- ball geometry

def radius_of(oracle: GramOracle, alpha0, delta, Qdelta=None):
    """r(delta) = delta'Q delta / 4 + alpha0'Q delta, clamped at 0."""
    delta = np.asarray(delta, dtype=np.float64)
    if not np.any(delta):
        return 0.0
    if Qdelta is None:
        Qdelta = oracle.matvec(delta)
    r = 0.25 * float(delta @ Qdelta) + float(np.asarray(alpha0) @ Qdelta)
    return max(r, 0.0)


def delta_feasible(alpha0, delta, nu_to, box_upper, shape="nu", tol=FEAS_TOL):
    a = np.asarray(alpha0, dtype=np.float64) + np.asarray(delta, dtype=np.float64)
    if a.min(initial=0.0) < -tol or a.max(initial=0.0) > box_upper + tol:
        return False
    s = a.sum()
    if shape == "nu":
        return bool(s >= nu_to - tol)
    return bool(abs(s - 1.0) <= tol * max(1, a.size))


def _constraints(shape, nu_to, box_upper, floor=None):
    if shape == "nu":
        return NuBoxConstraints(nu=nu_to, upper=box_upper,
                                linear_floor=nu_to if floor is None else floor)
    return SimplexBoxConstraints(upper=box_upper, sum_target=1.0 if floor is None else floor)


def _solve(shape, Q, f, c, eps, alpha0=None, max_sweeps=10000):
    if shape == "nu":
        return dcdm_solve(Q, f, c, alpha0=alpha0, eps=eps, max_sweeps=max_sweeps)
    return smo_equality_solve(Q, c, alpha0=alpha0, eps=eps, max_sweeps=max_sweeps, f=f)


def solve_delta_full(oracle: GramOracle, alpha0, nu_to, box_upper, eps=1e-8, shape="nu",
                     Qalpha0=None):
    """delta minimizing r over the feasible set for nu_to.

    With a = alpha0 + delta, 2 r = a'Qa/2 + (Q alpha0)'a + const, so this is
    the dual QP with linear term Q alpha0.
    """
    alpha0 = np.asarray(alpha0, dtype=np.float64)
    n = alpha0.shape[0]
    if shape == "nu" and nu_to > n * box_upper + FEAS_TOL:
        raise ValueError("empty delta set: nu_to exceeds l * box_upper")
    if delta_feasible(alpha0, np.zeros(n), nu_to, box_upper, shape):
        return np.zeros(n)
    if Qalpha0 is None:
        Qalpha0 = oracle.matvec(alpha0)
    sol = _solve(shape, oracle, Qalpha0, _constraints(shape, nu_to, box_upper), eps)
    return sol.alpha - alpha0


def _repair_set(cand, frozen_mask, box_upper, nu_to, shape):
    """Grow the re-optimized set until the frozen part leaves a feasible remainder."""
    N = ~frozen_mask
    frozen_sum = cand[frozen_mask].sum()
    free_cap = N.sum() * box_upper
    if shape == "nu":
        need = nu_to - frozen_sum - free_cap
        if need > FEAS_TOL:
            idx = np.flatnonzero(frozen_mask)
            head = box_upper - cand[idx]
            for j in idx[np.argsort(-head, kind="stable")]:
                N[j] = True
                need -= box_upper - cand[j]
                if need <= FEAS_TOL:
                    break
    else:
        target = 1.0 - frozen_sum
        if target > free_cap + FEAS_TOL:
            idx = np.flatnonzero(frozen_mask)
            head = box_upper - cand[idx]
            for j in idx[np.argsort(-head, kind="stable")]:
                N[j] = True
                target_gap = (1.0 - cand[~N].sum()) - N.sum() * box_upper
                if target_gap <= FEAS_TOL:
                    break
        elif target < -FEAS_TOL:
            idx = np.flatnonzero(frozen_mask)
            for j in idx[np.argsort(-cand[idx], kind="stable")]:
                N[j] = True
                if 1.0 - cand[~N].sum() >= -FEAS_TOL:
                    break
    return N


def solve_delta_warm(oracle: GramOracle, alpha_k, delta_k, nu_next, box_upper, eps=1e-8,
                     shape="nu", Qalpha_k=None):
    """Reuse delta_k where it stays feasible; re-optimize r over the rest.

    Coordinates where alpha_k + delta_k leaves the new box form the set N.
    If the frozen complement cannot meet the sum constraint, coordinates with
    the most room are moved into N until it can.
    """
    alpha_k = np.asarray(alpha_k, dtype=np.float64)
    delta_k = np.asarray(delta_k, dtype=np.float64)
    if shape == "nu" and nu_next > alpha_k.size * box_upper + FEAS_TOL:
        raise ValueError("empty delta set: nu_next exceeds l * box_upper")
    if delta_feasible(alpha_k, delta_k, nu_next, box_upper, shape):
        return delta_k.copy()
    cand = alpha_k + delta_k
    frozen = (cand >= -FEAS_TOL) & (cand <= box_upper + FEAS_TOL)
    N = _repair_set(cand, frozen, box_upper, nu_next, shape)
    F = ~N
    idx_N = np.flatnonzero(N)
    aF = np.where(F, np.clip(cand, 0.0, box_upper), 0.0)
    if Qalpha_k is None:
        Qalpha_k = oracle.matvec(alpha_k)
    f = (oracle.matvec(aF) + Qalpha_k)[idx_N]
    QN = SubsetView(oracle, idx_N)
    if shape == "nu":
        c = NuBoxConstraints(nu=nu_next, upper=box_upper,
                             linear_floor=max(nu_next - aF.sum(), 0.0))
    else:
        c = SimplexBoxConstraints(upper=box_upper, sum_target=min(max(1.0 - aF.sum(), 0.0),
                                                                  idx_N.size * box_upper))
    sol = _solve(shape, QN, f, c, eps)
    a = aF.copy()
    a[idx_N] = sol.alpha
    return a - alpha_k


def linear_gap(grad, alpha, box_upper, floor, shape="nu"):
    """grad'alpha - min over the feasible set of grad'a.

    Zero when alpha is optimal. Added to the radius it keeps the ball safe
    for an inexact previous solution.
    """
    grad = np.asarray(grad, dtype=np.float64)
    best = 0.0
    mass = 0.0
    for i in np.argsort(grad, kind="stable"):
        g = grad[i]
        if shape == "nu" and g < 0.0:
            take = box_upper
        else:
            take = min(box_upper, floor - mass)
            if take <= 0.0:
                break
        best += take * g
        mass += take
    return max(float(grad @ alpha) - best, 0.0)


def make_ball(oracle, alpha_k, delta, nu_from, nu_to, Qalpha_k=None, slack=0.0):
    alpha_k = np.asarray(alpha_k, dtype=np.float64)
    if Qalpha_k is None:
        Qalpha_k = oracle.matvec(alpha_k)
    if np.any(delta):
        Qdelta = oracle.matvec(delta)
        r = radius_of(oracle, alpha_k, delta, Qdelta=Qdelta)
        center = Qalpha_k + 0.5 * Qdelta
    else:
        r = 0.0
        center = Qalpha_k.copy()
    return SafeBall(beta=alpha_k + 0.5 * delta, radius_sq=r, nu_from=nu_from, nu_to=nu_to,
                    delta=delta, slack=slack, center_score=center)


def score_bounds(oracle: GramOracle, ball: SafeBall) -> ScoreBounds:
    """Per-sample margin interval (Q beta)_i -/+ sqrt(r) sqrt(Q_ii)."""
    center = ball.center_score
    if center is None:
        center = oracle.matvec(ball.beta)
    norm = np.sqrt(np.maximum(oracle.diag(), 0.0))
    rad = math.sqrt(max(ball.effective_radius_sq, 0.0))
    return ScoreBounds(center_score=center, self_norm=norm,
                       lower=center - rad * norm, upper=center + rad * norm)


def _kth_largest(v, k):
    """k-th largest entry (1-based); k beyond the length gives the minimum."""
    n = v.shape[0]
    k = min(max(k, 1), n)
    return float(np.partition(v, n - k)[n - k])


def split_index(nu, n):
    """l - nu l, snapped to an integer when within roundoff and clamped to [1, l]."""
    i_star = n - nu * n
    if abs(i_star - round(i_star)) < 1e-9:
        i_star = float(round(i_star))
    return min(max(i_star, 1.0), float(n))


def rho_bounds(bounds: ScoreBounds, nu_to, n, rho_floor=None):
    """Order-statistic bounds on rho at nu_to.

    rho_upper is the floor(i*)-th largest upper bound and rho_lower the
    ceil(i*)-th largest lower bound, with i* = l - nu l. Pointwise
    lower <= margin <= upper carries over to order statistics.

    ``rho_floor`` is a known lower limit on rho (0 for nu-SVM). The upper
    order statistic relies on the sum constraint being tight, which only
    holds when rho > 0; when rho = 0 the margin-error count can exceed
    nu l and the statistic may drop below 0, so both ends are clamped.
    """
    i_star = split_index(nu_to, n)
    rho_upper = _kth_largest(bounds.upper, int(math.floor(i_star)))
    rho_lower = _kth_largest(bounds.lower, int(math.ceil(i_star)))
    if rho_floor is not None:
        rho_upper = max(rho_upper, rho_floor)
        rho_lower = max(rho_lower, rho_floor)
    return rho_lower, rho_upper


TIE_RTOL = 1e-9


def screen(bounds: ScoreBounds, rho_lower, rho_upper, box_upper, tol=None) -> ScreenOutcome:
    """Fix alpha_i = 0 when lower_i > rho_upper and alpha_i = box when upper_i < rho_lower.

    Margins tied with rho in exact arithmetic can land on either side after
    roundoff, so both tests demand a clearance of ``tol`` (default
    TIE_RTOL relative to the rho scale).
    """
    if tol is None:
        tol = TIE_RTOL * (1.0 + max(abs(rho_lower), abs(rho_upper)))
    zero = np.flatnonzero(bounds.lower > rho_upper + tol)
    top = np.flatnonzero(bounds.upper < rho_lower - tol)
    n = bounds.lower.shape[0]
    mask = np.ones(n, dtype=bool)
    mask[zero] = False
    mask[top] = False
    return ScreenOutcome(fixed_zero=zero, fixed_upper=top, survivors=np.flatnonzero(mask),
                         upper_value=box_upper, rho_lower=rho_lower, rho_upper=rho_upper, n=n)


# --------------------------------------------------------------- reduced problem

@dataclass
class ReducedProblem:
    Q: object
    f: np.ndarray
    constraints: object
    survivors: np.ndarray
    fixed_alpha: np.ndarray

    def combine(self, alpha_s):
        a = self.fixed_alpha.copy()
        a[self.survivors] = alpha_s
        return a


def reduced_problem(oracle: GramOracle, outcome: ScreenOutcome, nu_to, n=None,
                    shape="nu") -> ReducedProblem:
    """Survivor QP: Q1 = Q[S, S] (a view), f = Q[S, D] alpha_D, shifted sum constraint."""
    S = outcome.survivors
    fixed = outcome.fixed_alpha()
    if outcome.fixed_upper.size and S.size:
        f = oracle.matvec(fixed)[S]
    else:
        f = np.zeros(S.size)
    fixed_sum = float(fixed.sum())
    if shape == "nu":
        c = NuBoxConstraints(nu=nu_to, upper=outcome.upper_value,
                             linear_floor=max(nu_to - fixed_sum, 0.0))
    else:
        c = SimplexBoxConstraints(upper=outcome.upper_value,
                                  sum_target=min(max(1.0 - fixed_sum, 0.0),
                                                 S.size * outcome.upper_value))
    Q1 = oracle if S.size == outcome.n else SubsetView(oracle, S)
    return ReducedProblem(Q=Q1, f=f, constraints=c, survivors=S, fixed_alpha=fixed)


# -------------------------------------------------------------------- the path

@dataclass
class PathStep:
    nu: float
    alpha: np.ndarray
    objective: float
    screening_ratio: float
    n_survivors: int
    wall_ms: float
    converged: bool
    outcome: ScreenOutcome | None = None
    ball: SafeBall | None = None
    model: object = None

    def record(self):
        return {"nu": float(self.nu), "screening_ratio": float(self.screening_ratio),
                "objective": float(self.objective), "wall_ms": float(self.wall_ms),
                "n_survivors": int(self.n_survivors)}


@dataclass
class PathReport:
    steps: list
    screening: bool
    kernel: KernelSpec

    @property
    def total_ms(self):
        return sum(s.wall_ms for s in self.steps)

    @property
    def mean_screening_ratio(self):
        rest = self.steps[1:]
        return float(np.mean([s.screening_ratio for s in rest])) if rest else 0.0

    def records(self):
        return [s.record() for s in self.steps]


def check_grid(nu_grid, n, shape="nu"):
    grid = np.asarray(nu_grid, dtype=np.float64)
    if grid.ndim != 1 or grid.size == 0:
        raise ValueError("nu grid is empty")
    if np.any(np.diff(grid) <= 0):
        raise ValueError("nu grid must be strictly ascending")
    hi = 1.0 - 1.0 / n + 1e-12 if shape == "nu" else 1.0
    if grid[0] <= 0 or grid[-1] > hi:
        raise ValueError(f"nu grid leaves the legal range (0, {hi:.6g}]")
    return grid


class PathRunner:
    """Shared driver for the nu-SVM and one-class paths.

    ``shape`` picks the constraint family; ``upper_of(nu)`` gives the box.
    """

    def __init__(self, oracle, shape, upper_of, eps=1e-8, solver="dcdm", max_sweeps=10000,
                 inexact_slack=True):
        self.oracle = oracle
        self.shape = shape
        self.upper_of = upper_of
        self.eps = eps
        self.solver = solver
        self.max_sweeps = max_sweeps
        self.inexact_slack = inexact_slack

    def _floor(self, nu):
        return nu if self.shape == "nu" else 1.0

    def full_solve(self, nu):
        c = _constraints(self.shape, nu, self.upper_of(nu))
        if self.solver == "reference":
            return pg_reference_solve(self.oracle, None, c, eps=self.eps)
        return _solve(self.shape, self.oracle, None, c, self.eps, max_sweeps=self.max_sweeps)

    def screened_step(self, alpha_k, Qalpha_k, nu_k, nu_next, delta_prev):
        n = alpha_k.size
        u_next = self.upper_of(nu_next)
        if delta_prev is None:
            delta = solve_delta_full(self.oracle, alpha_k, nu_next, u_next, self.eps,
                                     self.shape, Qalpha0=Qalpha_k)
        else:
            delta = solve_delta_warm(self.oracle, alpha_k, delta_prev, nu_next, u_next,
                                     self.eps, self.shape, Qalpha_k=Qalpha_k)
        slack = 0.0
        if self.inexact_slack:
            slack = linear_gap(Qalpha_k, alpha_k, self.upper_of(nu_k), self._floor(nu_k),
                               self.shape)
        ball = make_ball(self.oracle, alpha_k, delta, nu_k, nu_next, Qalpha_k=Qalpha_k,
                         slack=slack)
        bounds = score_bounds(self.oracle, ball)
        lo, hi = rho_bounds(bounds, nu_next, n, 0.0 if self.shape == "nu" else None)
        outcome = screen(bounds, lo, hi, u_next)
        red = reduced_problem(self.oracle, outcome, nu_next, n, self.shape)
        if self.solver == "reference":
            sol = pg_reference_solve(red.Q, red.f, red.constraints, eps=self.eps)
        else:
            sol = _solve(self.shape, red.Q, red.f, red.constraints, self.eps,
                         max_sweeps=self.max_sweeps)
        return red.combine(sol.alpha), sol, outcome, ball, delta

    def run(self, nu_grid, screening=True):
        n = self.oracle.n
        grid = check_grid(nu_grid, n, self.shape)
        self.oracle.diag()
        if self.oracle.cache == "full":
            self.oracle.matrix()
        steps = []
        alpha = Qalpha = delta = None
        for k, nu in enumerate(grid):
            t0 = time.perf_counter()
            outcome = ball = None
            if k == 0 or not screening:
                sol = self.full_solve(nu)
                alpha = sol.alpha
            else:
                alpha, sol, outcome, ball, delta = self.screened_step(
                    alpha, Qalpha, grid[k - 1], nu, delta)
            Qalpha = self.oracle.matvec(alpha)
            wall = (time.perf_counter() - t0) * 1e3
            obj = 0.5 * float(alpha @ Qalpha)
            ratio = outcome.screening_ratio if outcome is not None else 0.0
            n_surv = outcome.survivors.size if outcome is not None else n
            steps.append(PathStep(nu=float(nu), alpha=alpha, objective=obj,
                                  screening_ratio=ratio, n_survivors=int(n_surv), wall_ms=wall,
                                  converged=bool(sol.converged), outcome=outcome, ball=ball))
        return steps


def solve_path(data: Dataset, kernel: KernelSpec, nu_grid, solver="dcdm", eps=1e-8,
               screening=True, oracle=None, max_sweeps=10000) -> PathReport:
    """nu-SVM over an ascending grid, optionally with safe screening."""
    from .nusvm import check_labels, from_alpha, make_oracle
    check_labels(data)
    if oracle is None:
        oracle = make_oracle(data, kernel)
    n = data.n_samples
    runner = PathRunner(oracle, "nu", lambda nu: 1.0 / n, eps=eps, solver=solver,
                        max_sweeps=max_sweeps)
    steps = runner.run(nu_grid, screening=screening)
    for s in steps:
        s.model = from_alpha(s.alpha, s.nu, data, kernel, oracle=oracle)
    return PathReport(steps=steps, screening=screening, kernel=kernel)
