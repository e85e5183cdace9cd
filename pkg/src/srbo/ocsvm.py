"""One-class SVM: simplex-box dual, decision scores and screened nu paths."""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .data import Dataset
from .kernel import GramOracle, KernelSpec, cross_kernel
from .qp import DualSolution, SimplexBoxConstraints, smo_equality_solve
from .screening import (PathReport, PathRunner, ScreenOutcome, make_ball, reduced_problem,
                        rho_bounds, score_bounds, screen, solve_delta_full)


def check_nu_oc(nu):
    if not (0.0 < nu <= 1.0):
        raise ValueError(f"nu={nu} outside (0, 1]")


def box_upper(nu, n):
    return 1.0 / (nu * n)


def recover_rho_oc(scores, alpha, upper, tol):
    """Mean score over free SVs, else the median score over all SVs."""
    free = (alpha > tol) & (alpha < upper - tol)
    if free.any():
        return float(scores[free].mean())
    sv = alpha > tol
    if sv.any():
        return float(np.median(scores[sv]))
    return 0.0


@dataclass
class OcSvmModel:
    alpha: np.ndarray
    nu: float
    kernel: KernelSpec
    data: Dataset
    rho: float
    objective: float
    solution: DualSolution | None = field(default=None, repr=False)
    oracle: GramOracle | None = field(default=None, repr=False)

    @property
    def n(self):
        return self.alpha.shape[0]

    @property
    def upper(self):
        return box_upper(self.nu, self.n)

    def decision(self, probes):
        return decision_oc(self, probes)

    def to_json(self):
        return json.dumps({
            "model": "oc-svm",
            "kernel": self.kernel.to_dict(),
            "nu": self.nu,
            "alpha": [float(a) for a in self.alpha],
            "rho": self.rho,
            "objective": self.objective,
            "dataset_checksum": self.data.checksum,
        })


def make_oracle_oc(data: Dataset, kernel: KernelSpec, cache="auto"):
    return GramOracle(data.features, kernel, labels=None, cache=cache)


def from_alpha_oc(alpha, nu, data, kernel, oracle=None, solution=None):
    if oracle is None:
        oracle = make_oracle_oc(data, kernel)
    alpha = np.asarray(alpha, dtype=np.float64)
    n = alpha.shape[0]
    s = oracle.matvec(alpha)
    rho = recover_rho_oc(s, alpha, box_upper(nu, n), 1e-6 / n)
    return OcSvmModel(alpha=alpha, nu=nu, kernel=kernel, data=data, rho=rho,
                      objective=0.5 * float(alpha @ s), solution=solution, oracle=oracle)


def train_full_oc(data: Dataset, kernel: KernelSpec, nu, eps=1e-8, oracle=None,
                  max_sweeps=10000) -> OcSvmModel:
    check_nu_oc(nu)
    n = data.n_samples
    if n == 0:
        raise ValueError("empty training set")
    if oracle is None:
        oracle = make_oracle_oc(data, kernel)
    sol = smo_equality_solve(oracle, SimplexBoxConstraints.one_class(nu, n), eps=eps,
                             max_sweeps=max_sweeps)
    return from_alpha_oc(sol.alpha, nu, data, kernel, oracle=oracle, solution=sol)


def decision_oc(model: OcSvmModel, probes):
    """sum_i alpha_i k(x_i, x0) - rho; >= 0 means normal."""
    P = np.atleast_2d(np.asarray(probes, dtype=np.float64))
    if P.shape[1] != model.data.n_features:
        raise ValueError(f"probe dimension {P.shape[1]} != training dimension "
                         f"{model.data.n_features}")
    nz = np.flatnonzero(model.alpha)
    if nz.size == 0:
        return np.full(P.shape[0], -model.rho)
    return cross_kernel(model.kernel, P, model.data.features[nz]) @ model.alpha[nz] - model.rho


def predict_oc(model, probes):
    return np.where(decision_oc(model, probes) >= 0.0, 1.0, -1.0)


def outlier_fraction(model: OcSvmModel, tol=None):
    n = model.n
    if tol is None:
        tol = 1e-6 / n
    s = model.oracle.matvec(model.alpha) if model.oracle is not None else \
        make_oracle_oc(model.data, model.kernel).matvec(model.alpha)
    return np.count_nonzero(s < model.rho - tol) / n


def screen_oc(oracle: GramOracle, alpha_k, delta_k, nu_next, n, eps=1e-8,
              nu_from=None) -> ScreenOutcome:
    """One screening test at nu_next from the solution alpha_k.

    ``delta_k`` may be None, in which case the radius-minimizing delta is
    solved for. Screened coordinates are fixed at 0 or 1/(nu_next l).
    """
    u = box_upper(nu_next, n)
    alpha_k = np.asarray(alpha_k, dtype=np.float64)
    if delta_k is None:
        delta_k = solve_delta_full(oracle, alpha_k, nu_next, u, eps, shape="oc")
    ball = make_ball(oracle, alpha_k, delta_k, nu_from, nu_next)
    bounds = score_bounds(oracle, ball)
    lo, hi = rho_bounds(bounds, nu_next, n)
    return screen(bounds, lo, hi, u)


def solve_path_oc(data: Dataset, kernel: KernelSpec, nu_grid, eps=1e-8, screening=True,
                  oracle=None, max_sweeps=10000) -> PathReport:
    """One-class path over an ascending nu grid; the box shrinks as nu grows."""
    n = data.n_samples
    if oracle is None:
        oracle = make_oracle_oc(data, kernel)
    runner = PathRunner(oracle, "oc", lambda nu: box_upper(nu, n), eps=eps,
                        max_sweeps=max_sweeps)
    steps = runner.run(nu_grid, screening=screening)
    for s in steps:
        s.model = from_alpha_oc(s.alpha, s.nu, data, kernel, oracle=oracle)
    return PathReport(steps=steps, screening=screening, kernel=kernel)


__all__ = ["OcSvmModel", "train_full_oc", "decision_oc", "predict_oc", "screen_oc",
           "solve_path_oc", "box_upper", "outlier_fraction", "reduced_problem"]
