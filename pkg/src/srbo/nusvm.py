"""nu-SVM with the bias folded into the kernel: training, prediction and audits."""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .data import Dataset
from .kernel import GramOracle, KernelSpec, cross_kernel
from .qp import DualSolution, NuBoxConstraints, dcdm_solve, pg_reference_solve


def boundary_tol(n):
    """Tolerance for 'alpha sits on a bound' tests, scaled to the box 1/n."""
    return 1e-6 / n


def check_nu(nu, n):
    if not (0.0 < nu <= 1.0 - 1.0 / n + 1e-12):
        raise ValueError(f"nu={nu} outside (0, 1 - 1/l] for l={n}")


def check_labels(data: Dataset):
    if data.labels is None:
        raise ValueError("nu-SVM needs labelled data")
    if not (np.any(data.labels > 0) and np.any(data.labels < 0)):
        raise ValueError("nu-SVM needs both classes present")


def recover_rho(margins, alpha, upper, tol):
    """Offset rho: mean margin over free SVs, else midpoint of the KKT interval."""
    free = (alpha > tol) & (alpha < upper - tol)
    if free.any():
        rho = float(margins[free].mean())
    else:
        at_upper = alpha >= upper - tol
        at_zero = alpha <= tol
        lo = float(margins[at_upper].max()) if at_upper.any() else None
        hi = float(margins[at_zero].min()) if at_zero.any() else None
        if lo is None and hi is None:
            rho = 0.0
        elif lo is None:
            rho = hi
        elif hi is None:
            rho = lo
        else:
            rho = 0.5 * (lo + hi)
    return max(rho, 0.0)


@dataclass
class NuSvmModel:
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
        return 1.0 / self.n

    def decision_values(self, probes):
        return decision_values(self, probes)

    def predict(self, probes):
        return predict(self, probes)

    def to_json(self):
        return json.dumps({
            "model": "nu-svm",
            "kernel": self.kernel.to_dict(),
            "nu": self.nu,
            "alpha": [float(a) for a in self.alpha],
            "rho": self.rho,
            "objective": self.objective,
            "dataset_checksum": self.data.checksum,
        })

    @classmethod
    def from_json(cls, text, data: Dataset):
        doc = json.loads(text)
        if doc.get("dataset_checksum") != data.checksum:
            raise ValueError("dataset checksum does not match the serialized model")
        return cls(alpha=np.asarray(doc["alpha"], dtype=np.float64), nu=float(doc["nu"]),
                   kernel=KernelSpec.from_dict(doc["kernel"]), data=data,
                   rho=float(doc["rho"]), objective=float(doc["objective"]))


def make_oracle(data: Dataset, kernel: KernelSpec, cache="auto"):
    return GramOracle(data.features, kernel, labels=data.labels, cache=cache)


def from_alpha(alpha, nu, data, kernel, oracle=None, solution=None):
    """Wrap a dual vector into a model, recovering rho and the objective."""
    if oracle is None:
        oracle = make_oracle(data, kernel)
    alpha = np.asarray(alpha, dtype=np.float64)
    n = alpha.shape[0]
    d = oracle.matvec(alpha)
    rho = recover_rho(d, alpha, 1.0 / n, boundary_tol(n))
    obj = 0.5 * float(alpha @ d)
    return NuSvmModel(alpha=alpha, nu=nu, kernel=kernel, data=data, rho=rho,
                      objective=obj, solution=solution, oracle=oracle)


def train_full(data: Dataset, kernel: KernelSpec, nu, solver="dcdm", eps=1e-8,
               oracle=None, alpha0=None, max_sweeps=10000) -> NuSvmModel:
    check_labels(data)
    n = data.n_samples
    check_nu(nu, n)
    if oracle is None:
        oracle = make_oracle(data, kernel)
    c = NuBoxConstraints.full(nu, n)
    if solver == "dcdm":
        sol = dcdm_solve(oracle, None, c, alpha0=alpha0, eps=eps, max_sweeps=max_sweeps)
    elif solver == "reference":
        sol = pg_reference_solve(oracle, None, c, eps=eps, alpha0=alpha0)
    else:
        raise ValueError(f"unknown solver {solver!r}")
    return from_alpha(sol.alpha, nu, data, kernel, oracle=oracle, solution=sol)


def decision_values(model: NuSvmModel, probes):
    """k(x0, X) diag(y) alpha, before the sign."""
    P = np.atleast_2d(np.asarray(probes, dtype=np.float64))
    if P.shape[1] != model.data.n_features:
        raise ValueError(f"probe dimension {P.shape[1]} != training dimension "
                         f"{model.data.n_features}")
    coef = model.alpha * model.data.labels
    nz = np.flatnonzero(coef)
    if nz.size == 0:
        return np.zeros(P.shape[0])
    return cross_kernel(model.kernel, P, model.data.features[nz]) @ coef[nz]


def predict(model: NuSvmModel, probes):
    v = decision_values(model, probes)
    return np.where(v >= 0.0, 1.0, -1.0)


def margins(model: NuSvmModel):
    """d_i = (Q alpha)_i = y_i <w, phi(x_i)>."""
    if model.oracle is None:
        model.oracle = make_oracle(model.data, model.kernel)
    return model.oracle.matvec(model.alpha)


@dataclass
class KktReport:
    margins: np.ndarray
    beta_mult: np.ndarray
    gamma_mult: float
    xi: np.ndarray
    max_violation: float
    partition: tuple
    residuals: dict = field(default_factory=dict)


def kkt_audit(model: NuSvmModel, tol=1e-6) -> KktReport:
    n = model.n
    a = model.alpha
    u = model.upper
    rho = model.rho
    d = margins(model)
    beta = u - a
    gamma = float(a.sum() - model.nu)
    xi = np.maximum(0.0, rho - d)
    E = np.flatnonzero(np.abs(d - rho) <= tol)
    R = np.flatnonzero(d > rho + tol)
    L = np.flatnonzero(d < rho - tol)
    res = {
        "alpha_lower": float(np.max(-a, initial=0.0)),
        "alpha_upper": float(np.max(a - u, initial=0.0)),
        "sum_floor": max(0.0, -gamma),
        "rho_sign": max(0.0, -rho),
        "slack_alpha": float(np.max(np.abs(a * (d - rho + xi)), initial=0.0)),
        "slack_beta": float(np.max(np.abs(beta * xi), initial=0.0)),
        "slack_gamma": abs(gamma * rho),
        "R_implies_zero": float(np.max(a[R], initial=0.0)),
        "L_implies_upper": float(np.max(u - a[L], initial=0.0)),
    }
    return KktReport(margins=d, beta_mult=beta, gamma_mult=gamma, xi=xi,
                     max_violation=max(res.values()), partition=(E, R, L), residuals=res)


def nu_property(model: NuSvmModel, tol=None):
    """(margin-error fraction, support-vector fraction)."""
    n = model.n
    if tol is None:
        tol = boundary_tol(n)
    d = margins(model)
    m = np.count_nonzero(d < model.rho - tol)
    s = np.count_nonzero(model.alpha > tol)
    return m / n, s / n


def primal_objective(model: NuSvmModel):
    """0.5 ||w||^2 - nu rho + (1/l) sum max(0, rho - d_i)."""
    d = margins(model)
    w2 = float(model.alpha @ d)
    return 0.5 * w2 - model.nu * model.rho + float(np.maximum(0.0, model.rho - d).sum()) / model.n


def duality_gap(model: NuSvmModel):
    """primal - (-F); nonnegative at any feasible pair, zero at the optimum."""
    return primal_objective(model) + 0.5 * float(model.alpha @ margins(model))
