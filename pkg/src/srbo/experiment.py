"""Grid-search harness: baseline path vs screened path, timings and reports."""
from __future__ import annotations

import csv
import io
import json
import platform
import statistics
from dataclasses import asdict, dataclass, field

import numpy as np

from . import _accel, data as data_mod, metrics, synth
from .kernel import KernelSpec
from .nusvm import make_oracle
from .ocsvm import decision_oc, make_oracle_oc, solve_path_oc
from .qp import warm_up
from .screening import solve_path

SCHEMA_VERSION = "1.0"
TIMING_PROTOCOL = ("median of repeats of the per-step wall time; covers delta, screening "
                   "and the reduced solve; excludes data load and the shared Gram build")


class ConfigError(ValueError):
    """Invalid experiment configuration."""


def parse_grid(text):
    """'a:b:c' -> inclusive grid a, a+b, ..., c; a bare number gives one point."""
    if isinstance(text, (list, tuple, np.ndarray)):
        return np.asarray(text, dtype=np.float64)
    parts = str(text).split(":")
    try:
        vals = [float(p) for p in parts]
    except ValueError:
        raise ConfigError(f"bad grid {text!r}; expected start:step:end") from None
    if len(vals) == 1:
        return np.array(vals)
    if len(vals) != 3:
        raise ConfigError(f"bad grid {text!r}; expected start:step:end")
    a, step, b = vals
    if step <= 0 or b < a:
        raise ConfigError(f"bad grid {text!r}: need step > 0 and end >= start")
    count = int(np.floor((b - a) / step + 1e-9)) + 1
    return np.round(a + step * np.arange(count), 10)


@dataclass
class ExperimentConfig:
    task: str = "nusvm"
    data: str = "synth:gauss2"
    format: str | None = None
    kernel: str = "linear"
    sigmas: list = field(default_factory=lambda: [1.0])
    nu_grid: object = "0.1:0.1:0.9"
    solver: str = "dcdm"
    eps: float = 1e-8
    seed: int = 0
    scale: str = "minmax01"
    train_fraction: float = 0.8
    n_per_class: int = 200
    repeats: int = 3
    out: str | None = None

    def validate(self):
        if self.task not in ("nusvm", "ocsvm"):
            raise ConfigError(f"unknown task {self.task!r}")
        if self.kernel not in ("linear", "rbf"):
            raise ConfigError(f"unknown kernel {self.kernel!r}")
        if self.kernel == "rbf" and not self.sigmas:
            raise ConfigError("rbf kernel needs at least one sigma")
        if any(not s > 0 for s in self.sigmas):
            raise ConfigError("sigma values must be positive")
        if self.scale not in ("minmax01", "zscore", "none"):
            raise ConfigError(f"unknown scaling {self.scale!r}")
        if self.repeats < 1:
            raise ConfigError("repeats must be >= 1")
        grid = parse_grid(self.nu_grid)
        if grid.size == 0 or grid[0] <= 0 or grid[-1] >= 1 + 1e-12:
            raise ConfigError("nu grid must lie in (0, 1)")
        if np.any(np.diff(grid) <= 0):
            raise ConfigError("nu grid must be strictly ascending")
        return grid

    @classmethod
    def from_dict(cls, doc):
        known = {f for f in cls.__dataclass_fields__}
        extra = set(doc) - known
        if extra:
            raise ConfigError(f"unknown config keys: {sorted(extra)}")
        return cls(**doc)


@dataclass
class RunReport:
    config: dict
    records: list
    aggregate: dict
    environment: dict
    schema_version: str = SCHEMA_VERSION

    def to_dict(self):
        return {"schema_version": self.schema_version, "config": self.config,
                "records": self.records, "aggregate": self.aggregate,
                "environment": self.environment}

    def to_json(self, indent=2):
        return json.dumps(self.to_dict(), indent=indent, sort_keys=True)

    def to_csv(self):
        buf = io.StringIO()
        cols = ["sigma", "nu", "metric", "baseline_metric", "srbo_metric", "screening_ratio",
                "n_survivors", "baseline_ms", "srbo_ms"]
        w = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
        w.writeheader()
        for r in self.records:
            w.writerow({c: r[c] for c in cols})
        return buf.getvalue()

    def metric_fields(self):
        """Everything except timings; identical across reruns with the same seed."""
        drop = {"baseline_ms", "srbo_ms"}
        recs = [{k: v for k, v in r.items() if k not in drop} for r in self.records]
        agg = {k: v for k, v in self.aggregate.items()
               if k not in ("speedup_ratio", "baseline_total_ms", "srbo_total_ms")}
        return {"records": recs, "aggregate": agg}


def environment_stamp():
    return {"python": platform.python_version(), "numpy": np.__version__,
            "backend": _accel.backend_name(), "machine": platform.machine(),
            "timing_protocol": TIMING_PROTOCOL}


def load_data(cfg: ExperimentConfig):
    """(train, test) after splitting and scaling.

    ``synth:<name>`` draws a built-in two-class set; ``synth-oc:<mu>`` builds
    the one-class anomaly setup with abnormal mean mu.
    """
    src = cfg.data
    if src.startswith("synth-oc:"):
        mu = float(src.split(":", 1)[1])
        train, test = synth.anomaly_setup(mu, n_normal=cfg.n_per_class, seed=cfg.seed)
    else:
        if src.startswith("synth:"):
            full = synth.generate(src.split(":", 1)[1], cfg.n_per_class, cfg.seed)
        else:
            full = data_mod.load(src, cfg.format)
        train, test = data_mod.split(full, cfg.train_fraction, cfg.seed)
        if cfg.task == "ocsvm":
            if train.labels is None:
                raise data_mod.DataError("one-class evaluation needs labels on the data")
            train = data_mod.Dataset(train.features[train.labels > 0])
    if cfg.scale != "none":
        train, test = data_mod.scale(train, cfg.scale, test)
    return train, test


def _timed_path(run, repeats):
    """Run the path ``repeats`` times; keep the first report, median step times."""
    reports = [run() for _ in range(repeats)]
    first = reports[0]
    per_step = [statistics.median(rep.steps[k].wall_ms for rep in reports)
                for k in range(len(first.steps))]
    return first, per_step


def _score(cfg, model, test):
    if cfg.task == "nusvm":
        return metrics.accuracy(model.predict(test.features), test.labels)
    return 100.0 * metrics.auc(decision_oc(model, test.features), test.labels)


def run_experiment(cfg: ExperimentConfig) -> RunReport:
    grid = cfg.validate()
    train, test = load_data(cfg)
    warm_up()
    sigmas = cfg.sigmas if cfg.kernel == "rbf" else [None]
    records = []
    base_total = srbo_total = 0.0
    for sigma in sigmas:
        spec = KernelSpec(cfg.kernel, sigma=sigma if sigma is not None else 1.0)
        if cfg.task == "nusvm":
            oracle = make_oracle(train, spec)
            path = lambda s: solve_path(train, spec, grid, solver=cfg.solver, eps=cfg.eps,
                                        screening=s, oracle=oracle)
        else:
            oracle = make_oracle_oc(train, spec)
            path = lambda s: solve_path_oc(train, spec, grid, eps=cfg.eps, screening=s,
                                           oracle=oracle)
        if oracle.cache == "full":
            oracle.matrix()
        base, base_ms = _timed_path(lambda: path(False), cfg.repeats)
        scr, scr_ms = _timed_path(lambda: path(True), cfg.repeats)
        base_total += sum(base_ms)
        srbo_total += sum(scr_ms)
        for k, nu in enumerate(grid):
            mb = _score(cfg, base.steps[k].model, test)
            ms = _score(cfg, scr.steps[k].model, test)
            records.append({
                "sigma": sigma, "nu": float(nu),
                "metric": "accuracy" if cfg.task == "nusvm" else "auc",
                "baseline_metric": mb, "srbo_metric": ms,
                "screening_ratio": float(scr.steps[k].screening_ratio),
                "n_survivors": int(scr.steps[k].n_survivors),
                "baseline_ms": float(base_ms[k]), "srbo_ms": float(scr_ms[k]),
            })
    screened = [r["screening_ratio"] for r in records if r["nu"] != float(grid[0])]
    best = max(records, key=lambda r: r["srbo_metric"])
    aggregate = {
        "mean_screening_ratio": float(np.mean(screened)) if screened else 0.0,
        "speedup_ratio": metrics.speedup_ratio(base_total, srbo_total),
        "baseline_total_ms": base_total, "srbo_total_ms": srbo_total,
        "best_metric": best["srbo_metric"],
        "best_params": {"sigma": best["sigma"], "nu": best["nu"]},
        "metrics_identical": all(r["baseline_metric"] == r["srbo_metric"] for r in records),
        "n_train": train.n_samples, "n_test": test.n_samples,
    }
    conf = asdict(cfg)
    conf["nu_grid"] = [float(v) for v in grid]
    report = RunReport(config=conf, records=records, aggregate=aggregate,
                       environment=environment_stamp())
    if cfg.out:
        write_report(report, cfg.out)
    return report


def write_report(report: RunReport, path):
    path = str(path)
    with open(path, "w") as fh:
        fh.write(report.to_json())
    stem = path[:-5] if path.endswith(".json") else path
    with open(stem + ".csv", "w") as fh:
        fh.write(report.to_csv())


def schema():
    from importlib import resources
    text = resources.files("srbo").joinpath("schemas/run_report.v1.json").read_text()
    return json.loads(text)
