"""Command line entry point: ``srbo train|path|bench|gen``."""
from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .data import DataError, serialize_libsvm
from .experiment import ConfigError, ExperimentConfig, load_data, parse_grid, run_experiment

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4

_SCALE = {"minmax": "minmax01", "minmax01": "minmax01", "zscore": "zscore", "none": "none"}


class NumericFailure(RuntimeError):
    pass


def _common(p):
    p.add_argument("--data", default="synth:gauss2",
                   help="path, synth:<generator> or synth-oc:<abnormal mean>")
    p.add_argument("--format", choices=["libsvm", "csv"], default=None)
    p.add_argument("--task", choices=["nusvm", "ocsvm"], default="nusvm")
    p.add_argument("--kernel", choices=["linear", "rbf"], default="linear")
    p.add_argument("--sigma", type=float, action="append", default=None,
                   help="RBF width; repeat for a sigma grid")
    p.add_argument("--eps", type=float, default=1e-8)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--scale", choices=sorted(_SCALE), default="minmax")
    p.add_argument("--n-per-class", type=int, default=200)
    p.add_argument("--out", default=None)


def build_parser():
    ap = argparse.ArgumentParser(prog="srbo", description="nu-SVM / OC-SVM with safe screening")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="fit a single model and print a summary")
    _common(p)
    p.add_argument("--nu", type=float, default=0.5)

    p = sub.add_parser("path", help="solve over a nu grid")
    _common(p)
    p.add_argument("--nu-grid", default="0.1:0.1:0.9")
    p.add_argument("--srbo", action="store_true", help="screen before each solve")

    p = sub.add_parser("bench", help="baseline vs screened paths from a config")
    _common(p)
    p.add_argument("--config", default=None, help="JSON file with ExperimentConfig fields")
    p.add_argument("--nu-grid", default="0.1:0.1:0.9")
    p.add_argument("--repeats", type=int, default=3)

    p = sub.add_parser("gen", help="write a synthetic set in LIBSVM format")
    p.add_argument("--generator", default="gauss2")
    p.add_argument("--n-per-class", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    return ap


def _config(args, **extra):
    return ExperimentConfig(task=args.task, data=args.data, format=args.format,
                            kernel=args.kernel, sigmas=args.sigma or [1.0], eps=args.eps,
                            seed=args.seed, scale=_SCALE[args.scale],
                            n_per_class=args.n_per_class, **extra)


def _kernel(cfg):
    from .kernel import KernelSpec
    return KernelSpec(cfg.kernel, sigma=cfg.sigmas[0])


def _emit(text, out):
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text + ("" if text.endswith("\n") else "\n"))


def cmd_train(args):
    cfg = _config(args)
    cfg.validate()
    train, test = load_data(cfg)
    spec = _kernel(cfg)
    if cfg.task == "nusvm":
        from .metrics import accuracy
        from .nusvm import train_full
        model = train_full(train, spec, args.nu, eps=cfg.eps)
        score = {"test_accuracy": accuracy(model.predict(test.features), test.labels)}
    else:
        from .metrics import auc
        from .ocsvm import decision_oc, train_full_oc
        model = train_full_oc(train, spec, args.nu, eps=cfg.eps)
        score = {"test_auc": auc(decision_oc(model, test.features), test.labels)}
    if not model.solution.converged:
        raise NumericFailure(f"solver did not converge (max projected gradient "
                             f"{model.solution.max_projected_gradient:.3g})")
    summary = {"task": cfg.task, "nu": args.nu, "n_train": train.n_samples,
               "n_support": int(np.count_nonzero(model.alpha > 1e-6 / train.n_samples)),
               "rho": model.rho, "objective": model.objective,
               "sweeps": model.solution.sweeps, **score}
    print(json.dumps(summary, indent=2))
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(model.to_json())


def cmd_path(args):
    cfg = _config(args, nu_grid=args.nu_grid)
    grid = cfg.validate()
    train, _ = load_data(cfg)
    spec = _kernel(cfg)
    if cfg.task == "nusvm":
        from .screening import solve_path
        rep = solve_path(train, spec, grid, eps=cfg.eps, screening=args.srbo)
    else:
        from .ocsvm import solve_path_oc
        rep = solve_path_oc(train, spec, grid, eps=cfg.eps, screening=args.srbo)
    if not all(s.converged for s in rep.steps):
        raise NumericFailure("a path step did not converge")
    _emit(json.dumps(rep.records(), indent=2), args.out)


def cmd_bench(args):
    if args.config:
        try:
            with open(args.config) as fh:
                doc = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from None
        if args.out and "out" not in doc:
            doc["out"] = args.out
        cfg = ExperimentConfig.from_dict(doc)
    else:
        cfg = _config(args, nu_grid=args.nu_grid, repeats=args.repeats, out=args.out)
    report = run_experiment(cfg)
    agg = report.aggregate
    print(json.dumps({k: agg[k] for k in ("mean_screening_ratio", "speedup_ratio",
                                          "best_metric", "best_params",
                                          "metrics_identical")}, indent=2))


def cmd_gen(args):
    from . import synth
    if args.n_per_class < 1:
        raise ConfigError("--n-per-class must be >= 1")
    data = synth.generate(args.generator, args.n_per_class, args.seed)
    _emit(serialize_libsvm(data), args.out)


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    handler = {"train": cmd_train, "path": cmd_path, "bench": cmd_bench, "gen": cmd_gen}
    try:
        handler[args.command](args)
    except (DataError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (NumericFailure, FloatingPointError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ConfigError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
