"""Command-line front end.

Commands: ``gen-data``, ``fit``, ``eval`` and ``predict``. Settings come
from an optional flat YAML file (``--config``) overridden by flags; the
effective settings are echoed into every output.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .embedding import (dataset_to_csv, format_float, normalize_dataset, read_dataset_csv)
from .errors import Diverged, KoopmanError
from .lifting import LiftingConfig, Variant, random_configs
from .modelio import load_model, save_model, sha256_file
from .optimizer import LiftingProblem, PsoConfig, optimize_lifting
from .plant import ExcitationConfig, generate_dataset
from .prediction import PredictionResult, predict_multi_step, predict_one_step
from .realization import KoopmanModel, RealizationOptions, realize_model

log = logging.getLogger("iokoopman")


@dataclass
class ExperimentConfig:
    variant: str = "GBLK"
    n_d: int = 2
    n_l: int | None = None
    n_w: int | None = None
    poly_order: int = 10
    optimize: bool = True
    center_seed: int = 0
    # PSO
    swarm_size: int = 50
    max_iterations: int = 30
    inertia: float = 0.729
    cognitive: float = 1.49445
    social: float = 1.49445
    bounds: list = field(default_factory=lambda: [-3.0, 3.0])
    velocity_clamp: float = 0.2
    seed: int = 0
    early_stop: float = 0.0
    parallel: bool = False
    # realization / prediction
    enforce_shift_structure: bool = False
    relift: bool = False
    ridge: float = 0.0
    holdout: float = 0.0
    # data
    train_path: str | None = None
    test_path: str | None = None
    out_dir: str = "out"
    train_seed: int = 42
    train_length: int = 5000
    test_seed: int = 43
    test_length: int = 2000
    hold_range: list = field(default_factory=lambda: [5, 40])
    u_range: list = field(default_factory=lambda: [[-0.7, 0.7], [-0.7, 0.7]])
    d_range: list = field(default_factory=lambda: [[0.0, 1.0]])

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        raw = yaml.safe_load(Path(path).read_text()) or {}
        if not isinstance(raw, dict):
            raise ConfigError(f"{path}: expected a flat key-value mapping")
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(raw) - known)
        if unknown:
            raise ConfigError(f"{path}: unknown keys {unknown}")
        return cls(**raw)

    def counts(self) -> tuple[int, int]:
        variant = Variant.parse(self.variant)
        if variant == Variant.GBLK:
            return self.n_l or 5, self.n_w or 5
        return (self.n_l or 10), 0

    def pso(self) -> PsoConfig:
        return PsoConfig(self.swarm_size, self.max_iterations, self.inertia, self.cognitive,
                         self.social, tuple(self.bounds), self.velocity_clamp, self.seed,
                         self.early_stop, self.parallel)

    def realization(self) -> RealizationOptions:
        return RealizationOptions(self.n_d, self.enforce_shift_structure, self.ridge)

    def excitation(self, which: str) -> ExcitationConfig:
        seed, length = ((self.train_seed, self.train_length) if which == "train"
                        else (self.test_seed, self.test_length))
        return ExcitationConfig(seed, length, tuple(self.hold_range),
                                [tuple(r) for r in self.u_range], [tuple(r) for r in self.d_range])


class ConfigError(KoopmanError, ValueError):
    pass


# -- helpers -----------------------------------------------------------------

def _r2_entry(fn, *args) -> dict:
    try:
        res = fn(*args)
    except Diverged as exc:
        return {"r2": None, "diverged_at": exc.step}
    return {"r2": [float(v) for v in res.r2_per_channel], "diverged_at": None}


def _metrics(model: KoopmanModel, data, relift: bool) -> dict:
    return {"one_step": _r2_entry(predict_one_step, model, data),
            "multi_step": _r2_entry(predict_multi_step, model, data, relift)}


def prediction_csv(result: PredictionResult) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    n_h = result.y_hat.shape[1]
    header = ["t"]
    for i in range(n_h):
        header += [f"y{i + 1}_true", f"y{i + 1}_hat"]
    writer.writerow(header)
    for j in range(len(result.y_hat)):
        row = [format_float(round((result.start_index + j) * result.sample_period, 12))]
        for i in range(n_h):
            row += [format_float(result.y_true[j, i]), format_float(result.y_hat[j, i])]
        writer.writerow(row)
    return buf.getvalue()


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, newline="")


def _format_r2(entry: dict) -> str:
    if entry["r2"] is None:
        return f"diverged at step {entry['diverged_at']}"
    return " ".join(f"y{i + 1}={v:.6f}" for i, v in enumerate(entry["r2"]))


# -- commands ----------------------------------------------------------------

def cmd_gen_data(cfg: ExperimentConfig) -> dict:
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest = {"config": dataclasses.asdict(cfg), "files": {}}
    for which in ("train", "test"):
        exc = cfg.excitation(which)
        path = out / f"{which}.csv"
        _write(path, dataset_to_csv(generate_dataset(exc)))
        manifest["files"][which] = {"path": path.name, "seed": exc.seed, "length": exc.length,
                                    "sha256": sha256_file(path)}
    _write(out / "manifest.json", json.dumps(manifest, indent=2) + "\n")
    print(f"wrote {out / 'train.csv'}, {out / 'test.csv'}, {out / 'manifest.json'}")
    return manifest


def fit_model(cfg: ExperimentConfig, raw_train):
    """Normalize, optimize the lifting when applicable, and realize."""
    variant = Variant.parse(cfg.variant)
    train = normalize_dataset(raw_train)
    n_l, n_w = cfg.counts()
    options = cfg.realization()
    if variant.optimizable and cfg.optimize:
        problem = LiftingProblem(variant, train.n_h, train.m, train.l, n_l, n_w, options,
                                 cfg.relift, cfg.holdout)
        result = optimize_lifting(train, variant, cfg.pso(), problem)
        return result.model, result.pso.log
    n_zeta = (cfg.n_d + 1) * train.n_h + cfg.n_d * (train.m + train.l)
    psi, phi = random_configs(variant, n_zeta, (cfg.n_d + 1) * train.n_h, n_l, n_w,
                              np.random.default_rng(cfg.center_seed), tuple(cfg.bounds),
                              cfg.poly_order)
    return realize_model(train, variant, psi, phi, options), None


def cmd_fit(cfg: ExperimentConfig) -> dict:
    if not cfg.train_path:
        raise ConfigError("no training dataset given (train_path / --train)")
    raw = read_dataset_csv(cfg.train_path)
    model, pso_log = fit_model(cfg, raw)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    provenance = {"train_sha256": sha256_file(cfg.train_path), "seed": cfg.seed,
                  "config": dataclasses.asdict(cfg)}
    save_model(model, out / "model.json", provenance)
    if pso_log is not None:
        lines = ["iteration,best_J,mean_J,elapsed_seconds"]
        lines += [f"{it},{format_float(b)},{format_float(mu)},{format_float(t)}"
                  for it, b, mu, t in pso_log]
        _write(out / "optimization_log.csv", "\n".join(lines) + "\n")
    report = {"variant": model.variant.value, "train": _metrics(model, raw, cfg.relift),
              "model": model.metadata, "config": dataclasses.asdict(cfg)}
    _write(out / "fit_report.json", json.dumps(report, indent=2) + "\n")
    print(f"variant {model.variant.value}: model written to {out / 'model.json'}")
    print(f"  train one-step   R2: {_format_r2(report['train']['one_step'])}")
    print(f"  train multi-step R2: {_format_r2(report['train']['multi_step'])}")
    return report


def cmd_eval(model_path, data_path, out_dir, relift: bool = False) -> dict:
    model = load_model(model_path)
    raw = read_dataset_csv(data_path)
    metrics = _metrics(model, raw, relift)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    report = {"model": str(model_path), "data": str(data_path),
              "data_sha256": sha256_file(data_path), "variant": model.variant.value,
              "relift": relift, **metrics}
    _write(out / "metrics.json", json.dumps(report, indent=2) + "\n")
    _write(out / "predictions_one_step.csv", prediction_csv(predict_one_step(model, raw)))
    if metrics["multi_step"]["r2"] is not None:
        _write(out / "predictions.csv", prediction_csv(predict_multi_step(model, raw, relift)))
    print(f"one-step   R2: {_format_r2(metrics['one_step'])}")
    print(f"multi-step R2: {_format_r2(metrics['multi_step'])}")
    return report


def cmd_predict(model_path, data_path, out_path, mode: str = "multi_step", relift: bool = False):
    model = load_model(model_path)
    raw = read_dataset_csv(data_path)
    if mode == "one_step":
        result = predict_one_step(model, raw)
    else:
        result = predict_multi_step(model, raw, relift)
    _write(Path(out_path), prediction_csv(result))
    print(f"wrote {out_path}")
    return result


# -- entry point ---------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat YAML settings file")
    common.add_argument("--out", help="output directory")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="iokoopman", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen-data", parents=[common], help="simulate train/test datasets")
    g.add_argument("--seed", type=int, help="training seed (test uses seed + 1)")

    f = sub.add_parser("fit", parents=[common], help="identify a model")
    f.add_argument("--train", help="training CSV")
    f.add_argument("--variant", choices=[v.value for v in Variant])
    f.add_argument("--seed", type=int, help="PSO seed")
    f.add_argument("--relift", action="store_true", default=None)
    f.add_argument("--enforce-shift", action="store_true", default=None)

    for name, help_ in (("eval", "score a model on a dataset"),
                        ("predict", "write a prediction trace")):
        e = sub.add_parser(name, parents=[common], help=help_)
        e.add_argument("--model", required=True)
        e.add_argument("--data", required=True)
        e.add_argument("--relift", action="store_true", default=None)
        if name == "predict":
            e.add_argument("--mode", choices=["one_step", "multi_step"], default="multi_step")
    return p


def _load_config(args) -> ExperimentConfig:
    cfg = ExperimentConfig.from_file(args.config) if args.config else ExperimentConfig()
    overrides = {"out_dir": args.out, "relift": getattr(args, "relift", None),
                 "variant": getattr(args, "variant", None),
                 "enforce_shift_structure": getattr(args, "enforce_shift", None),
                 "train_path": getattr(args, "train", None)}
    if getattr(args, "seed", None) is not None:
        if args.command == "gen-data":
            overrides.update(train_seed=args.seed, test_seed=args.seed + 1)
        else:
            overrides["seed"] = args.seed
    return dataclasses.replace(cfg, **{k: v for k, v in overrides.items() if v is not None})


def _fail(category: str, message: str, code: int) -> int:
    print(json.dumps({"error": category, "message": message}), file=sys.stderr)
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _load_config(args)
        if args.command == "gen-data":
            cmd_gen_data(cfg)
        elif args.command == "fit":
            cmd_fit(cfg)
        elif args.command == "eval":
            cmd_eval(args.model, args.data, cfg.out_dir, bool(cfg.relift))
        elif args.command == "predict":
            out = Path(cfg.out_dir) / f"predictions_{args.mode}.csv"
            cmd_predict(args.model, args.data, out, args.mode, bool(cfg.relift))
    except KoopmanError as exc:
        return _fail(exc.category, str(exc), 1)
    except OSError as exc:
        return _fail("IOError", f"{exc.filename or ''}: {exc.strerror or exc}", 3)
    except (TypeError, yaml.YAMLError) as exc:
        return _fail("ConfigError", str(exc), 1)
    return 0


if __name__ == "__main__":
    sys.exit(main())
