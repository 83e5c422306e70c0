"""Experiment runner: weight-variance x training-time sweeps to CSV.

Subcommands:

  sweep    --config cfg.json [--out DIR] [--jobs N]
           one trajectory CSV per weight variance plus a manifest JSON
  verify   --config cfg.json
           run the Monte Carlo / finite-difference verification suite,
           print one pass/fail line per check, exit 2 on any failure
  frontier --config cfg.json [--out DIR]
           emit the optimal information-bottleneck frontier table

Exit codes: 0 success, 1 configuration error, 2 verification failure.
The environment variable NTKINFO_SEED overrides the config seed.

Reruns with an identical config and seed produce byte-identical CSVs: all
randomness is derived from (seed, weight-variance index, tau index) and
floats are serialized with 17 significant digits.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .dynamics import PredictiveDistribution, PredictiveEvaluator, spectral_decompose
from .gaussian_task import GaussianTask, entropy_y, exact_mi, gib_frontier, sample
from .info_metrics import (
    TRAJECTORY_COLUMNS,
    MetricConfig,
    TrajectoryFunctionals,
    TrajectoryRecord,
    VARIANCE_FLOOR,
    fisher_trace,
    izd_upper,
    izx_bounds,
    izy_lower,
)
from .kernels import ArchitectureSpec, compute_kernels
from . import verification

log = logging.getLogger("ntkinfo")

SEED_ENV_VAR = "NTKINFO_SEED"


class ConfigError(ValueError):
    """Invalid or unreadable experiment configuration."""


@dataclass(frozen=True)
class TaskConfig:
    n_x: int = 30
    n_y: int = 1
    sigma_x: float = 1.0
    sigma_y: float = 1.0
    target_mi: float = 2.0
    n_train: int = 1000
    n_test: int = 1000


@dataclass(frozen=True)
class ArchBase:
    """Architecture minus the swept weight variance."""

    depth: int = 3
    activation: str = "erf"
    bias_variance: float = 0.01


@dataclass(frozen=True)
class TauGridConfig:
    minimum: float = 1e-2
    maximum: float = 1e10
    num: int = 120

    def values(self) -> np.ndarray:
        grid = np.geomspace(self.minimum, self.maximum, self.num)
        if not np.all(np.diff(grid) > 0):
            raise ConfigError("tau grid must be strictly increasing")
        return grid


@dataclass(frozen=True)
class VerifyConfig:
    """Scale knobs for the verification suite."""

    width: int = 4096
    n_networks: int = 200
    nngp_heads: int = 128
    ntk_heads: int = 16
    n_points: int = 8
    ensemble_draws: int = 100000
    kernel_rtol: float = 0.05


@dataclass(frozen=True)
class ExperimentConfig:
    seed: int = 0
    task: TaskConfig = field(default_factory=TaskConfig)
    arch: ArchBase = field(default_factory=ArchBase)
    weight_variance_grid: tuple = (0.25, 1.0, 4.0)
    tau: TauGridConfig = field(default_factory=TauGridConfig)
    metrics: MetricConfig = field(default_factory=MetricConfig)
    verify: VerifyConfig = field(default_factory=VerifyConfig)
    output_dir: str = "out"
    emit_verify: bool = False

    def __post_init__(self):
        if len(self.weight_variance_grid) == 0:
            raise ConfigError("weight_variance_grid must be nonempty")
        if any(v <= 0 for v in self.weight_variance_grid):
            raise ConfigError("weight variances must be positive")
        if self.task.n_y != 1:
            raise ConfigError("only scalar targets are supported")
        if self.metrics.batch_size > self.task.n_test:
            raise ConfigError("metrics.batch_size cannot exceed task.n_test")
        self.tau.values()

    def materialized(self) -> dict:
        out = asdict(self)
        out["weight_variance_grid"] = list(self.weight_variance_grid)
        return out

    def sha256(self) -> str:
        """Hash of the experiment identity; the output location is excluded."""
        data = self.materialized()
        data.pop("output_dir")
        blob = json.dumps(data, sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()


def _build(cls, data: dict, where: str):
    try:
        return cls(**data)
    except TypeError as exc:
        raise ConfigError(f"bad keys in {where}: {exc}") from exc
    except ValueError as exc:
        raise ConfigError(f"invalid {where}: {exc}") from exc


def config_from_dict(data: dict) -> ExperimentConfig:
    data = dict(data)
    nested = {
        "task": TaskConfig,
        "arch": ArchBase,
        "tau": TauGridConfig,
        "metrics": MetricConfig,
        "verify": VerifyConfig,
    }
    kwargs = {}
    for key, cls in nested.items():
        if key in data:
            kwargs[key] = _build(cls, data.pop(key), key)
    if "weight_variance_grid" in data:
        kwargs["weight_variance_grid"] = tuple(data.pop("weight_variance_grid"))
    for key in ("seed", "output_dir", "emit_verify"):
        if key in data:
            kwargs[key] = data.pop(key)
    if data:
        raise ConfigError(f"unknown config keys: {sorted(data)}")
    env_seed = os.environ.get(SEED_ENV_VAR)
    if env_seed is not None:
        try:
            kwargs["seed"] = int(env_seed)
        except ValueError as exc:
            raise ConfigError(f"{SEED_ENV_VAR} must be an integer, got {env_seed!r}") from exc
    return _build(ExperimentConfig, kwargs, "experiment config")


def load_config(path: str | Path) -> ExperimentConfig:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config root must be a JSON object")
    return config_from_dict(data)


def build_task(cfg: ExperimentConfig) -> GaussianTask:
    return GaussianTask.default(
        seed=cfg.seed,
        n_x=cfg.task.n_x,
        sigma_x=cfg.task.sigma_x,
        sigma_y=cfg.task.sigma_y,
        target_mi=cfg.task.target_mi,
    )


def _fmt(value) -> str:
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), ".17g")


def _frontier_table(task: GaussianTask, batch_size: int) -> dict:
    grid = np.linspace(0.0, math.log(batch_size), 256)
    return {"izx": grid.tolist(), "izy": gib_frontier(task, grid).tolist()}


def compute_trajectories(cfg: ExperimentConfig, sweep_index: int):
    """All TrajectoryRecords for one weight variance.

    Rows whose metrics come out non-finite are dropped with a diagnostic;
    the sweep continues.
    """
    sw2 = cfg.weight_variance_grid[sweep_index]
    task = build_task(cfg)
    train = sample(task, cfg.task.n_train, "train")
    test = sample(task, cfg.task.n_test, "test")
    batch = cfg.metrics.batch_size
    arch = ArchitectureSpec(
        depth=cfg.arch.depth,
        activation=cfg.arch.activation,
        weight_variance=sw2,
        bias_variance=cfg.arch.bias_variance,
        input_dim=cfg.task.n_x,
    )
    kp = compute_kernels(arch, train.inputs, test.inputs[:batch])
    spec = spectral_decompose(kp.ntk_train)
    y = train.targets[:, 0]
    y_test = test.targets[:batch, 0]
    ev_test = PredictiveEvaluator(spec, kp, y)
    ev_train = PredictiveEvaluator(spec, kp.train_as_query(), y)
    funcs = TrajectoryFunctionals(spec, kp, y)
    hy = entropy_y(task)
    fisher = fisher_trace(kp)
    obs_var = cfg.metrics.observation_variance
    records = []
    for tau_index, tau in enumerate(cfg.tau.values()):
        mean_test, var_test = ev_test.mean_and_diag(tau)
        mean_train, var_train = ev_train.mean_and_diag(tau)
        degenerate = int((var_test < VARIANCE_FLOOR).sum() + (var_train < VARIANCE_FLOOR).sum())
        var_test = np.clip(var_test, VARIANCE_FLOOR, None)
        var_train = np.clip(var_train, VARIANCE_FLOOR, None)
        pred_test = PredictiveDistribution(tau, mean_test, None, var_test, y)
        test_loss = 0.5 * float(np.mean((y_test - mean_test) ** 2 + var_test)) / obs_var
        train_loss = 0.5 * float(np.mean((y - mean_train) ** 2 + var_train)) / obs_var
        izx = izx_bounds(
            mean_test,
            var_test,
            cfg.metrics,
            seed=[cfg.metrics.rng_seed, sweep_index, tau_index],
        )
        record = TrajectoryRecord(
            tau=float(tau),
            train_loss=train_loss,
            test_loss=test_loss,
            izy_lower=izy_lower(pred_test, y_test, hy, obs_var),
            izx_lower=izx.lower,
            izx_upper=izx.upper,
            izd_upper=izd_upper(pred_test, kp.nngp_test_diag),
            fisher_trace=fisher,
            path_length_bound=funcs.path_length_bound(tau),
            itheta_d_lower=funcs.itheta_d_lower(tau),
            ditheta_d_dtau=funcs.ditheta_d_dtau(tau),
            degeneracy_flags=degenerate + izx.degenerate_count,
        )
        row = record.as_row()
        if not all(np.isfinite(v) for v in row):
            log.warning(
                "dropping tau=%g row for weight variance %g: non-finite metric", tau, sw2
            )
            continue
        records.append(record)
    return records, fisher


def _csv_name(sw2: float) -> str:
    return f"trajectory_wv{sw2:g}.csv"


def _write_trajectories(path: Path, records) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRAJECTORY_COLUMNS)
        for rec in records:
            writer.writerow([_fmt(v) for v in rec.as_row()])


def _sweep_worker(args):
    cfg_dict, index, out_dir = args
    cfg = config_from_dict(cfg_dict)
    records, fisher = compute_trajectories(cfg, index)
    sw2 = cfg.weight_variance_grid[index]
    path = Path(out_dir) / _csv_name(sw2)
    _write_trajectories(path, records)
    return index, path.name, fisher, len(records)


def run_sweep(cfg: ExperimentConfig, jobs: int = 1) -> dict:
    """Run the full weight-variance sweep; returns the manifest dict."""
    out_dir = Path(cfg.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    task = build_task(cfg)
    worker_args = [(cfg.materialized(), i, str(out_dir)) for i in range(len(cfg.weight_variance_grid))]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_sweep_worker, worker_args))
    else:
        results = [_sweep_worker(a) for a in worker_args]
    files, fishers = {}, {}
    for index, name, fisher, n_rows in sorted(results):
        sw2_key = _fmt(cfg.weight_variance_grid[index])
        files[sw2_key] = name
        fishers[sw2_key] = fisher
        log.info("weight variance %s: %d rows -> %s", sw2_key, n_rows, name)
    manifest = {
        "version": __version__,
        "config": cfg.materialized(),
        "config_sha256": cfg.sha256(),
        "seed": cfg.seed,
        "exact_mi": exact_mi(task),
        "entropy_y": entropy_y(task),
        "fisher_trace": fishers,
        "files": files,
        "gib_frontier": _frontier_table(task, cfg.metrics.batch_size),
    }
    if cfg.emit_verify:
        report = verification.run_all(cfg)
        manifest["verification"] = report.as_dict()
        with open(out_dir / "verify_report.json", "w") as fh:
            json.dump(report.as_dict(), fh, indent=2)
    with open(out_dir / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2)
    return manifest


def write_frontier(cfg: ExperimentConfig, out_dir: Path) -> Path:
    task = build_task(cfg)
    table = _frontier_table(task, cfg.metrics.batch_size)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / "frontier.csv"
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["izx", "izy"])
        for r, v in zip(table["izx"], table["izy"]):
            writer.writerow([_fmt(r), _fmt(v)])
    return path


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ntkinfo", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("sweep", "verify", "frontier"):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="path to the JSON experiment config")
        if name != "verify":
            p.add_argument("--out", default=None, help="output directory (overrides config)")
        if name == "sweep":
            p.add_argument("--jobs", type=int, default=1, help="parallel weight-variance workers")
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    args = _parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if getattr(args, "out", None):
            cfg = config_from_dict({**cfg.materialized(), "output_dir": args.out})
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    if args.command == "sweep":
        manifest = run_sweep(cfg, jobs=args.jobs)
        print(f"wrote {len(manifest['files'])} trajectory files to {cfg.output_dir}")
        return 0
    if args.command == "frontier":
        path = write_frontier(cfg, Path(cfg.output_dir))
        print(f"wrote {path}")
        return 0
    report = verification.run_all(cfg)
    for check in report.checks:
        status = "PASS" if check.passed else "FAIL"
        print(f"{status} {check.name}: {check.detail}")
    if not report.all_passed:
        return 2
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
