"""Command-line entry point: ``igr <command> [--config c.json] [--out dir] [--seed n] [--jobs n]``.

Every command reads an optional JSON config whose keys mirror the fields of
the matching config dataclass (nested ``device``, ``embedding`` and
``protocol`` objects included).  Unknown keys are rejected.  Reports are
written to ``--out`` and always echo the resolved config and seed.

Exit codes: 0 success, 1 configuration error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import os
import sys
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .device import DeviceParams, build_device, run_trace, with_length, write_trace_csv
from .lyapunov import EmbeddingConfig, write_return_map_csv
from .mnist import MnistConfig, PatternProtocol, run_mnist
from .reservoir import encode_input
from .tasks import (DEFAULT_SWEEP_DUTIES, DEFAULT_SWEEP_PERIODS, LyapunovTaskConfig,
                    SeriesTaskConfig, gen_input, node_ablation, reservoir_trajectory,
                    run_series_task, spectrum, sweep, write_report, write_sweep_csv)

NESTED = {"device": DeviceParams, "embedding": EmbeddingConfig, "protocol": PatternProtocol}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class SimulateConfig:
    """Random pulse program on a single channel; writes the raw trace."""

    channel_length_um: float = 1000.0
    steps: int = 100
    period: float = 50e-3
    duty: float = 0.75
    volts_per_unit: float = 1.0
    input_low: float = 0.0
    input_high: float = 0.5
    v_drain: float = -0.5
    samples_per_step: int = 40
    record_profiles: bool = False
    rng_seed: int = 0
    device: DeviceParams = field(default_factory=DeviceParams)


@dataclass(frozen=True)
class SweepConfig:
    periods: tuple = DEFAULT_SWEEP_PERIODS
    duties: tuple = DEFAULT_SWEEP_DUTIES
    task: SeriesTaskConfig = field(default_factory=SeriesTaskConfig)


def build_config(cls, data: dict, where: str = "config"):
    """Instantiate dataclass ``cls`` from a JSON object, failing on unknown keys."""
    if not isinstance(data, dict):
        raise ConfigError(f"{where}: expected an object")
    known = {f.name: f for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - set(known))
    if unknown:
        raise ConfigError(f"{where}: unknown keys {unknown}")
    kwargs = {}
    for key, value in data.items():
        nested = NESTED.get(key)
        if nested is not None and dataclasses.is_dataclass(nested):
            value = build_config(nested, value, f"{where}.{key}")
        elif isinstance(value, list):
            value = tuple(value)
        kwargs[key] = value
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def config_to_dict(cfg) -> dict:
    d = asdict(cfg)
    return json.loads(json.dumps(d, default=list))


def _load_json(path: Optional[str]) -> dict:
    if path is None:
        return {}
    try:
        return json.loads(Path(path).read_text())
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file is not valid JSON: {exc}") from exc


def _with_seed(cfg, seed):
    return cfg if seed is None else replace(cfg, rng_seed=seed)


def _dump(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


# --------------------------------------------------------------------------
# commands

def cmd_simulate(raw, args, out: Path):
    cfg = _with_seed(build_config(SimulateConfig, raw), args.seed)
    u = gen_input(cfg.steps, cfg.input_low, cfg.input_high, cfg.rng_seed)
    program = encode_input(u, cfg.period, cfg.duty, cfg.volts_per_unit, cfg.input_low, cfg.input_high)
    state = build_device(with_length(cfg.device, cfg.channel_length_um * 1e-6))
    trace = run_trace(state, program, cfg.v_drain, samples_per_step=cfg.samples_per_step,
                      record_profiles=cfg.record_profiles)
    write_trace_csv(trace, out / "trace.csv")
    kcl = np.abs(trace.i_drain + trace.i_source + trace.i_gate).max()
    _dump(out / "report.json", {
        "command": "simulate", "seed": cfg.rng_seed, "config": config_to_dict(cfg),
        "samples": len(trace), "max_abs_i_drain_A": float(np.abs(trace.i_drain).max()),
        "max_kirchhoff_residual_A": float(kcl)})


def _series(kind):
    def run(raw, args, out: Path):
        raw = dict(raw)
        if raw.setdefault("kind", kind) != kind:
            raise ConfigError(f"config kind {raw['kind']!r} does not match command")
        cfg = _with_seed(build_config(SeriesTaskConfig, raw), args.seed)
        report = run_series_task(cfg, jobs=args.jobs)
        write_report(report, cfg, cfg.rng_seed, out)
    return run


def cmd_sweep(raw, args, out: Path):
    raw = dict(raw)
    task_raw = raw.pop("task", {})
    cfg = build_config(SweepConfig, raw)
    task = _with_seed(build_config(SeriesTaskConfig, task_raw, "config.task"), args.seed)
    cells = sweep(cfg.periods, cfg.duties, task, jobs=args.jobs)
    write_sweep_csv(cells, out / "sweep.csv")
    _dump(out / "report.json", {
        "command": "sweep", "seed": task.rng_seed,
        "config": {"periods": list(cfg.periods), "duties": list(cfg.duties), "task": task.to_dict()},
        "cells": [asdict(c) for c in cells]})


def cmd_ablation(raw, args, out: Path):
    cfg = _with_seed(build_config(SeriesTaskConfig, raw), args.seed)
    res = node_ablation(cfg, jobs=args.jobs)
    with open(out / "ablation.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["virtual_node", "nmse_test"])
        for v, e in enumerate(res.nmse_per_node, 1):
            w.writerow([v, f"{e:.9g}"])
        w.writerow(["all", f"{res.nmse_all_nodes:.9g}"])
    _dump(out / "report.json", {
        "command": "ablation", "seed": cfg.rng_seed, "config": replace(cfg, inversion=False).to_dict(),
        "nmse_per_node": [float(e) for e in res.nmse_per_node],
        "nmse_all_nodes": res.nmse_all_nodes})


def cmd_mnist(raw, args, out: Path):
    raw = dict(raw)
    if args.data_dir is not None:
        raw["data_dir"] = args.data_dir
    cfg = _with_seed(build_config(MnistConfig, raw), args.seed)
    res = run_mnist(cfg)
    with open(out / "pattern_table.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["pattern", "i_drain_A", "value"])
        for p, (i, v) in enumerate(zip(res.table.currents, res.table.values)):
            w.writerow([format(p, "04b"), f"{i:.9g}", f"{v:.9g}"])
    resolved = config_to_dict(cfg)
    if cfg.data_dir is None:
        resolved["data_dir"] = os.environ.get("IGR_MNIST_DIR") or "bundled"
    _dump(out / "report.json", {
        "command": "mnist", "seed": cfg.rng_seed, "config": resolved,
        "accuracy_curve": [{"train_images": n, "test_accuracy": a} for n, a in res.curve],
        "train_accuracy": res.train_accuracy, "test_accuracy": res.test_accuracy,
        "pattern_offset_A": res.table.offset})


def cmd_lyapunov(raw, args, out: Path):
    cfg = build_config(LyapunovTaskConfig, raw)
    traj, states = reservoir_trajectory(cfg)
    result = spectrum(traj, cfg.embedding)
    payload = json.loads(result.to_json())
    payload.update({"command": "lyapunov", "seed": args.seed, "config": cfg.to_dict(),
                    "dimension": int(traj.shape[1])})
    _dump(out / "report.json", payload)
    states.to_csv(out / "states.csv")
    for j in (0, states.values.shape[1] - 1):
        write_return_map_csv(states.values[cfg.washout:, j], out / f"return_map_{states.labels[j]}.csv")


COMMANDS = {
    "simulate": cmd_simulate,
    "narma2": _series("narma2"),
    "second-order": _series("second_order"),
    "mnist": cmd_mnist,
    "lyapunov": cmd_lyapunov,
    "sweep": cmd_sweep,
    "ablation": cmd_ablation,
}


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="igr", description="Ion-gating reservoir simulator")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", help="JSON config file")
        s.add_argument("--out", default=".", help="output directory")
        s.add_argument("--seed", type=int, help="override the config's rng_seed")
        s.add_argument("--jobs", type=int, default=os.cpu_count() or 1,
                       help="parallel workers for independent simulations")
        if name == "mnist":
            s.add_argument("--data-dir", help="directory with IDX files (else $IGR_MNIST_DIR)")
    return p


def main(argv=None) -> int:
    try:
        args = _parser().parse_args(argv)
    except SystemExit as exc:      # argparse exits 2 on usage errors; those are config errors
        return 0 if exc.code == 0 else 1
    try:
        if args.seed is not None and not 0 <= args.seed < 2 ** 64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if args.jobs < 1:
            raise ConfigError("--jobs must be >= 1")
        raw = _load_json(args.config)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        COMMANDS[args.command](raw, args, out)
    except ConfigError as exc:
        print(f"igr: config error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:
        print(f"igr: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    return 0


def main_exit():
    sys.exit(main())


if __name__ == "__main__":
    main_exit()
