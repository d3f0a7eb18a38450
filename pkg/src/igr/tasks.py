"""Benchmark targets and the end-to-end series experiments.

The two regression benchmarks are the second-order nonlinear system

    y(k+1) = 0.4 y(k) + 0.4 y(k) y(k-1) + 0.6 u(k)^3 + 0.1

written either as a NARMA2 recurrence (``narma2``) or with the input index
shifted by one (``second_order``).  Both return arrays aligned with ``u``:
entry ``j`` is the output produced by ``u[j]``, i.e. the value the reservoir
must emit after the j-th pulse.
"""

from __future__ import annotations

import csv
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .device import DeviceParams, build_device, run_trace, with_length
from .lyapunov import EmbeddingConfig, LyapunovSpectrum, embed, spectrum
from .readout import DEFAULT_RIDGE_LAMBDA, RegressionReport, evaluate_regression, ridge_fit
from .reservoir import (DriveSettings, NodeSpec, ReservoirStateMatrix, assemble_states,
                        drive_channels, encode_input, fit_normalizer, invert_input,
                        warmup_program)
from .waveforms import TriangularWaveform

DEFAULT_CHANNEL_LENGTHS_UM = (20.0, 50.0, 70.0, 100.0, 200.0, 500.0, 700.0, 1000.0)
TASK_KINDS = ("narma2", "second_order")


class DivergenceError(RuntimeError):
    pass


def gen_input(T: int, low: float = 0.0, high: float = 0.5, seed: int = 0) -> np.ndarray:
    """``T`` i.i.d. uniform draws in ``[low, high)`` from a seeded PCG64 stream."""
    if not low < high:
        raise ValueError("need low < high")
    return np.random.default_rng(seed).uniform(low, high, int(T))


def _diverged(k):
    return DivergenceError(f"target left [0, 1) at step {k}; input range too wide for this system")


def narma2(u) -> np.ndarray:
    """NARMA2 with zero history: ``out[j] = y(j+1)``, driven by ``u[j]``."""
    u = np.asarray(u, dtype=float).ravel()
    out = np.empty(u.size)
    y1 = y0 = 0.0          # y(k), y(k-1)
    for j, uk in enumerate(u):
        y_next = 0.4 * y1 + 0.4 * y1 * y0 + 0.6 * uk ** 3 + 0.1
        if not 0.0 <= y_next < 1.0:
            raise _diverged(j)
        out[j] = y_next
        y0, y1 = y1, y_next
    return out


def second_order(u) -> np.ndarray:
    """Second-order system with 1-based input: ``out[j] = y(j+1)`` uses ``u(j+1) = u[j]``.

    ``y(k) = 0.4 y(k-1) + 0.4 y(k-1) y(k-2) + 0.6 u(k)^3 + 0.1`` with
    ``y(0) = y(-1) = 0``.  This is the NARMA2 map with the input index
    advanced by one, so on the same array the two outputs coincide.
    """
    u = np.asarray(u, dtype=float).ravel()
    y = np.zeros(u.size + 2)   # y[0] = y(-1), y[1] = y(0)
    for k in range(1, u.size + 1):
        y[k + 1] = 0.4 * y[k] + 0.4 * y[k] * y[k - 1] + 0.6 * u[k - 1] ** 3 + 0.1
        if not 0.0 <= y[k + 1] < 1.0:
            raise _diverged(k - 1)
    return y[2:]


TARGETS = {"narma2": narma2, "second_order": second_order}


@dataclass(frozen=True)
class SeriesTaskConfig:
    """One series-regression experiment.

    ``volts_per_unit`` maps the dimensionless input onto pulse heights.  The
    simulated channel's threshold is only 40 mV, so the default keeps the
    pulses in the weakly nonlinear range below it.
    """

    kind: str = "narma2"
    train_length: int = 450
    test_length: int = 150
    input_low: float = 0.0
    input_high: float = 0.5
    rng_seed: int = 0
    period: float = 50e-3
    duty: float = 0.75
    inversion: bool = True
    volts_per_unit: float = 0.01
    v_drain: float = -0.5
    ridge_lambda: float = DEFAULT_RIDGE_LAMBDA
    channel_lengths_um: tuple = DEFAULT_CHANNEL_LENGTHS_UM
    virtual_nodes_on: int = 5
    virtual_nodes_off: int = 5
    samples_per_step: int = 40
    substeps_per_step: int = 200
    warmup_steps: int = 50
    washout: int = 0
    device: DeviceParams = field(default_factory=DeviceParams)

    def __post_init__(self):
        object.__setattr__(self, "channel_lengths_um", tuple(float(x) for x in self.channel_lengths_um))
        if self.kind not in TASK_KINDS:
            raise ValueError(f"kind must be one of {TASK_KINDS}")
        if self.train_length <= 0 or self.test_length <= 0:
            raise ValueError("train and test lengths must be positive")
        if not self.input_low < self.input_high:
            raise ValueError("input_low must be below input_high")
        if not self.channel_lengths_um:
            raise ValueError("need at least one channel")
        if not 0 <= self.washout < self.train_length:
            raise ValueError("washout must be shorter than the training window")

    @property
    def step_count(self) -> int:
        return self.train_length + self.test_length

    @property
    def node_spec(self) -> NodeSpec:
        return NodeSpec(self.virtual_nodes_on, self.virtual_nodes_off)

    @property
    def drive(self) -> DriveSettings:
        return DriveSettings(v_drain=self.v_drain, samples_per_step=self.samples_per_step,
                             substeps_per_step=self.substeps_per_step,
                             warmup_steps=self.warmup_steps)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["channel_lengths_um"] = list(self.channel_lengths_um)
        return d


def reservoir_states(config: SeriesTaskConfig, u, jobs: int = 1) -> ReservoirStateMatrix:
    """Simulate every channel (and its inversion stream) and assemble the raw matrix."""
    kw = dict(low=config.input_low, high=config.input_high)
    program = encode_input(u, config.period, config.duty, config.volts_per_unit, **kw)
    lengths = [L * 1e-6 for L in config.channel_lengths_um]
    settings = config.drive
    traces = drive_channels(program, lengths, config.device, settings,
                            warmup_program(program, settings, config.volts_per_unit, **kw), jobs)
    inv_traces = inv_program = None
    if config.inversion:
        inv_program = encode_input(invert_input(u), config.period, config.duty,
                                   config.volts_per_unit, **kw)
        inv_traces = drive_channels(inv_program, lengths, config.device, settings,
                                    warmup_program(program, settings, config.volts_per_unit,
                                                   inverted=True, **kw), jobs)
    return assemble_states(traces, program, config.node_spec, inv_traces, inv_program)


def _fit_and_score(X, y, config: SeriesTaskConfig, labels=None) -> RegressionReport:
    w, T = config.washout, config.train_length
    X, y = X[w:], y[w:]
    norm = fit_normalizer(X, T - w)
    Xn = norm.apply(X)
    readout = ridge_fit(Xn[:T - w], y[:T - w], config.ridge_lambda, labels)
    return evaluate_regression(readout, Xn, y, T - w)


def memoryless_baseline(u, y, config: SeriesTaskConfig) -> RegressionReport:
    """Ridge on ``[u, u^2, u^3]`` only, same split, normalization and lambda."""
    u = np.asarray(u, dtype=float)
    return _fit_and_score(np.column_stack([u, u ** 2, u ** 3]), y, config)


def run_series_task(config: SeriesTaskConfig = SeriesTaskConfig(), jobs: int = 1,
                    extra_columns: Optional[np.ndarray] = None) -> RegressionReport:
    """Full pipeline: input, simulation, state matrix, ridge fit, metrics.

    ``extra_columns`` are appended to the state matrix before fitting
    (used to sanity-check the pipeline with an oracle feature).
    """
    u = gen_input(config.step_count, config.input_low, config.input_high, config.rng_seed)
    y = TARGETS[config.kind](u)
    states = reservoir_states(config, u, jobs)
    X, labels = states.values, list(states.labels)
    if extra_columns is not None:
        extra = np.asarray(extra_columns, dtype=float).reshape(len(u), -1)
        X = np.hstack([X, extra])
        labels += [f"extra_{i}" for i in range(extra.shape[1])]
    report = _fit_and_score(X, y, config, labels)
    base = memoryless_baseline(u, y, config)
    report.extra.update({"input": u, "baseline": base.metrics(), "labels": labels})
    return report


def report_json(report: RegressionReport, config: SeriesTaskConfig, seed: int) -> str:
    return json.dumps({"task": config.kind, "seed": seed, "config": config.to_dict(),
                       "metrics": report.metrics(),
                       "baseline_metrics": report.extra.get("baseline"),
                       "reservoir_size": report.readout.feature_count if report.readout else None},
                      indent=2, sort_keys=True)


def write_report(report: RegressionReport, config: SeriesTaskConfig, seed: int, out_dir) -> None:
    from pathlib import Path
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(report_json(report, config, seed))
    with open(out / "prediction.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["k", "target", "prediction"])
        for k, (t, p) in enumerate(zip(report.target, report.predicted)):
            w.writerow([k, f"{t:.9g}", f"{p:.9g}"])
    if report.readout is not None:
        (out / "readout.json").write_text(report.readout.to_json())


# --------------------------------------------------------------------------
# operating-condition sweep

DEFAULT_SWEEP_PERIODS = (10e-3, 20e-3, 50e-3, 100e-3)
DEFAULT_SWEEP_DUTIES = (0.25, 0.5, 0.75, 0.9)


@dataclass
class SweepCell:
    period: float
    duty: float
    nmse_test: float = float("nan")
    error: Optional[str] = None
    best: bool = False


def _sweep_cell(args):
    period, duty, config = args
    try:
        rep = run_series_task(replace(config, period=period, duty=duty))
        return SweepCell(period, duty, rep.nmse_test)
    except Exception as exc:     # recorded per cell; one bad cell must not kill the grid
        return SweepCell(period, duty, error=f"{type(exc).__name__}: {exc}")


def sweep(periods: Sequence[float] = DEFAULT_SWEEP_PERIODS,
          duties: Sequence[float] = DEFAULT_SWEEP_DUTIES,
          config: SeriesTaskConfig = SeriesTaskConfig(), jobs: int = 1) -> list:
    """Test NMSE for every (period, duty) pair; the best finite cell is flagged."""
    if not periods or not duties:
        raise ValueError("periods and duties must be non-empty")
    work = [(p, d, config) for p in periods for d in duties]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            cells = list(pool.map(_sweep_cell, work))
    else:
        cells = [_sweep_cell(w) for w in work]
    ok = [c for c in cells if c.error is None and np.isfinite(c.nmse_test)]
    if ok:
        min(ok, key=lambda c: c.nmse_test).best = True
    return cells


def write_sweep_csv(cells, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["period_s", "duty", "nmse_test", "best", "error"])
        for c in cells:
            w.writerow([f"{c.period:.9g}", f"{c.duty:.9g}", f"{c.nmse_test:.9g}",
                        int(c.best), c.error or ""])


# --------------------------------------------------------------------------
# virtual-node ablation

@dataclass
class AblationResult:
    nmse_per_node: np.ndarray     # index v-1 for virtual node v
    nmse_all_nodes: float
    nmse_train_per_node: np.ndarray
    nmse_train_all_nodes: float


def node_ablation(config: SeriesTaskConfig = SeriesTaskConfig(), jobs: int = 1) -> AblationResult:
    """Test NMSE using only the physical-node columns of one virtual node at a time."""
    config = replace(config, inversion=False)
    u = gen_input(config.step_count, config.input_low, config.input_high, config.rng_seed)
    y = TARGETS[config.kind](u)
    X = reservoir_states(config, u, jobs).values
    V = config.node_spec.node_count
    test, train = [], []
    for v in range(V):
        rep = _fit_and_score(X[:, v::V], y, config)
        test.append(rep.nmse_test)
        train.append(rep.nmse_train)
    full = _fit_and_score(X, y, config)
    return AblationResult(np.array(test), full.nmse_test, np.array(train), full.nmse_train)


# --------------------------------------------------------------------------
# Lyapunov analysis under triangular drive

@dataclass(frozen=True)
class LyapunovTaskConfig:
    """Triangular gate drive on every channel; 5 virtual nodes per step.

    The input coordinate appended to the embedding is the waveform value at
    the start of each step, scaled to [0, 1].
    """

    amplitude: float = 0.01
    period: float = 1.0
    cycles: int = 50
    steps_per_cycle: int = 20
    v_drain: float = -0.5
    channel_lengths_um: tuple = DEFAULT_CHANNEL_LENGTHS_UM
    virtual_nodes: int = 5
    samples_per_step: int = 40
    substeps_per_step: int = 200
    washout: int = 100
    include_input: bool = True
    embedding: EmbeddingConfig = field(default_factory=EmbeddingConfig)
    device: DeviceParams = field(default_factory=DeviceParams)

    def __post_init__(self):
        object.__setattr__(self, "channel_lengths_um", tuple(float(x) for x in self.channel_lengths_um))
        if self.washout >= self.cycles * self.steps_per_cycle:
            raise ValueError("washout consumes the whole trajectory")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["channel_lengths_um"] = list(self.channel_lengths_um)
        return d


def reservoir_trajectory(config: LyapunovTaskConfig = LyapunovTaskConfig()):
    """Normalised (steps, channels * nodes [+1]) trajectory and the raw state matrix."""
    wave = TriangularWaveform(config.amplitude, config.period, config.cycles, config.steps_per_cycle)
    spec = NodeSpec(config.virtual_nodes, 0)
    traces = {}
    for L in config.channel_lengths_um:
        state = build_device(with_length(config.device, L * 1e-6))
        traces[L * 1e-6] = run_trace(state, wave, config.v_drain,
                                     samples_per_step=config.samples_per_step,
                                     timestep=wave.step_period / config.substeps_per_step)
    states = assemble_states(traces, wave, spec)
    w = config.washout
    X = states.values[w:]
    Xn = fit_normalizer(X, len(X)).apply(X)
    u = wave.step_inputs()[w:] / config.amplitude if config.include_input else None
    return embed(Xn, u), states


def run_lyapunov(config: LyapunovTaskConfig = LyapunovTaskConfig()) -> LyapunovSpectrum:
    traj, _ = reservoir_trajectory(config)
    return spectrum(traj, config.embedding)
