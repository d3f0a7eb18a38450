"""From input sequences to the reservoir state matrix.

One device is simulated per physical node (channel length).  Every discrete
step of the drain-current trace is sampled at a handful of instants, the
virtual nodes: ``V_on`` during the write pulse and ``V_off`` during the
interval that follows it.  The first node of each phase sits right after the
edge, where the current spikes.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Mapping, Optional, Sequence

import numpy as np

from .device import DeviceParams, TraceSeries, build_device, run_trace, with_length
from .waveforms import PulseProgram

DEFAULT_CHANNEL_LENGTHS = (20e-6, 50e-6, 70e-6, 100e-6, 200e-6, 500e-6, 700e-6, 1000e-6)
INVERSION_PIVOT = 0.5


class InputRangeError(ValueError):
    pass


class InsufficientResolutionError(ValueError):
    pass


class TraceLengthMismatchError(ValueError):
    pass


class DegenerateColumnError(ValueError):
    pass


def _check_range(u, low, high) -> np.ndarray:
    u = np.asarray(u, dtype=float).ravel()
    if u.size and (np.any(~np.isfinite(u)) or u.min() < low or u.max() > high):
        raise InputRangeError(f"input outside [{low}, {high}]")
    return u


def encode_input(u, period: float, duty: float, volts_per_unit: float = 1.0,
                 low: float = 0.0, high: float = 0.5) -> PulseProgram:
    """Pulse program whose k-th pulse height is ``u[k] * volts_per_unit``; baseline 0 V."""
    u = _check_range(u, low, high)
    return PulseProgram(u * volts_per_unit, period, duty, 0.0)


def invert_input(u, pivot: float = INVERSION_PIVOT) -> np.ndarray:
    """Inversion stream ``pivot - u`` (``0.5 - u`` for inputs in [0, 0.5])."""
    return pivot - _check_range(u, 0.0, pivot)


@dataclass(frozen=True)
class NodeSpec:
    """Virtual-node layout within one discrete step.

    ``first_sample_offset`` is the delay after each edge of nodes 1 and
    ``V_on + 1``; ``None`` means one trace sample period.
    """

    virtual_nodes_on: int = 5
    virtual_nodes_off: int = 5
    first_sample_offset: Optional[float] = None

    def __post_init__(self):
        if self.virtual_nodes_on < 0 or self.virtual_nodes_off < 0:
            raise ValueError("virtual node counts must be >= 0")
        if self.virtual_nodes_on + self.virtual_nodes_off < 1:
            raise ValueError("need at least one virtual node")
        if self.first_sample_offset is not None and self.first_sample_offset < 0:
            raise ValueError("first_sample_offset must be >= 0")

    @property
    def node_count(self) -> int:
        return self.virtual_nodes_on + self.virtual_nodes_off

    def halved(self) -> "NodeSpec":
        """Layout with half the nodes, used per source when inversion doubles the sources."""
        half = max(1, self.node_count // 2)
        on = min(math.ceil(self.virtual_nodes_on / 2), half)
        return replace(self, virtual_nodes_on=on, virtual_nodes_off=half - on)


def _phase_geometry(program):
    period = getattr(program, "step_period", None) or program.period
    width = getattr(program, "pulse_width", period)
    return period, width


def virtual_node_indices(trace: TraceSeries, program, spec: NodeSpec) -> np.ndarray:
    """Sample indices (within one step) of every virtual node."""
    period, width = _phase_geometry(program)
    S = trace.samples_per_step
    sp = trace.sample_period
    offset = sp if spec.first_sample_offset is None else spec.first_sample_offset
    interval = period - width
    if spec.virtual_nodes_on and offset >= width:
        raise InsufficientResolutionError("first_sample_offset must be shorter than the pulse")
    if spec.virtual_nodes_off and offset >= interval:
        raise InsufficientResolutionError("first_sample_offset must be shorter than the interval")
    d = int(round(offset / sp))
    # first sample of the off-phase; tolerance absorbs roundoff of width/sp
    fall = int(math.ceil(width / sp - 1e-9))
    on = np.round(np.linspace(d, fall - 1, spec.virtual_nodes_on)).astype(int)
    if spec.virtual_nodes_on == 1:
        on = np.array([d])
    off = np.round(np.linspace(fall + d, S - 1, spec.virtual_nodes_off)).astype(int)
    if spec.virtual_nodes_off == 1:
        off = np.array([fall + d])
    idx = np.concatenate([on, off])
    if np.any(np.diff(idx) <= 0) or idx.max(initial=0) >= S or (on.size and on.max() >= fall):
        raise InsufficientResolutionError(
            f"{spec.node_count} virtual nodes do not fit in {S} samples per step")
    return idx


def extract_virtual_nodes(trace: TraceSeries, program, spec: NodeSpec = NodeSpec()) -> np.ndarray:
    """(K, V_on + V_off) drain-current samples, one row per discrete step."""
    K = program.step_count
    S = trace.samples_per_step
    if len(trace) != K * S:
        raise TraceLengthMismatchError(f"trace has {len(trace)} samples, program needs {K * S}")
    idx = virtual_node_indices(trace, program, spec)
    return trace.i_drain.reshape(K, S)[:, idx]


@dataclass
class ReservoirStateMatrix:
    values: np.ndarray                    # (K, N)
    labels: list = field(default_factory=list)

    @property
    def shape(self):
        return self.values.shape

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(self.labels)
            for row in self.values:
                w.writerow([f"{v:.9g}" for v in row])


def node_label(length: float, spec: NodeSpec, v: int, inverted: bool) -> str:
    phase = "on" if v < spec.virtual_nodes_on else "off"
    return f"ch{length * 1e6:g}_{phase}_v{v + 1}{'_inv' if inverted else ''}"


def assemble_states(channel_traces: Mapping[float, TraceSeries], program,
                    spec: NodeSpec = NodeSpec(),
                    inversion_traces: Optional[Mapping[float, TraceSeries]] = None,
                    inversion_program=None) -> ReservoirStateMatrix:
    """Stack virtual-node samples of every channel into the state matrix.

    With inversion traces each source gets ``spec.halved()`` nodes so the
    total column count is unchanged.  Columns are sorted by channel length,
    then virtual node, then the inversion flag.
    """
    sources = [(channel_traces, program, False)]
    if inversion_traces is not None:
        if set(inversion_traces) != set(channel_traces):
            raise ValueError("inversion traces must cover the same channels")
        spec = spec.halved()
        sources.append((inversion_traces, inversion_program or program, True))
    lengths = {len(tr) for traces, _, _ in sources for tr in traces.values()}
    if len(lengths) > 1:
        raise TraceLengthMismatchError(f"traces of different lengths: {sorted(lengths)}")

    cols, labels = [], []
    for length in sorted(channel_traces):
        blocks = [(extract_virtual_nodes(traces[length], prog, spec), inv)
                  for traces, prog, inv in sources]
        for v in range(spec.node_count):
            for block, inv in blocks:
                cols.append(block[:, v])
                labels.append(node_label(length, spec, v, inv))
    return ReservoirStateMatrix(np.column_stack(cols), labels)


@dataclass
class Normalizer:
    minimum: np.ndarray
    maximum: np.ndarray

    def apply(self, values) -> np.ndarray:
        values = np.asarray(values, dtype=float)
        return (values - self.minimum) / (self.maximum - self.minimum)


def fit_normalizer(values, training_rows) -> Normalizer:
    """Column min/max over ``training_rows`` (an int count, slice or index array)."""
    values = np.asarray(values, dtype=float)
    if isinstance(training_rows, (int, np.integer)):
        training_rows = slice(0, int(training_rows))
    train = values[training_rows]
    if train.shape[0] == 0:
        raise ValueError("no training rows")
    lo, hi = train.min(axis=0), train.max(axis=0)
    bad = np.flatnonzero(~(hi > lo))
    if bad.size:
        raise DegenerateColumnError(f"constant training columns: {bad.tolist()}")
    return Normalizer(lo, hi)


def apply_normalizer(normalizer: Normalizer, values) -> np.ndarray:
    return normalizer.apply(values)


# --------------------------------------------------------------------------
# driving the physical nodes

@dataclass(frozen=True)
class DriveSettings:
    """How each channel is driven before and while the program runs.

    ``warmup_steps`` random pulses (drawn from ``warmup_seed``) precede the
    recorded program so that every channel starts from an input-conditioned
    state instead of the unbiased equilibrium.
    """

    v_drain: float = -0.5
    samples_per_step: int = 40
    substeps_per_step: int = 200
    settle_steps: int = 100
    warmup_steps: int = 50
    warmup_seed: int = 99


def _drive_one(args):
    params, program, warmup, settings = args
    state = build_device(params)
    period = program.period
    coarse = dict(samples_per_step=10, timestep=period / 100)
    if settings.settle_steps:
        settle = PulseProgram(np.full(settings.settle_steps, program.baseline_voltage),
                              period, program.duty_ratio, program.baseline_voltage)
        run_trace(state, settle, settings.v_drain, **coarse)
    dt = period / settings.substeps_per_step
    if warmup is not None:
        run_trace(state, warmup, settings.v_drain, samples_per_step=10, timestep=dt)
    return run_trace(state, program, settings.v_drain,
                     samples_per_step=settings.samples_per_step, timestep=dt)


def warmup_program(program: PulseProgram, settings: DriveSettings, volts_per_unit: float,
                   inverted: bool = False, low: float = 0.0, high: float = 0.5):
    if settings.warmup_steps == 0:
        return None
    u = np.random.default_rng(settings.warmup_seed).uniform(low, high, settings.warmup_steps)
    if inverted:
        u = invert_input(u)
    return PulseProgram(u * volts_per_unit, program.period, program.duty_ratio,
                        program.baseline_voltage)


def drive_channels(program: PulseProgram, lengths: Sequence[float] = DEFAULT_CHANNEL_LENGTHS,
                   base_params: DeviceParams = DeviceParams(),
                   settings: DriveSettings = DriveSettings(), warmup=None,
                   jobs: int = 1) -> dict:
    """Simulate one fresh device per channel length; returns {length: trace}."""
    work = [(with_length(base_params, L), program, warmup, settings) for L in lengths]
    if jobs > 1 and len(work) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            traces = list(pool.map(_drive_one, work))
    else:
        traces = [_drive_one(w) for w in work]
    return dict(zip(lengths, traces))
