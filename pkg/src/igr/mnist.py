"""Handwritten-digit classification through a 4-pulse reservoir lookup table.

Each image is binarised and cut into 196 runs of four consecutive pixels
(row-major).  A run is replayed on the device as four gate pulses and the
drain current after the last pulse becomes the feature value.  Since the
device starts from the same steady state every time, the 16 possible runs
can be simulated once and stored in a ``PatternTable``.

A 2000/500 image subset (stratified, 200 and 50 per digit) ships in
``igr/data/mnist_subset`` in IDX format so that runs need no download.
"""

from __future__ import annotations

import gzip
import math
import os
import struct
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .device import DeviceParams, build_device, run_trace, solve_network, steady_state
from .readout import accuracy, classify, logistic_fit, one_hot
from .waveforms import PulseProgram

IMAGE_MAGIC = 0x00000803
LABEL_MAGIC = 0x00000801
BUNDLED_DIR = Path(__file__).parent / "data" / "mnist_subset"
ENV_DIR = "IGR_MNIST_DIR"


class BadMagicError(ValueError):
    pass


class TruncatedFileError(ValueError):
    pass


class CountMismatchError(ValueError):
    pass


class PatternsNotSeparatedError(RuntimeError):
    pass


@dataclass
class MnistDataset:
    images: np.ndarray     # (count, 28, 28) uint8
    labels: np.ndarray     # (count,) uint8

    def __len__(self):
        return int(self.labels.size)

    def subset(self, count: int) -> "MnistDataset":
        return MnistDataset(self.images[:count], self.labels[:count])


def _read_bytes(path) -> bytes:
    raw = Path(path).read_bytes()
    if raw[:2] == b"\x1f\x8b":
        raw = gzip.decompress(raw)
    return raw


def _header(raw: bytes, magic: int, fields: int, path) -> tuple:
    size = 4 * (fields + 1)
    if len(raw) < size:
        raise TruncatedFileError(f"{path}: header shorter than {size} bytes")
    values = struct.unpack(f">{fields + 1}I", raw[:size])
    if values[0] != magic:
        raise BadMagicError(f"{path}: magic {values[0]:#010x}, expected {magic:#010x}")
    return values[1:], size


def load_mnist(images_path, labels_path) -> MnistDataset:
    """Decode a big-endian IDX image/label file pair (optionally gzipped)."""
    raw = _read_bytes(images_path)
    (count, rows, cols), off = _header(raw, IMAGE_MAGIC, 3, images_path)
    if (rows, cols) != (28, 28):
        raise ValueError(f"{images_path}: images are {rows}x{cols}, expected 28x28")
    body = raw[off:]
    if len(body) < count * 784:
        raise TruncatedFileError(f"{images_path}: {len(body)} pixel bytes, header says {count * 784}")
    images = np.frombuffer(body[:count * 784], dtype=np.uint8).reshape(count, 28, 28).copy()

    raw = _read_bytes(labels_path)
    (n_labels,), off = _header(raw, LABEL_MAGIC, 1, labels_path)
    body = raw[off:]
    if len(body) < n_labels:
        raise TruncatedFileError(f"{labels_path}: {len(body)} label bytes, header says {n_labels}")
    labels = np.frombuffer(body[:n_labels], dtype=np.uint8).copy()
    if n_labels != count:
        raise CountMismatchError(f"{count} images but {n_labels} labels")
    if labels.size and labels.max() > 9:
        raise ValueError(f"{labels_path}: label outside 0..9")
    return MnistDataset(images, labels)


def _find(directory: Path, stem: str) -> Path:
    for name in (stem, stem + ".gz", stem.replace("-idx", ".idx"), stem.replace("-idx", ".idx") + ".gz"):
        if (directory / name).exists():
            return directory / name
    raise FileNotFoundError(f"no {stem}[.gz] in {directory}")


def mnist_directory(directory=None) -> Path:
    """Explicit directory, else ``$IGR_MNIST_DIR``, else the bundled subset."""
    if directory is None:
        directory = os.environ.get(ENV_DIR) or BUNDLED_DIR
    return Path(directory)


def load_split(split: str, directory=None) -> MnistDataset:
    """``split`` is ``"train"`` or ``"test"``; files use the standard IDX names."""
    prefix = {"train": "train", "test": "t10k"}[split]
    d = mnist_directory(directory)
    return load_mnist(_find(d, f"{prefix}-images-idx3-ubyte"), _find(d, f"{prefix}-labels-idx1-ubyte"))


# --------------------------------------------------------------------------
# pattern table

@dataclass(frozen=True)
class PatternProtocol:
    """Four-pulse write protocol; pulse ``i`` carries bit ``i`` (first pulse = MSB)."""

    low_voltage: float = -0.5          # bit 0
    high_voltage: float = 0.3          # bit 1
    pulse_width: float = 10e-3
    interval: float = 12.5e-3
    interval_voltage: float = -0.5
    v_drain: float = -0.5
    bits: int = 4
    offset_granularity: float = 1e-6
    samples_per_step: int = 20
    timestep: float = 25e-6


@dataclass
class PatternTable:
    values: np.ndarray          # normalised, index = pattern as an integer
    currents: np.ndarray        # raw drain current in amperes
    offset: float               # amperes added before normalisation

    def __getitem__(self, pattern):
        return self.values[pattern]


def pattern_current(params: DeviceParams, protocol: PatternProtocol, pattern: int,
                    start=None) -> float:
    """Drain current one interval after the last pulse of ``pattern``."""
    n = protocol.bits
    bits = [(pattern >> (n - 1 - i)) & 1 for i in range(n)]
    volts = np.where(bits, protocol.high_voltage, protocol.low_voltage)
    period = protocol.pulse_width + protocol.interval
    program = PulseProgram(volts, period, protocol.pulse_width / period, protocol.interval_voltage)
    state = start.copy() if start is not None else steady_state(
        build_device(params), protocol.interval_voltage, protocol.v_drain)
    run_trace(state, program, protocol.v_drain, samples_per_step=protocol.samples_per_step,
              timestep=protocol.timestep)
    return solve_network(state, protocol.interval_voltage, protocol.v_drain).i_drain


def build_pattern_table(params: DeviceParams = DeviceParams(),
                        protocol: PatternProtocol = PatternProtocol()) -> PatternTable:
    """Simulate all ``2**bits`` pulse streams from the same steady state.

    The offset is the smallest multiple of ``offset_granularity`` that makes
    every current strictly positive; values are then scaled so that the
    all-ones pattern maps to 1.
    """
    start = steady_state(build_device(params), protocol.interval_voltage, protocol.v_drain)
    count = 2 ** protocol.bits
    currents = np.array([pattern_current(params, protocol, p, start) for p in range(count)])
    g = protocol.offset_granularity
    offset = max(0.0, (math.floor(-currents.min() / g) + 1) * g)
    shifted = currents + offset
    values = shifted / shifted[count - 1]
    diffs = np.abs(np.subtract.outer(values, values))[np.triu_indices(count, 1)]
    scale = np.abs(values).max()
    if diffs.min() < 1e-6 * scale:
        raise PatternsNotSeparatedError("two patterns give indistinguishable currents")
    return PatternTable(values, currents, offset)


def encode_image(image, table: PatternTable, threshold: int = 128) -> np.ndarray:
    """196 reservoir values of one 28x28 image (row-major runs of 4 pixels)."""
    if not 1 <= threshold <= 255:
        raise ValueError("threshold must lie in 1..255")
    bits = (np.asarray(image).reshape(-1) >= threshold).astype(np.int64)
    patterns = bits.reshape(-1, 4) @ np.array([8, 4, 2, 1])
    return table.values[patterns]


def encode_images(images, table: PatternTable, threshold: int = 128) -> np.ndarray:
    images = np.asarray(images)
    bits = (images.reshape(len(images), -1) >= threshold).astype(np.int64)
    patterns = bits.reshape(len(images), -1, 4) @ np.array([8, 4, 2, 1])
    return table.values[patterns]


# --------------------------------------------------------------------------
# experiment

@dataclass(frozen=True)
class MnistConfig:
    train_count: int = 2000
    test_count: int = 500
    train_sizes: tuple = (100, 500, 1000, 2000)
    learning_rate: float = 0.1
    epochs: int = 20
    mode: str = "online"
    threshold: int = 128
    rng_seed: int = 0
    data_dir: Optional[str] = None
    device: DeviceParams = field(default_factory=DeviceParams)
    protocol: PatternProtocol = field(default_factory=PatternProtocol)

    def __post_init__(self):
        object.__setattr__(self, "train_sizes", tuple(int(n) for n in self.train_sizes))
        if self.train_count < 1 or self.test_count < 1:
            raise ValueError("train_count and test_count must be positive")
        if any(n < 1 or n > self.train_count for n in self.train_sizes):
            raise ValueError("train_sizes must lie in 1..train_count")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["train_sizes"] = list(self.train_sizes)
        return d


@dataclass
class MnistResult:
    table: PatternTable
    curve: list            # [(training images, test accuracy)]
    train_accuracy: float
    test_accuracy: float


def run_mnist(config: MnistConfig = MnistConfig()) -> MnistResult:
    """Train the logistic readout on growing subsets; report test accuracy for each."""
    train = load_split("train", config.data_dir)
    test = load_split("test", config.data_dir)
    if len(train) < config.train_count or len(test) < config.test_count:
        raise ValueError(f"dataset has {len(train)}/{len(test)} images, "
                         f"config asks for {config.train_count}/{config.test_count}")
    table = build_pattern_table(config.device, config.protocol)
    Xtr = encode_images(train.images[:config.train_count], table, config.threshold)
    ytr = train.labels[:config.train_count]
    Xte = encode_images(test.images[:config.test_count], table, config.threshold)
    yte = test.labels[:config.test_count]

    curve = []
    sizes = sorted(set(config.train_sizes) | {config.train_count})
    for n in sizes:
        model = logistic_fit(Xtr[:n], one_hot(ytr[:n]), config.learning_rate, config.epochs,
                             seed=config.rng_seed, mode=config.mode)
        curve.append((n, accuracy(classify(model, Xte), yte)))
    train_acc = accuracy(classify(model, Xtr), ytr)
    return MnistResult(table, curve, train_acc, curve[-1][1])
