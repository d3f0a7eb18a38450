"""Gate-voltage waveforms that drive the device simulator."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class PulseProgram:
    """A train of rectangular gate pulses, one per discrete step.

    Each period starts with the on-phase (``step_values[k]`` for
    ``duty_ratio * period`` seconds) followed by the off-phase at
    ``baseline_voltage``.
    """

    step_values: np.ndarray
    period: float
    duty_ratio: float
    baseline_voltage: float = 0.0

    def __post_init__(self):
        values = np.asarray(self.step_values, dtype=float).ravel()
        object.__setattr__(self, "step_values", values)
        if values.size == 0:
            raise ValueError("pulse program needs at least one step")
        if not np.all(np.isfinite(values)):
            raise ValueError("step values must be finite")
        if not self.period > 0:
            raise ValueError(f"period must be positive, got {self.period}")
        if not 0 < self.duty_ratio <= 1:
            raise ValueError(f"duty ratio must lie in (0, 1], got {self.duty_ratio}")

    @property
    def step_count(self) -> int:
        return int(self.step_values.size)

    @property
    def pulse_width(self) -> float:
        return self.period * self.duty_ratio

    @property
    def interval(self) -> float:
        return self.period - self.pulse_width

    @property
    def duration(self) -> float:
        return self.step_count * self.period

    def voltage_at(self, t) -> np.ndarray:
        """Vectorised waveform lookup; times outside the program raise."""
        t = np.asarray(t, dtype=float)
        if np.any(t < 0) or np.any(t >= self.duration):
            raise ValueError("time outside program duration")
        k = np.minimum((t // self.period).astype(np.int64), self.step_count - 1)
        phase = t - k * self.period
        return np.where(phase < self.pulse_width, self.step_values[k], self.baseline_voltage)


def sample_waveform(program: PulseProgram, t: float) -> float:
    """Gate voltage of ``program`` at time ``t`` (seconds)."""
    return float(program.voltage_at(t))


@dataclass(frozen=True)
class TriangularWaveform:
    """Rectified triangle wave between 0 and ``amplitude``.

    Within one ``period`` the signal peaks at ``period/4`` and ``3*period/4``
    and touches zero at 0, ``period/2`` and ``period``, i.e. the absolute value
    of a zero-mean triangle wave of that period.

    ``steps_per_cycle`` sets the discrete-step grid used when the waveform
    is treated as a step sequence (virtual-node extraction, embeddings).
    """

    amplitude: float
    period: float
    cycles: int
    steps_per_cycle: int = 20

    def __post_init__(self):
        if self.amplitude == 0:
            raise ValueError("amplitude must be non-zero")
        if not self.period > 0:
            raise ValueError("period must be positive")
        if self.cycles < 1:
            raise ValueError("need at least one cycle")
        if self.steps_per_cycle < 1:
            raise ValueError("steps_per_cycle must be >= 1")

    @property
    def step_period(self) -> float:
        return self.period / self.steps_per_cycle

    @property
    def step_count(self) -> int:
        return self.cycles * self.steps_per_cycle

    @property
    def duration(self) -> float:
        return self.cycles * self.period

    def voltage_at(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        if np.any(t < 0) or np.any(t > self.duration):
            raise ValueError("time outside waveform duration")
        half = np.mod(t, 0.5 * self.period) / (0.5 * self.period)
        return self.amplitude * (1.0 - np.abs(2.0 * half - 1.0))

    def __call__(self, t):
        return self.voltage_at(t)

    def step_inputs(self) -> np.ndarray:
        """Waveform value at the start of every discrete step."""
        return self.voltage_at(np.arange(self.step_count) * self.step_period)


def triangular_waveform(amplitude: float, period: float, cycles: int,
                        steps_per_cycle: int = 20) -> TriangularWaveform:
    return TriangularWaveform(amplitude, period, cycles, steps_per_cycle)
