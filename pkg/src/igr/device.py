"""Transmission-line model of an ion-gated (EDL) transistor.

The channel is cut into ``segment_count`` segments.  Every segment
carries a series hole resistor whose sheet density is depleted or
accumulated by the voltage on that segment's EDL capacitor, and every
segment midpoint is tied to the gate through the ionic resistance of the
electrolyte in series with the EDL capacitor::

    source --R0/2-- n0 --(R0+R1)/2-- n1 -- ... -- n_{N-1} --R_{N-1}/2-- drain
                    |                 |                |
                  R_ion             R_ion            R_ion
                    |                 |                |
                  C_EDL             C_EDL            C_EDL
                    |                 |                |
                   gate              gate             gate

Segments are equal by default; ``mesh_grading`` clusters them towards both
contacts, where the hole density can collapse in a thin pinch-off layer.

Each time step freezes the capacitor voltages, solves the (tridiagonal)
resistive network exactly and advances the capacitors with explicit Euler.

Sign conventions: terminal currents are positive when flowing *into* the
device; ``cap_voltage`` is gate-side plate minus channel node, so a positive
value removes holes from the channel.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from numba import njit

ELEMENTARY_CHARGE = 1.602176634e-19


class InvalidParameterError(ValueError):
    pass


class SingularSystemError(ArithmeticError):
    pass


class NoConvergenceError(RuntimeError):
    pass


class UnstableTimestepWarning(RuntimeWarning):
    pass


@dataclass(frozen=True)
class DeviceParams:
    """Material constants and discretisation of one channel (SI units).

    Defaults follow the multiphysics material set: 1 nm diamond channel at
    1e19 cm^-3 holes (1e12 cm^-2 sheet), 150 cm^2/Vs, 4.0 uF/cm^2 EDL,
    100 nm Li+ electrolyte at 1e22 cm^-3 and 4e-13 cm^2/Vs.

    ``timestep`` may be left as ``None``; drivers then use 1/1000 of the
    drive period.  ``hole_sheet_density_floor`` defaults to ``p0 / 1000``.
    ``mesh_grading`` a in [0, 1) places segment edges at
    ``x = L (s - a sin(2 pi s) / (2 pi))`` for uniform ``s``; the end segments
    are ``1 - a`` times the mean width (0 gives a uniform mesh).
    """

    channel_length: float = 1000e-6
    channel_width: float = 100e-6
    hole_sheet_density_p0: float = 1e16
    hole_mobility: float = 150e-4
    edl_capacitance_per_area: float = 4.0e-2
    li_density: float = 1e28
    li_mobility: float = 4e-17
    electrolyte_thickness: float = 100e-9
    segment_count: int = 50
    hole_sheet_density_floor: Optional[float] = None
    timestep: Optional[float] = None
    stability_factor: float = 0.2
    mesh_grading: float = 0.0

    def __post_init__(self):
        if self.hole_sheet_density_floor is None:
            object.__setattr__(self, "hole_sheet_density_floor",
                               self.hole_sheet_density_p0 / 1000.0)
        positive = ("channel_length", "channel_width", "hole_sheet_density_p0",
                    "hole_mobility", "edl_capacitance_per_area", "li_density",
                    "li_mobility", "electrolyte_thickness",
                    "hole_sheet_density_floor", "stability_factor")
        for name in positive:
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise InvalidParameterError(f"{name} must be a positive finite number, got {value!r}")
        if self.timestep is not None and not (np.isfinite(self.timestep) and self.timestep > 0):
            raise InvalidParameterError(f"timestep must be positive, got {self.timestep!r}")
        if int(self.segment_count) != self.segment_count or self.segment_count < 2:
            raise InvalidParameterError(f"segment_count must be an integer >= 2, got {self.segment_count!r}")
        object.__setattr__(self, "segment_count", int(self.segment_count))
        if not 0.0 <= self.mesh_grading < 1.0:
            raise InvalidParameterError(f"mesh_grading must lie in [0, 1), got {self.mesh_grading!r}")
        if self.hole_sheet_density_floor >= self.hole_sheet_density_p0:
            raise InvalidParameterError("hole_sheet_density_floor must be below hole_sheet_density_p0")

    @property
    def segment_edges(self) -> np.ndarray:
        s = np.linspace(0.0, 1.0, self.segment_count + 1)
        x = self.channel_length * (s - self.mesh_grading * np.sin(2 * np.pi * s) / (2 * np.pi))
        x[0], x[-1] = 0.0, self.channel_length
        return x

    @property
    def segment_widths(self) -> np.ndarray:
        return np.diff(self.segment_edges)

    @property
    def segment_centers(self) -> np.ndarray:
        x = self.segment_edges
        return 0.5 * (x[1:] + x[:-1])

    @property
    def segment_capacitances(self) -> np.ndarray:
        return self.edl_capacitance_per_area * self.channel_width * self.segment_widths

    @property
    def total_capacitance(self) -> float:
        return self.edl_capacitance_per_area * self.channel_width * self.channel_length

    @property
    def ionic_conductivity(self) -> float:
        return ELEMENTARY_CHARGE * self.li_density * self.li_mobility

    @property
    def ionic_resistances(self) -> np.ndarray:
        """Electrolyte resistance between the gate and each segment."""
        return self.electrolyte_thickness / (
            self.ionic_conductivity * self.channel_width * self.segment_widths)

    @property
    def ionic_time_constant(self) -> float:
        """R_ion * C_EDL of any segment (independent of the segmentation)."""
        return self.electrolyte_thickness * self.edl_capacitance_per_area / self.ionic_conductivity

    @property
    def threshold_voltage(self) -> float:
        """Capacitor voltage that fully depletes the p0 sheet density."""
        return ELEMENTARY_CHARGE * self.hole_sheet_density_p0 / self.edl_capacitance_per_area

    @property
    def channel_resistance(self) -> float:
        """Drain-source resistance of the undisturbed (p0) channel."""
        return self.channel_length / (self.channel_width * ELEMENTARY_CHARGE
                                      * self.hole_mobility * self.hole_sheet_density_p0)

    def max_stable_timestep(self) -> float:
        return self.stability_factor * self.ionic_time_constant


@dataclass
class DeviceState:
    """Capacitor voltages of the segments plus the two contact edges.

    ``contact_voltage`` holds the EDL voltage right at the source and drain
    contact edges.  Those zero-width capacitors store no charge; they only
    set the hole density at the channel ends, and relax towards
    ``V_G - V_terminal`` with the ionic time constant.
    """

    params: DeviceParams
    cap_voltage: np.ndarray
    node_potential: np.ndarray
    sim_time: float = 0.0
    contact_voltage: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.contact_voltage is None:
            self.contact_voltage = np.zeros(2)

    def copy(self) -> "DeviceState":
        return DeviceState(self.params, self.cap_voltage.copy(), self.node_potential.copy(),
                           self.sim_time, self.contact_voltage.copy())

    def hole_density(self) -> np.ndarray:
        return hole_sheet_density(self.params, self.cap_voltage)

    def edl_charge(self) -> float:
        return float(self.params.segment_capacitances @ self.cap_voltage)


@dataclass(frozen=True)
class TerminalCurrents:
    i_drain: float
    i_source: float
    i_gate: float
    x_component: float
    y_component: float


@dataclass(frozen=True)
class NetworkSolution:
    node_potential: np.ndarray
    link_current: np.ndarray    # N+1 series currents, positive source -> drain
    branch_current: np.ndarray  # N gate-branch currents, positive gate -> channel
    i_drain: float
    i_source: float
    i_gate: float

    def terminal_currents(self) -> TerminalCurrents:
        return TerminalCurrents(self.i_drain, self.i_source, self.i_gate,
                                -self.i_source, self.i_drain + self.i_source)


@dataclass
class TraceSeries:
    """Uniformly sampled device response.

    Sample ``j`` is the solution at ``times[j]`` with the gate voltage that
    is in force from ``times[j]`` onward.  ``gate_charge`` is the charge
    that entered through the gate between ``times[0]`` and ``times[j]``;
    ``edl_charge`` is the summed capacitor charge at ``times[j]``.
    """

    times: np.ndarray
    v_gate: np.ndarray
    i_drain: np.ndarray
    i_source: np.ndarray
    i_gate: np.ndarray
    x_component: np.ndarray
    y_component: np.ndarray
    gate_charge: np.ndarray
    edl_charge: np.ndarray
    sample_period: float
    samples_per_step: int
    segment_profiles: Optional[np.ndarray] = None
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return self.times.size


def build_device(params: DeviceParams) -> DeviceState:
    """Zero-bias equilibrium state (all capacitors and nodes at 0 V)."""
    if not isinstance(params, DeviceParams):
        raise InvalidParameterError("expected DeviceParams")
    n = params.segment_count
    return DeviceState(params, np.zeros(n), np.zeros(n), 0.0)


def hole_sheet_density(params: DeviceParams, cap_voltage) -> np.ndarray:
    p = params.hole_sheet_density_p0 - params.edl_capacitance_per_area * np.asarray(cap_voltage) / ELEMENTARY_CHARGE
    return np.maximum(p, params.hole_sheet_density_floor)


def segment_resistances(params: DeviceParams, cap_voltage) -> np.ndarray:
    sheet = ELEMENTARY_CHARGE * params.hole_mobility * hole_sheet_density(params, cap_voltage)
    return params.segment_widths / (params.channel_width * sheet)


# --------------------------------------------------------------------------
# numba kernels

@njit(cache=True)
def _thomas(lower, diag, upper, rhs, out, work):
    n = diag.size
    beta = diag[0]
    if not (beta != 0.0 and np.isfinite(beta)):
        return False
    out[0] = rhs[0] / beta
    for i in range(1, n):
        work[i] = upper[i - 1] / beta
        beta = diag[i] - lower[i] * work[i]
        if not (beta != 0.0 and np.isfinite(beta)):
            return False
        out[i] = (rhs[i] - lower[i] * out[i - 1]) / beta
    for i in range(n - 2, -1, -1):
        out[i] -= work[i + 1] * out[i + 1]
    return True


@njit(cache=True)
def _ladder_solve(link_g, shunt_g, shunt_emf, v_drain, phi, lower, diag, upper, rhs, work):
    """Node potentials of a ladder whose source end is grounded.

    ``link_g`` holds the N+1 series conductances, ``shunt_g``/``shunt_emf``
    describe the N shunt branches (conductance and open-circuit voltage).
    """
    n = shunt_g.size
    for i in range(n):
        diag[i] = link_g[i] + link_g[i + 1] + shunt_g[i]
        lower[i] = -link_g[i]
        upper[i] = -link_g[i + 1]
        rhs[i] = shunt_g[i] * shunt_emf[i]
    rhs[n - 1] += link_g[n] * v_drain
    return _thomas(lower, diag, upper, rhs, phi, work)


@njit(cache=True)
def _mean_density(a, b, p0, floor, cq):
    """Average of p(c) = max(floor, p0 - cq c) over the capacitor-voltage interval [a, b]."""
    lo = a if a < b else b
    hi = b if a < b else a
    c_pinch = (p0 - floor) / cq
    if hi <= c_pinch:
        return p0 - cq * 0.5 * (lo + hi)   # linear branch: midpoint is exact
    if lo >= c_pinch:
        return floor
    w_lin = c_pinch - lo
    return (w_lin * 0.5 * (p0 - cq * lo + floor) + (hi - c_pinch) * floor) / (hi - lo)


@njit(cache=True)
def _link_conductances(cap, contact, p0, floor, cq, link_geo, link_g):
    # link_geo = W q mu / (link length).  Every link carries the sheet
    # density averaged over the capacitor voltages at its two ends; the half
    # links at the contacts use the contact-edge voltages.  At steady state
    # this makes the drain current independent of the segmentation.
    n = cap.size
    link_g[0] = link_geo[0] * _mean_density(contact[0], cap[0], p0, floor, cq)
    for i in range(1, n):
        link_g[i] = link_geo[i] * _mean_density(cap[i - 1], cap[i], p0, floor, cq)
    link_g[n] = link_geo[n] * _mean_density(cap[n - 1], contact[1], p0, floor, cq)


@njit(cache=True)
def _integrate(cap, contact, v_gate, v_drain, dt, n_sub, p0, floor, cq, link_geo, g_ion, c_seg,
               relax, record_profiles, out_id, out_is, out_ig, out_qg, out_qc, out_prof, phi):
    n = cap.size
    n_total = v_gate.size
    link_g = np.empty(n + 1)
    emf = np.empty(n)
    lower = np.empty(n)
    diag = np.empty(n)
    upper = np.empty(n)
    rhs = np.empty(n)
    work = np.empty(n)
    q_gate = 0.0
    for step in range(n_total):
        vg = v_gate[step]
        _link_conductances(cap, contact, p0, floor, cq, link_geo, link_g)
        for i in range(n):
            emf[i] = vg - cap[i]
        if not _ladder_solve(link_g, g_ion, emf, v_drain, phi, lower, diag, upper, rhs, work):
            return False
        i_gate = 0.0
        if step % n_sub == 0:
            j = step // n_sub
            q_cap = 0.0
            for i in range(n):
                i_gate += g_ion[i] * (emf[i] - phi[i])
                q_cap += c_seg[i] * cap[i]
            out_id[j] = link_g[n] * (v_drain - phi[n - 1])
            out_is[j] = -link_g[0] * phi[0]
            out_ig[j] = i_gate
            out_qg[j] = q_gate
            out_qc[j] = q_cap
            if record_profiles:
                for i in range(n):
                    p = p0 - cq * cap[i]
                    out_prof[j, i] = p if p > floor else floor
            i_gate = 0.0
        for i in range(n):
            ib = g_ion[i] * (emf[i] - phi[i])
            i_gate += ib
            cap[i] += dt * ib / c_seg[i]
        contact[0] += relax * (vg - contact[0])
        contact[1] += relax * (vg - v_drain - contact[1])
        q_gate += dt * i_gate
    return True


# --------------------------------------------------------------------------

def _kernel_constants(params: DeviceParams):
    x = params.segment_edges
    c = params.segment_centers
    link_length = np.concatenate(([c[0] - x[0]], np.diff(c), [x[-1] - c[-1]]))
    link_geo = params.channel_width * ELEMENTARY_CHARGE * params.hole_mobility / link_length
    cq = params.edl_capacitance_per_area / ELEMENTARY_CHARGE
    return (params.hole_sheet_density_p0, params.hole_sheet_density_floor, cq, link_geo,
            1.0 / params.ionic_resistances, params.segment_capacitances)


def solve_ladder(series_resistance, shunt_resistance, shunt_emf, v_drain: float) -> np.ndarray:
    """Solve a generic grounded-source ladder for its N node potentials.

    ``series_resistance`` has N+1 entries (source->n0, ..., n_{N-1}->drain);
    ``shunt_resistance`` may contain ``np.inf`` for open branches.
    """
    r_link = np.asarray(series_resistance, dtype=float)
    r_shunt = np.asarray(shunt_resistance, dtype=float)
    emf = np.asarray(shunt_emf, dtype=float)
    n = r_shunt.size
    if r_link.size != n + 1 or emf.size != n:
        raise ValueError("need N+1 series resistors for N shunt branches")
    if np.any(r_link <= 0) or np.any(r_shunt <= 0):
        raise SingularSystemError("resistances must be positive")
    phi = np.empty(n)
    ok = _ladder_solve(1.0 / r_link, 1.0 / r_shunt, emf, float(v_drain), phi,
                       np.empty(n), np.empty(n), np.empty(n), np.empty(n), np.empty(n))
    if not ok:
        raise SingularSystemError("ladder matrix is singular; parameters are corrupt")
    return phi


def link_conductances(params: DeviceParams, cap_voltage, contact_voltage=(0.0, 0.0)) -> np.ndarray:
    """The N+1 series conductances (source half link, N-1 inner links, drain half link)."""
    p0, floor, cq, link_geo = _kernel_constants(params)[:4]
    g = np.empty(params.segment_count + 1)
    _link_conductances(np.asarray(cap_voltage, dtype=float), np.asarray(contact_voltage, dtype=float),
                       p0, floor, cq, link_geo, g)
    return g


def solve_network(state: DeviceState, v_gate: float, v_drain: float,
                  gate_connected: bool = True) -> NetworkSolution:
    """Solve the resistive network at frozen capacitor voltages.

    Updates ``state.node_potential`` with the solution.  With
    ``gate_connected=False`` the ionic branches are open (R_ion -> inf).
    """
    p = state.params
    n = p.segment_count
    r_link = 1.0 / link_conductances(p, state.cap_voltage, state.contact_voltage)
    r_ion = p.ionic_resistances if gate_connected else np.full(n, np.inf)
    emf = v_gate - state.cap_voltage
    phi = solve_ladder(r_link, r_ion, emf, v_drain)
    state.node_potential = phi

    padded = np.concatenate(([0.0], phi, [v_drain]))
    link_current = -np.diff(padded) / r_link
    branch_current = (emf - phi) / r_ion
    return NetworkSolution(
        node_potential=phi,
        link_current=link_current,
        branch_current=branch_current,
        i_drain=float(-link_current[-1]),
        i_source=float(link_current[0]),
        i_gate=float(branch_current.sum()),
    )


def _check_timestep(params: DeviceParams, dt: float):
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    limit = params.max_stable_timestep()
    if dt > limit:
        warnings.warn(f"dt={dt:.3g}s exceeds {params.stability_factor:g} x R_ion*C "
                      f"({limit:.3g}s); explicit update may be unstable",
                      UnstableTimestepWarning, stacklevel=3)


def step(state: DeviceState, v_gate: float, v_drain: float, dt: float) -> TerminalCurrents:
    """Advance ``state`` by one explicit step and return the currents at its start."""
    _check_timestep(state.params, dt)
    sol = solve_network(state, v_gate, v_drain)
    params = state.params
    state.cap_voltage = state.cap_voltage + dt * sol.branch_current / params.segment_capacitances
    relax = dt / params.ionic_time_constant
    state.contact_voltage = state.contact_voltage + relax * (
        np.array([v_gate, v_gate - v_drain]) - state.contact_voltage)
    state.sim_time += dt
    return sol.terminal_currents()


def run_trace(state: DeviceState, program, v_drain: float, samples_per_step: int = 40,
              record_profiles: bool = False, timestep: Optional[float] = None) -> TraceSeries:
    """Integrate ``state`` through a whole gate program, sampling uniformly.

    ``program`` is anything with ``step_count``, ``voltage_at`` and either
    ``period`` (pulse programs) or ``step_period`` (continuous waveforms).
    The integration timestep defaults to ``params.timestep`` or, if unset,
    1/1000 of the step period, rounded so that every sample interval holds
    a whole number of substeps.
    """
    if samples_per_step < 10:
        raise ValueError("samples_per_step must be >= 10 to resolve virtual nodes")
    params = state.params
    step_period = getattr(program, "step_period", None) or program.period
    sample_period = step_period / samples_per_step
    dt_target = timestep or params.timestep or step_period / 1000.0
    n_sub = max(1, int(round(sample_period / dt_target)))
    dt = sample_period / n_sub
    _check_timestep(params, dt)

    n_samples = program.step_count * samples_per_step
    n_total = n_samples * n_sub
    sub_times = np.arange(n_total) * dt
    # guard against the last substep landing on the duration by roundoff
    sub_times = np.minimum(sub_times, np.nextafter(program.duration, 0.0))
    v_gate = np.asarray(program.voltage_at(sub_times), dtype=float)

    n = params.segment_count
    i_d = np.empty(n_samples)
    i_s = np.empty(n_samples)
    i_g = np.empty(n_samples)
    q_g = np.empty(n_samples)
    q_c = np.empty(n_samples)
    prof = np.empty((n_samples, n)) if record_profiles else np.empty((1, 1))
    cap = state.cap_voltage.astype(float).copy()
    contact = state.contact_voltage.astype(float).copy()
    phi = np.empty(n)
    ok = _integrate(cap, contact, v_gate, float(v_drain), dt, n_sub, *_kernel_constants(params),
                    dt / params.ionic_time_constant, record_profiles, i_d, i_s, i_g, q_g, q_c, prof, phi)
    if not ok:
        raise SingularSystemError("ladder matrix became singular during integration")
    state.cap_voltage = cap
    state.contact_voltage = contact
    state.node_potential = phi
    t0 = state.sim_time
    state.sim_time = t0 + n_total * dt

    return TraceSeries(
        times=t0 + np.arange(n_samples) * sample_period,
        v_gate=v_gate[::n_sub].copy(),
        i_drain=i_d,
        i_source=i_s,
        i_gate=i_g,
        x_component=-i_s,
        y_component=i_d + i_s,
        gate_charge=q_g,
        edl_charge=q_c,
        sample_period=sample_period,
        samples_per_step=samples_per_step,
        segment_profiles=prof if record_profiles else None,
        meta={"dt": dt, "substeps_per_sample": n_sub, "v_drain": float(v_drain),
              "channel_length": params.channel_length},
    )


def steady_state(state: DeviceState, v_gate: float, v_drain: float, tol: float = 1e-9,
                 damping: float = 0.05, max_iter: int = 20000, return_iterations: bool = False):
    """Relax the capacitors to the DC operating point (no ionic current).

    Damped fixed point ``V_cap <- V_cap + damping * (v_gate - phi - V_cap)``,
    which is explicit Euler in pseudo-time with step ``damping * R_ion C``.
    Converged when every branch drives less than ``tol`` times
    max(|v_drain|, |v_gate|, 1 mV) across its ionic resistance.  Near
    pinch-off the channel potential reacts steeply to the capacitor
    voltage, so damping much above 0.1 can oscillate.
    Returns a new state (and the iteration count if requested); the input
    is left untouched.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    if not 0 < damping <= 1:
        raise ValueError("damping must lie in (0, 1]")
    params = state.params
    out = state.copy()
    out.contact_voltage = np.array([v_gate, v_gate - v_drain], dtype=float)
    scale = max(abs(v_drain), abs(v_gate), 1e-3)
    r_ion = params.ionic_resistances
    for iteration in range(1, max_iter + 1):
        sol = solve_network(out, v_gate, v_drain)
        if np.max(np.abs(sol.branch_current * r_ion)) < tol * scale:
            return (out, iteration) if return_iterations else out
        out.cap_voltage = out.cap_voltage + damping * (v_gate - sol.node_potential - out.cap_voltage)
    raise NoConvergenceError(
        f"steady state not reached after {max_iter} iterations; retry with smaller damping")


def with_length(params: DeviceParams, length: float) -> DeviceParams:
    return replace(params, channel_length=length)


def write_trace_csv(trace: TraceSeries, path) -> None:
    """Write a trace as CSV (9 significant digits)."""
    cols = [trace.times, trace.i_drain, trace.i_gate, trace.x_component, trace.y_component]
    header = ["t_s", "i_drain_A", "i_gate_A", "x_A", "y_A"]
    if trace.segment_profiles is not None:
        cols.extend(trace.segment_profiles.T)
        header.extend(f"p_seg_{i}" for i in range(trace.segment_profiles.shape[1]))
    np.savetxt(path, np.column_stack(cols), delimiter=",", fmt="%.9g",
               header=",".join(header), comments="")


# --------------------------------------------------------------------------
# response diagnostics

def exponential_time_constant(times, values) -> float:
    """Least-squares ``tau`` of ``a + b * exp(-(t - t0) / tau)`` over the samples."""
    from scipy.optimize import curve_fit

    t = np.asarray(times, dtype=float) - times[0]
    y = np.asarray(values, dtype=float)
    span = t[-1] if t[-1] > 0 else 1.0
    scale = np.abs(y).max() or 1.0

    def model(tt, a, b, tau):
        return a + b * np.exp(-tt / tau)

    guess = (y[-1] / scale, (y[0] - y[-1]) / scale, span / 5)
    popt, _ = curve_fit(model, t, y / scale, p0=guess, bounds=([-np.inf, -np.inf, span * 1e-4], np.inf),
                        maxfev=20000)
    return float(popt[2])


def single_pulse_relaxation(params: DeviceParams = DeviceParams(), amplitude: float = 0.5,
                            width: float = 0.5, rest: float = 1.0, v_drain: float = -0.5,
                            samples: int = 500):
    """Decay constant of i_drain during one gate pulse and recovery constant after it.

    Returns ``(tau_decay, tau_recovery, trace)``.  The pulse starts from the
    V_G = 0 steady state and is followed by ``rest`` seconds at 0 V.
    """
    from .waveforms import PulseProgram

    state = steady_state(build_device(params), 0.0, v_drain)
    period = width + rest
    program = PulseProgram([amplitude], period, width / period, 0.0)
    trace = run_trace(state, program, v_drain, samples_per_step=samples,
                      timestep=min(params.max_stable_timestep(), width / 1000))
    on = int(round(width / trace.sample_period))
    tau_decay = exponential_time_constant(trace.times[1:on], trace.i_drain[1:on])
    tau_recovery = exponential_time_constant(trace.times[on + 1:], trace.i_drain[on + 1:])
    return tau_decay, tau_recovery, trace


def spike_ratio(params: DeviceParams = DeviceParams(), amplitude: float = 0.5,
                hold: float = 0.2, v_drain: float = -0.5, samples: int = 200) -> float:
    """Peak |y_component| after a rising gate edge over the steady |x_component| before it."""
    from .waveforms import PulseProgram

    state = steady_state(build_device(params), 0.0, v_drain)
    program = PulseProgram([0.0, amplitude], hold, 1.0, 0.0)
    trace = run_trace(state, program, v_drain, samples_per_step=samples,
                      timestep=min(params.max_stable_timestep(), hold / 2000))
    before = abs(trace.x_component[samples - 1])
    return float(np.abs(trace.y_component[samples:]).max() / before)
