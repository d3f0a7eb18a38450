"""Single-channel transients: a lone gate pulse, then the spike ratio versus length.

Run with ``python notebooks/01_device_transients.py``.
"""

import numpy as np

from igr.device import DeviceParams, build_device, run_trace, single_pulse_relaxation, spike_ratio, with_length
from igr.waveforms import PulseProgram

params = DeviceParams()
print(f"ionic time constant  {params.ionic_time_constant * 1e3:.1f} ms")
print(f"threshold voltage    {params.threshold_voltage * 1e3:.1f} mV")

# one 0.5 V pulse of 37.5 ms followed by rest
trace = run_trace(build_device(params), PulseProgram(np.array([0.5, 0.0, 0.0]), 50e-3, 0.75),
                  -0.5, samples_per_step=20)
for t, i in zip(trace.times[::5], trace.i_drain[::5]):
    print(f"t = {t * 1e3:6.1f} ms   i_drain = {i * 1e9:9.3f} nA")

tau_decay, tau_recovery, _ = single_pulse_relaxation(params)
print(f"decay {tau_decay * 1e3:.0f} ms, recovery {tau_recovery * 1e3:.0f} ms")

for L in (20, 100, 200, 700):
    print(f"L = {L:4d} um  spike ratio {spike_ratio(with_length(params, L * 1e-6)):.3g}")
