"""Lyapunov spectra: reference maps first, then the reservoir under triangular drive."""

import numpy as np

from igr.lyapunov import henon_orbit, logistic_orbit, spectrum
from igr.tasks import LyapunovTaskConfig, reservoir_trajectory

print("logistic r=4 ", spectrum(logistic_orbit(3000)[:, None]).exponents, " expect ln 2 =", np.log(2))
print("Henon        ", spectrum(henon_orbit(3000)).exponents, " expect 0.419, -1.62")

traj, states = reservoir_trajectory(LyapunovTaskConfig())
res = spectrum(traj)
print(f"reservoir {traj.shape[1]}-D: lambda_max {res.max_exponent:.4f}, "
      f"min {res.exponents[-1]:.1f}, {res.iterations} reference points")
print("five largest:", np.round(res.exponents[:5], 4))
