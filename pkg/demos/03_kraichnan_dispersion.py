"""Particles in the white-in-time limit field spread at the rate set by the effective diffusivity."""

import numpy as np

from oukraichnan import kraichnan_field
from oukraichnan.oracle import single_dispersion_slope
from oukraichnan.spectra import SpectrumParams

params = SpectrumParams(kappa0=0.1)
start = np.array([[0.0, 0.0], [0.5, 0.0]])
times, pos = kraichnan_field.dispersion_run(params, start, t=1.0, dt=0.01, n_fields=5000, seed=3)

single = np.mean(np.sum(pos[:, :, 0] ** 2, axis=-1), axis=1)
pair = np.mean(np.sum((pos[:, :, 0] - pos[:, :, 1]) ** 2, axis=-1), axis=1)
slope = np.polyfit(times, single, 1)[0]
print(f"fitted one-particle slope {slope:.1f}; predicted trace of K_eff {single_dispersion_slope(params):.1f}")
print("\n   t    E|X-X0|^2   E|X1-X2|^2")
for t, s, p in zip(times, single, pair):
    print(f"{t:5.2f}  {s:10.2f}  {p:11.3f}")
