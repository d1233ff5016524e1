"""Closed-form and Monte-Carlo predictions of the limiting Kraichnan model."""

import numpy as np

from oukraichnan import oracle
from oukraichnan.spectra import SpectrumParams
from oukraichnan.transport import Observable

params = SpectrumParams(kappa0=0.1, ell1=0.0)
T0 = Observable.gaussian_blob((0.0, 0.0), 1.0)
theta = Observable.bump((0.0, 0.0), 2.0)

print(f"one-particle dispersion slope {oracle.single_dispersion_slope(params):.2f}")
for t in (0.0, 0.01, 0.1):
    print(f"E <T_t, theta> at t={t}: {oracle.mean_weak_exact(theta, T0, params, t):.5f}")

table = oracle.limit_table(params)
curve = oracle.pair_dispersion_curve(params, (0.5, 0.0), np.linspace(0, 0.5, 6), 0.01, 4000, seed=7, table=table)
print("\npair separation from r0 = 0.5:")
for t, m, s in zip(curve.times, curve.mean_sq_separation, curve.stderr):
    print(f"  t={t:.1f}  E|r|^2 = {m:8.3f} +- {s:.3f}")

m2, se = oracle.weak_second_moment(theta, T0, params, 0.1, 0.01, 2000, seed=8, table=table)
m1 = oracle.mean_weak_exact(theta, T0, params, 0.1)
print(f"\nvariance of <T_t, theta> at t=0.1: {m2 - m1**2:.5f} (second moment {m2:.5f} +- {se:.5f})")
