"""Compiled mode-sum kernels.

Every field evaluation in the package funnels through these loops; they are
the only place where the cost scales as particles x modes.
"""

import numba
import numpy as np


@numba.njit(cache=True)
def mode_sum(x, k, pol, weight, xi, eta, scale, out):
    """out[r,p] = scale * sum_m w_m pol_m (xi[r,m] cos(k_m.x) + eta[r,m] sin(k_m.x))."""
    n_fields, n_points, dim = x.shape
    n_modes = k.shape[0]
    for r in range(n_fields):
        for p in range(n_points):
            for i in range(dim):
                out[r, p, i] = 0.0
            for m in range(n_modes):
                phase = 0.0
                for i in range(dim):
                    phase += k[m, i] * x[r, p, i]
                amp = weight[m] * (xi[r, m] * np.cos(phase) + eta[r, m] * np.sin(phase))
                for i in range(dim):
                    out[r, p, i] += amp * pol[m, i]
            for i in range(dim):
                out[r, p, i] *= scale
    return out


@numba.njit(cache=True)
def mode_divergence(x, k, pol, weight, xi, eta, scale, out):
    """Analytic divergence of :func:`mode_sum`."""
    n_fields, n_points, dim = x.shape
    n_modes = k.shape[0]
    for r in range(n_fields):
        for p in range(n_points):
            acc = 0.0
            for m in range(n_modes):
                phase = 0.0
                kp = 0.0
                for i in range(dim):
                    phase += k[m, i] * x[r, p, i]
                    kp += k[m, i] * pol[m, i]
                acc += weight[m] * kp * (eta[r, m] * np.cos(phase) - xi[r, m] * np.sin(phase))
            out[r, p] = scale * acc
    return out
