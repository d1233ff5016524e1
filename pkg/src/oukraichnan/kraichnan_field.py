"""White-noise (Kraichnan) velocity fields and particle advection under them.

The limiting Brownian field has covariance ``t * (2/a) Gamma_LIMIT(x - y)``.
It is synthesized from the same shell quadrature as the OU field, with the
exponent raised to ``alpha + beta`` and every weight multiplied by
``sqrt(2/a)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .ou_field import _points, make_rng
from .spectra import (
    ExponentChoice,
    ModeSet,
    SpectrumParams,
    build_modeset,
    limit_spectrum,
)

__all__ = [
    "BrownianFieldIncrement",
    "DriftCorrection",
    "limit_modeset",
    "sample_increment",
    "drift_correction",
    "advect",
    "dispersion_run",
]


def limit_modeset(params: SpectrumParams, shells: int = 32, dirs_per_shell: int = 8) -> ModeSet:
    """Mode set of the limiting Brownian field (exponent alpha+beta, variance factor 2/a)."""
    spec = limit_spectrum(params)
    ms = build_modeset(params, ExponentChoice.LIMIT, shells, dirs_per_shell)
    return ms.scaled(math.sqrt(spec.amplitude_factor))


@dataclass(frozen=True, eq=False)
class BrownianFieldIncrement:
    """One time step of the Brownian field, evaluable at arbitrary points."""

    modeset: ModeSet
    gaussians: np.ndarray  # (2, n_fields, n_modes)
    dt: float

    @property
    def n_fields(self) -> int:
        return self.gaussians.shape[1]

    def __call__(self, x) -> np.ndarray:
        ms = self.modeset
        pts, shape = _points(x, self.n_fields, ms.dim)
        out = np.empty(pts.shape)
        if len(ms) == 0:
            out[:] = 0.0
        else:
            _kernels.mode_sum(
                pts,
                ms.k,
                ms.polarization,
                ms.weight,
                self.gaussians[0],
                self.gaussians[1],
                math.sqrt(self.dt),
                out,
            )
        return out.reshape(shape + (ms.dim,))


def sample_increment(
    modeset: ModeSet, dt: float, rng: np.random.Generator, n_fields: int = 1
) -> BrownianFieldIncrement:
    if not dt > 0:
        raise ValueError("dt must be positive")
    g = rng.standard_normal((2, n_fields, len(modeset)))
    return BrownianFieldIncrement(modeset, g, float(dt))


@dataclass(frozen=True)
class DriftCorrection:
    """Ito drift ``b1_j = 1/2 sum_i d_i Gamma_ij(0)`` from the Stratonovich form."""

    b1: np.ndarray


def drift_correction(params: SpectrumParams, modeset: ModeSet | None = None) -> DriftCorrection:
    """Stratonovich-to-Ito drift of the limiting field.

    The gradient of the mode-sum covariance at the origin is
    ``-sum_m w_m^2 k_m,i p_m,i p_m,j sin(0)``; even spectra make it vanish,
    which is the case for every homogeneous field built here.  The
    compressible ``ell1 = 0`` limit with ``alpha + beta <= 3/2`` has no
    differentiable covariance at the origin and is rejected.
    """
    limit_spectrum(params)
    if modeset is None and params.ell1 > 0.0:
        modeset = limit_modeset(params, shells=16, dirs_per_shell=4)
    if modeset is None:
        # continuum covariance: even and differentiable at 0 once alpha+beta > 3/2
        return DriftCorrection(np.zeros(params.dim))
    w2 = modeset.weight**2
    origin = np.zeros(modeset.dim)
    kp = np.sum(modeset.k * modeset.polarization, axis=1)
    grad = -np.einsum("m,m,mj->j", w2 * kp, np.sin(modeset.k @ origin), modeset.polarization)
    return DriftCorrection(0.5 * grad)


def advect(
    positions: np.ndarray,
    increment: BrownianFieldIncrement,
    kappa0: float,
    dt: float,
    rng: np.random.Generator,
    drift: DriftCorrection | None = None,
) -> np.ndarray:
    """One Euler step ``X + dB(X) + b1 dt + sqrt(kappa0 dt) N``.

    ``positions`` has shape ``(n_fields, P, d)``; all particles of a
    realization share the same increment.
    """
    x = np.asarray(positions, dtype=float)
    out = x + increment(x)
    if drift is not None:
        out += drift.b1 * dt
    if kappa0 > 0:
        out += math.sqrt(kappa0 * dt) * rng.standard_normal(x.shape)
    return out


def dispersion_run(
    params: SpectrumParams,
    start: np.ndarray,
    t: float,
    dt: float,
    n_fields: int,
    seed: int,
    shells: int = 16,
    dirs_per_shell: int = 4,
    n_records: int = 10,
    chunk: int = 5000,
):
    """Advect particle groups through independent Brownian fields.

    ``start`` of shape ``(P, d)`` is replicated in every realization.

    Returns
    -------
    times : ndarray, shape (n_records + 1,)
    positions : ndarray, shape (n_records + 1, n_fields, P, d)
    """
    ms = limit_modeset(params, shells, dirs_per_shell)
    drift = drift_correction(params, ms)
    n_steps = max(n_records, int(math.ceil(t / dt - 1e-9)))
    n_steps = int(math.ceil(n_steps / n_records)) * n_records
    h = t / n_steps
    every = n_steps // n_records
    start = np.asarray(start, dtype=float)
    out = np.empty((n_records + 1, n_fields) + start.shape)
    for c0 in range(0, n_fields, chunk):
        c1 = min(n_fields, c0 + chunk)
        rng = make_rng(seed, c0 // chunk)
        x = np.broadcast_to(start, (c1 - c0,) + start.shape).copy()
        out[0, c0:c1] = x
        for step in range(1, n_steps + 1):
            inc = sample_increment(ms, h, rng, c1 - c0)
            x = advect(x, inc, params.kappa0, h, rng, drift)
            if step % every == 0:
                out[step // every, c0:c1] = x
    return np.linspace(0.0, t, n_records + 1), out

