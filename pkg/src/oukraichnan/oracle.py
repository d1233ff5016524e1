"""Predictions of the limiting Kraichnan model.

The n-point motion of the limit is a diffusion in ``R^{n d}`` whose
increments over ``dt`` are jointly Gaussian with block covariance

    C_ij = [(2/a) Gamma_LIMIT(x_i - x_j) + kappa0 delta_ij I] dt,

equivalently the generator ``(kappa0/2) sum_j Lap_j + (1/a) sum_ij
Gamma(x_i - x_j) : grad_i grad_j``.  The one-point law is Gaussian with
covariance ``K_eff t`` where ``K_eff`` is the effective diffusivity.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .ou_field import make_rng
from .spectra import (
    CovarianceTable,
    ExponentChoice,
    SpectrumParams,
    _assemble,
    effective_diffusivity,
    limit_spectrum,
)
from .transport import Observable, weak_moment_samples

__all__ = [
    "NPointState",
    "PairDispersionCurve",
    "CovarianceFactorError",
    "limit_table",
    "block_covariance",
    "generator_diffuse",
    "single_dispersion_slope",
    "mean_scalar_exact",
    "mean_weak_exact",
    "weak_second_moment",
    "pair_dispersion_curve",
]

MAX_POINTS = 4
PSD_FLOOR = 1e-8
_ORACLE_STREAM = 2


class CovarianceFactorError(FloatingPointError):
    """Assembled block covariance is indefinite beyond round-off."""


@dataclass
class NPointState:
    """Configurations of ``n`` points; ``positions`` is ``(n, d)`` or batched ``(S, n, d)``."""

    positions: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        self.positions = np.asarray(self.positions, dtype=float)
        if self.positions.ndim not in (2, 3) or self.positions.shape[-2] < 1:
            raise ValueError("positions must be (n, d) or (S, n, d) with n >= 1")

    @property
    def n(self) -> int:
        return self.positions.shape[-2]

    @property
    def dim(self) -> int:
        return self.positions.shape[-1]


@dataclass
class PairDispersionCurve:
    times: np.ndarray
    mean_sq_separation: np.ndarray
    stderr: np.ndarray
    meta: dict = field(default_factory=dict)

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "value", "stderr"])
            for row in zip(self.times, self.mean_sq_separation, self.stderr):
                w.writerow([repr(float(v)) for v in row])


def limit_table(params: SpectrumParams, r_max: float | None = None) -> CovarianceTable:
    """Tabulated ``Gamma_LIMIT`` at the params' own cutoffs (``ell1 = 0`` allowed)."""
    limit_spectrum(params)
    return CovarianceTable(params, ExponentChoice.LIMIT, r_max=r_max)


def block_covariance(table: CovarianceTable, x: np.ndarray, kappa0: float, a: float) -> np.ndarray:
    """Per-unit-time covariance of the joint increment, shape ``(S, n d, n d)``."""
    x = np.asarray(x, dtype=float)
    s, n, d = x.shape
    diff = x[:, :, None, :] - x[:, None, :, :]
    rho = np.linalg.norm(diff, axis=-1)
    a_par, a_perp = table.parts(rho.reshape(-1))
    gam = _assemble(a_par.reshape(rho.shape), a_perp.reshape(rho.shape), diff)
    gam *= 2.0 / a
    gam[:, np.arange(n), np.arange(n)] += kappa0 * np.eye(d)
    return gam.transpose(0, 1, 3, 2, 4).reshape(s, n * d, n * d)


def _sqrt_psd(c: np.ndarray) -> np.ndarray:
    c = 0.5 * (c + np.swapaxes(c, -1, -2))
    lam, vec = np.linalg.eigh(c)
    floor = -PSD_FLOOR * np.maximum(1.0, lam[:, -1])
    if np.any(lam[:, 0] < floor):
        worst = float(np.min(lam[:, 0]))
        raise CovarianceFactorError(f"block covariance eigenvalue {worst:.3e} below -1e-8 floor")
    return vec * np.sqrt(np.clip(lam, 0.0, None))[:, None, :]


def generator_diffuse(
    state: NPointState,
    params: SpectrumParams,
    t: float,
    dt: float,
    n_samples: int,
    seed: int,
    table: CovarianceTable | None = None,
    times=None,
    chunk: int = 5000,
):
    """Simulate the n-point limit diffusion from ``state`` for time ``t``.

    Every sample starts from ``state.positions`` (``(n, d)``, or one
    configuration per sample when batched).  Returns the endpoint
    :class:`NPointState` with ``positions`` of shape ``(n_samples, n, d)``;
    when ``times`` is given, a list of states at those times instead.
    """
    if state.n > MAX_POINTS:
        raise ValueError(f"at most {MAX_POINTS} points supported")
    if not dt > 0:
        raise ValueError("dt must be positive")
    if table is None:
        table = limit_table(params)
    start = state.positions
    if start.ndim == 2:
        start = np.broadcast_to(start, (n_samples,) + start.shape)
    elif start.shape[0] != n_samples:
        raise ValueError("batched state must hold one configuration per sample")
    grid = [float(t)] if times is None else [float(s) for s in times]
    if any(b < a for a, b in zip(grid, grid[1:])) or grid[0] < 0:
        raise ValueError("times must be nonnegative and nondecreasing")
    n, d = state.n, state.dim
    out = np.empty((len(grid), n_samples, n, d))
    for c0 in range(0, n_samples, chunk):
        c1 = min(n_samples, c0 + chunk)
        rng = make_rng(seed, _ORACLE_STREAM, c0 // chunk)
        x = np.array(start[c0:c1], dtype=float)
        now = 0.0
        for gi, target in enumerate(grid):
            span = target - now
            steps = int(math.ceil(span / dt - 1e-9)) if span > 0 else 0
            for _ in range(steps):
                h = span / steps
                root = _sqrt_psd(block_covariance(table, x, params.kappa0, params.a))
                z = rng.standard_normal((c1 - c0, n * d))
                x += math.sqrt(h) * np.einsum("sij,sj->si", root, z).reshape(x.shape)
            now = target
            out[gi, c0:c1] = x
    states = [NPointState(p, s) for p, s in zip(out, grid)]
    return states[0] if times is None else states


def single_dispersion_slope(params: SpectrumParams) -> float:
    """``d kappa0 + (2/a) tr Gamma_LIMIT(0)``: growth rate of ``E|X_t - X_0|^2``."""
    return float(np.trace(effective_diffusivity(params)))


def _isotropic_keff(params: SpectrumParams) -> float:
    k = effective_diffusivity(params)
    diag = np.diag(k)
    if np.max(np.abs(k - np.diag(diag))) > 1e-9 * max(1.0, diag.max()) or np.ptp(diag) > 1e-9 * max(
        1.0, diag.max()
    ):
        raise ValueError("closed form needs an isotropic effective diffusivity")
    return float(diag.mean())


def mean_scalar_exact(T0: Observable, params: SpectrumParams, t: float, x) -> np.ndarray:
    """Mean scalar ``E T(t, x)`` of the limit for a Gaussian-blob ``T0``.

    The blob stays Gaussian with ``width^2 -> width^2 + K t``.
    """
    if T0.kind != "gaussian_blob":
        raise ValueError("closed-form mean scalar needs a Gaussian blob")
    k = _isotropic_keff(params)
    x = np.asarray(x, dtype=float)
    w2 = T0.width**2
    s2 = w2 + k * t
    r2 = np.sum((x - np.asarray(T0.center)) ** 2, axis=-1)
    return T0.height * (w2 / s2) ** (T0.dim / 2.0) * np.exp(-0.5 * r2 / s2)


def _bump_rule(theta: Observable, nodes: int = 64):
    """Tensor Gauss-Legendre rule over the bounding box of a bump."""
    if theta.kind != "bump":
        raise ValueError("test function must be a bump")
    z, w = np.polynomial.legendre.leggauss(nodes)
    r = theta.width
    d = theta.dim
    axes = [theta.center[i] + r * z for i in range(d)]
    pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, d)
    wts = np.prod(np.stack(np.meshgrid(*([w * r] * d), indexing="ij"), axis=-1), axis=-1).reshape(-1)
    wts = wts * theta(pts)
    return pts, wts


def mean_weak_exact(theta: Observable, T0: Observable, params: SpectrumParams, t: float) -> float:
    """``E <T_t, theta>`` of the limit, by quadrature of :func:`mean_scalar_exact`."""
    pts, wts = _bump_rule(theta)
    return float(wts @ mean_scalar_exact(T0, params, t, pts))


def weak_second_moment(
    theta: Observable,
    T0: Observable,
    params: SpectrumParams,
    t: float,
    dt: float,
    n_samples: int,
    seed: int,
    table: CovarianceTable | None = None,
    n_points: int = 4,
):
    """Monte-Carlo ``E <T_t, theta>^2`` from the n-point motion.

    ``n_points`` starting points per sample are drawn from
    ``theta / |theta|_1``; every pair contributes, and the common position
    is integrated out as in :func:`~oukraichnan.transport.weak_moment_samples`.

    Returns
    -------
    estimate, stderr : float
    """
    rng = make_rng(seed, _ORACLE_STREAM, 1 << 20)
    start = theta.sample((n_samples, n_points), rng)
    end = generator_diffuse(NPointState(start), params, t, dt, n_samples, seed, table)
    _, y = weak_moment_samples(theta, T0, start, end.positions)
    return float(y.mean()), float(y.std(ddof=1) / math.sqrt(n_samples))


def pair_dispersion_curve(
    params: SpectrumParams,
    r0,
    t_grid,
    dt: float,
    n_samples: int,
    seed: int = 0,
    x0=None,
    table: CovarianceTable | None = None,
) -> PairDispersionCurve:
    """``E|x_1 - x_2|^2`` of the two-point motion on ``t_grid``."""
    r0 = np.asarray(r0, dtype=float)
    x0 = np.zeros_like(r0) if x0 is None else np.asarray(x0, dtype=float)
    t_grid = np.asarray(t_grid, dtype=float)
    states = generator_diffuse(
        NPointState(np.stack([x0, x0 + r0])), params, float(t_grid[-1]), dt, n_samples, seed, table, t_grid
    )
    sq = np.stack([np.sum((s.positions[:, 0] - s.positions[:, 1]) ** 2, axis=-1) for s in states])
    se = sq.std(axis=1, ddof=1) / math.sqrt(n_samples)
    return PairDispersionCurve(t_grid, sq.mean(axis=1), se, {"r0": r0.tolist(), "seed": seed, "dt": dt})
