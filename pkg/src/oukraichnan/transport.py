"""Passive scalar transport by backward stochastic characteristics.

``T_t(x) = M[T0(Phi_0(x))]`` where ``Phi`` runs the characteristics of
``dPhi = -u(Phi, s) ds + sqrt(kappa) dw`` from ``s = t`` back to ``s = 0``
and ``M`` averages over the molecular noise only.  A stationary OU field
is reversible in law, so the backward characteristics are integrated as
forward characteristics of a freshly drawn stationary field; that avoids
storing field trajectories.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .ou_field import FieldState, advance, eval_velocity, make_rng
from .spectra import sphere_area

__all__ = [
    "Observable",
    "ParticleEnsemble",
    "ScalarGrid",
    "StepSizeError",
    "GridCoverageError",
    "step_particles",
    "backward_flow",
    "feynman_kac",
    "weak_observable",
    "energy",
    "blob_autocorrelation",
    "default_dt",
    "weak_moment_samples",
]


class StepSizeError(ValueError):
    """Time step too large for the field's smallest resolved length."""


class GridCoverageError(ValueError):
    """Quadrature grid does not cover the region it must integrate over."""


@dataclass(frozen=True)
class Observable:
    """Closed-form scalar profile: initial data ``T0`` or test function ``theta``.

    ``gaussian_blob``: ``height * exp(-|x-c|^2 / (2 width^2))``.
    ``bump``: ``height * exp(1 - 1/(1 - |x-c|^2/width^2))`` inside radius ``width``.
    ``constant``: ``height`` everywhere (initial data only).
    """

    kind: str
    center: tuple = (0.0, 0.0)
    width: float = 1.0
    height: float = 1.0
    role: str = "initial"

    def __post_init__(self):
        if self.kind not in ("gaussian_blob", "bump", "constant"):
            raise ValueError(f"unknown observable kind {self.kind!r}")
        if self.role not in ("initial", "test"):
            raise ValueError("role must be 'initial' or 'test'")
        if self.kind == "constant" and self.role == "test":
            raise ValueError("a constant is not an admissible test function")
        if self.role == "test" and self.kind != "bump":
            raise ValueError("test functions must have compact support (use a bump)")
        if self.kind != "constant" and not self.width > 0:
            raise ValueError("width must be positive")
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))

    @classmethod
    def gaussian_blob(cls, center, width, height=1.0, role="initial"):
        return cls("gaussian_blob", tuple(center), float(width), float(height), role)

    @classmethod
    def bump(cls, center, radius, height=1.0, role="test"):
        return cls("bump", tuple(center), float(radius), float(height), role)

    @classmethod
    def constant(cls, c, dim=2):
        return cls("constant", (0.0,) * dim, 1.0, float(c), "initial")

    @property
    def dim(self) -> int:
        return len(self.center)

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.kind == "constant":
            return np.full(x.shape[:-1], self.height)
        r2 = np.sum((x - np.asarray(self.center)) ** 2, axis=-1)
        if self.kind == "gaussian_blob":
            return self.height * np.exp(-0.5 * r2 / self.width**2)
        s = r2 / self.width**2
        inside = s < 1.0
        return np.where(inside, self.height * np.exp(1.0 - 1.0 / (1.0 - np.where(inside, s, 0.0))), 0.0)

    @property
    def sup(self) -> float:
        return max(self.height, 0.0)

    @property
    def inf(self) -> float:
        return self.height if self.kind == "constant" else min(self.height, 0.0)

    @property
    def support_radius(self) -> float:
        if self.kind == "bump":
            return self.width
        return math.inf

    def sample(self, shape, rng: np.random.Generator) -> np.ndarray:
        """Points drawn from ``|self| / |self|_1`` by rejection from the bounding box (bump only)."""
        if self.kind != "bump":
            raise ValueError("sampling is implemented for bumps only")
        shape = (shape,) if isinstance(shape, int) else tuple(shape)
        need = int(np.prod(shape))
        c = np.asarray(self.center)
        got = []
        n_got = 0
        while n_got < need:
            batch = max(64, 2 * (need - n_got) * 2**self.dim)
            x = c + self.width * rng.uniform(-1.0, 1.0, (batch, self.dim))
            keep = rng.uniform(0.0, abs(self.height), batch) < np.abs(self(x))
            got.append(x[keep])
            n_got += int(keep.sum())
        return np.concatenate(got)[:need].reshape(shape + (self.dim,))

    def _radial_integral(self, power: int) -> float:
        d = self.dim
        if self.kind == "gaussian_blob":
            # int exp(-p r^2 / 2w^2) dx = (2 pi w^2 / p)^{d/2}
            return abs(self.height) ** power * (2.0 * math.pi * self.width**2 / power) ** (d / 2.0)
        if self.kind == "bump":
            val, _ = integrate.quad(
                lambda r: math.exp(power * (1.0 - 1.0 / (1.0 - r * r))) * r ** (d - 1),
                0.0,
                1.0,
                epsabs=1e-14,
                epsrel=1e-12,
            )
            return abs(self.height) ** power * sphere_area(d) * val * self.width**d
        raise ValueError("a constant is not integrable over the whole space")

    def l1_norm(self) -> float:
        return self._radial_integral(1)

    def l2_squared(self) -> float:
        return self._radial_integral(2)


def blob_autocorrelation(T0: Observable, z) -> np.ndarray:
    """``int T0(y) T0(y + z) dy`` for a Gaussian blob."""
    if T0.kind != "gaussian_blob":
        raise ValueError("closed-form autocorrelation needs a Gaussian blob")
    z = np.asarray(z, dtype=float)
    r2 = np.sum(z**2, axis=-1)
    return T0.l2_squared() * np.exp(-r2 / (4.0 * T0.width**2))


@dataclass(eq=False)
class ParticleEnsemble:
    """Endpoints of backward characteristics, shape ``(n_fields, n, d)``."""

    positions: np.ndarray
    time: float = 0.0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.positions = np.asarray(self.positions, dtype=float)
        if self.positions.ndim == 2:
            self.positions = self.positions[None]
        if self.positions.shape[1] < 1:
            raise ValueError("ensemble needs at least one particle")
        if not np.all(np.isfinite(self.positions)):
            raise FloatingPointError("non-finite particle coordinates")


@dataclass(eq=False)
class ScalarGrid:
    """Cell-centred rectangular grid for midpoint quadrature."""

    lower: np.ndarray
    upper: np.ndarray
    spacing: float
    values: np.ndarray | None = None
    stderr: np.ndarray | None = None

    def __post_init__(self):
        self.lower = np.asarray(self.lower, dtype=float)
        self.upper = np.asarray(self.upper, dtype=float)
        n = np.round((self.upper - self.lower) / self.spacing).astype(int)
        if np.any(n < 1):
            raise ValueError("grid box must span at least one cell")
        self.upper = self.lower + n * self.spacing

    @classmethod
    def covering(cls, center, radius: float, spacing: float) -> "ScalarGrid":
        c = np.asarray(center, dtype=float)
        n = int(math.ceil(radius / spacing))
        return cls(c - n * spacing, c + n * spacing, spacing)

    @property
    def shape(self) -> tuple:
        return tuple(np.round((self.upper - self.lower) / self.spacing).astype(int))

    @property
    def cell_volume(self) -> float:
        return self.spacing ** len(self.lower)

    def points(self) -> np.ndarray:
        axes = [
            self.lower[i] + self.spacing * (np.arange(n) + 0.5) for i, n in enumerate(self.shape)
        ]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack(mesh, axis=-1).reshape(-1, len(self.lower))

    def contains_ball(self, center, radius: float) -> bool:
        c = np.asarray(center, dtype=float)
        return bool(np.all(c - radius >= self.lower - 1e-12) and np.all(c + radius <= self.upper + 1e-12))

    def boundary_mask(self) -> np.ndarray:
        idx = np.indices(self.shape).reshape(len(self.shape), -1).T
        return np.any((idx == 0) | (idx == np.array(self.shape) - 1), axis=1)

    def write_csv(self, path) -> None:
        """Columns ``x1..xd, estimate, stderr``."""
        if self.values is None:
            raise ValueError("grid has no values to write")
        pts = self.points()
        vals = np.asarray(self.values).reshape(-1)
        errs = np.zeros_like(vals) if self.stderr is None else np.asarray(self.stderr).reshape(-1)
        d = pts.shape[1]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow([f"x{i + 1}" for i in range(d)] + ["estimate", "stderr"])
            for p, v, e in zip(pts, vals, errs):
                w.writerow([repr(float(c)) for c in p] + [repr(float(v)), repr(float(e))])


def _check_step(state: FieldState, dt: float, cfl: float) -> None:
    ms = state.modeset
    if len(ms) == 0:
        return
    rms = math.sqrt(ms.total_variance()) / state.epsilon
    ell = 1.0 / float(np.max(ms.kmag))
    if dt * rms > cfl * ell * (1 + 1e-12):
        raise StepSizeError(
            f"dt={dt:.3g} moves particles {dt * rms:.3g} per step, more than "
            f"{cfl:g} x smallest scale {ell:.3g}"
        )


def default_dt(modeset, epsilon: float, rate_fraction: float = 1.0, cfl: float = 1.0) -> float:
    """Largest step that resolves the fastest mode and satisfies the CFL guard.

    ``min(rate_fraction * eps^2 / theta_max, cfl * eps / (U k_max))`` with
    ``U`` the rms unscaled velocity.
    """
    if len(modeset) == 0:
        return math.inf
    rate = rate_fraction * epsilon**2 / float(np.max(modeset.theta))
    u = math.sqrt(modeset.total_variance())
    if u == 0:
        return rate
    return min(rate, cfl * epsilon / (u * float(np.max(modeset.kmag))))


def step_particles(
    state: FieldState,
    x: np.ndarray,
    t: float,
    dt: float,
    kappa: float,
    rng: np.random.Generator,
    cfl: float = 1.0,
    record_every: int | None = None,
):
    """Euler-Maruyama characteristics ``dX = u(X, s) ds + sqrt(kappa) dw`` over ``[0, t]``.

    The velocity is evaluated at the start of each step and the field then
    advanced by the exact OU transition.  ``x`` has shape
    ``(n_fields, P, d)`` and is updated in place.

    Returns the list of recorded positions (including the start) when
    ``record_every`` is given, else ``None``.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    if t < 0:
        raise ValueError("t must be nonnegative")
    n_steps = int(math.ceil(t / dt - 1e-9)) if t > 0 else 0
    h = t / n_steps if n_steps else 0.0
    if n_steps:
        _check_step(state, h, cfl)
    noise = math.sqrt(kappa * h)
    records = [x.copy()] if record_every else None
    for step in range(1, n_steps + 1):
        x += h * eval_velocity(state, x)
        if kappa > 0:
            x += noise * rng.standard_normal(x.shape)
        advance(state, h)
        if record_every and step % record_every == 0:
            records.append(x.copy())
    return records


def backward_flow(
    state: FieldState,
    x,
    t: float,
    kappa: float,
    dt: float,
    n_samples: int = 1,
    seed: int = 0,
    cfl: float = 1.0,
) -> ParticleEnsemble:
    """Endpoints ``Phi_0^{t}(x)`` of ``n_samples`` backward characteristics per realization.

    ``state`` supplies the (time-reversed) field and is advanced by ``t``;
    pass a freshly initialised stationary state.  ``x`` is a single point
    ``(d,)`` or a set of points ``(G, d)``; the ensemble then holds
    ``G * n_samples`` particles per realization, point-major.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    start = np.repeat(x, n_samples, axis=0)
    pos = np.broadcast_to(start, (state.n_fields,) + start.shape).copy()
    rng = make_rng(seed, 1)
    step_particles(state, pos, t, dt, kappa, rng, cfl)
    return ParticleEnsemble(pos, 0.0, {"start": x, "n_samples": n_samples, "seed": seed, "t": t})


def feynman_kac(ensemble: ParticleEnsemble, T0: Observable, n_samples: int | None = None):
    """Sample-mean estimate of ``T_t(x) = M[T0(Phi_0(x))]``.

    Particles are grouped in consecutive blocks of ``n_samples`` (default:
    all particles of a realization form one group).

    Returns
    -------
    estimate, stderr : ndarray, shape (n_fields, G)
    """
    vals = T0(ensemble.positions)
    n = n_samples or ensemble.meta.get("n_samples") or vals.shape[1]
    vals = vals.reshape(vals.shape[0], -1, n)
    est = vals.mean(axis=-1)
    if n > 1:
        se = vals.std(axis=-1, ddof=1) / math.sqrt(n)
    else:
        se = np.full(est.shape, np.nan)
    return est, se


def _theta_grid_points(theta: Observable, grid: ScalarGrid):
    if not grid.contains_ball(theta.center, theta.support_radius):
        raise GridCoverageError("quadrature grid does not cover the test-function support")
    pts = grid.points()
    w = theta(pts) * grid.cell_volume
    keep = w != 0.0
    return pts[keep], w[keep]


def weak_observable(
    state: FieldState,
    theta: Observable,
    T0: Observable,
    t: float,
    grid: ScalarGrid,
    dt: float,
    n_samples: int = 1,
    kappa: float = 0.0,
    seed: int = 0,
    cfl: float = 1.0,
):
    """``<T_t, theta>`` by midpoint quadrature of Feynman-Kac point estimates.

    Returns value and standard error per realization, shape ``(n_fields,)``.
    """
    pts, w = _theta_grid_points(theta, grid)
    if t == 0:
        val = float(np.sum(w * T0(pts)))
        return np.full(state.n_fields, val), np.zeros(state.n_fields)
    ens = backward_flow(state, pts, t, kappa, dt, n_samples, seed, cfl)
    est, se = feynman_kac(ens, T0, n_samples)
    value = est @ w
    stderr = np.sqrt(np.nan_to_num(se) ** 2 @ w**2)
    return value, stderr


def energy(
    state: FieldState,
    T0: Observable,
    t: float,
    grid: ScalarGrid,
    dt: float,
    kappa: float = 0.0,
    n_samples: int = 8,
    seed: int = 0,
    cfl: float = 1.0,
    edge_tol: float = 1e-6,
):
    """Grid estimate of ``int |T_t|^2 dx`` per realization.

    For ``kappa = 0`` every grid point carries one characteristic and
    ``T_t = T0 o Phi``.  For ``kappa > 0`` the square of the Feynman-Kac
    mean is replaced by its unbiased pair estimator
    ``sum_{i != j} T0(X_i) T0(X_j) / (n (n-1))``.

    Raises :class:`GridCoverageError` when the estimate on the grid
    boundary exceeds ``edge_tol * sup T0**2``.
    """
    if T0.kind == "constant":
        raise ValueError("a constant has infinite L2 norm")
    pts = grid.points()
    vol = grid.cell_volume
    if t == 0:
        sq = T0(pts) ** 2
        sq = np.broadcast_to(sq, (state.n_fields,) + sq.shape)
        se_pt = np.zeros_like(sq)
    else:
        n = 1 if kappa == 0 else max(2, n_samples)
        ens = backward_flow(state, pts, t, kappa, dt, n, seed, cfl)
        vals = T0(ens.positions).reshape(state.n_fields, -1, n)
        if n == 1:
            sq = vals[..., 0] ** 2
            se_pt = np.zeros_like(sq)
        else:
            s1 = vals.sum(axis=-1)
            s2 = np.sum(vals**2, axis=-1)
            sq = (s1**2 - s2) / (n * (n - 1))
            # delta-method error of the squared mean
            mean = s1 / n
            se_pt = 2.0 * np.abs(mean) * vals.std(axis=-1, ddof=1) / math.sqrt(n)
    edge = grid.boundary_mask()
    if np.any(np.abs(sq[:, edge]) > edge_tol * T0.sup**2):
        raise GridCoverageError("scalar field is not negligible on the grid boundary")
    total = sq.sum(axis=-1) * vol
    stderr = np.sqrt(np.sum(se_pt**2, axis=-1)) * vol
    return total, stderr


def _box_rule(lo: np.ndarray, hi: np.ndarray, nodes: int):
    """Tensor Gauss-Legendre nodes and weights on boxes ``[lo, hi]`` of shape ``(..., d)``."""
    z, w = np.polynomial.legendre.leggauss(nodes)
    d = lo.shape[-1]
    grid = np.stack(np.meshgrid(*([z] * d), indexing="ij"), axis=-1).reshape(-1, d)
    wgt = np.prod(np.stack(np.meshgrid(*([w] * d), indexing="ij"), axis=-1), axis=-1).reshape(-1)
    half = 0.5 * (hi - lo)[..., None, :]
    pts = 0.5 * (hi + lo)[..., None, :] + half * grid
    return pts, wgt * np.prod(half, axis=-1)


def weak_moment_samples(theta: Observable, T0: Observable, starts, ends, nodes: int = 16):
    """Unbiased samples of ``<T_t, theta>`` and ``<T_t, theta>^2`` from tracer displacements.

    ``starts``/``ends`` have shape ``(n, m, d)`` with ``m >= 2`` tracers per
    realization started from ``theta / |theta|_1``.  The displacement law
    is invariant under a common shift of the starting points, so the
    position can be integrated out:

        Z1 = int theta(x) T0(x + D_i) dx,
        Z2 = |theta|_1^2 int theta(x) theta(x+r) T0(x+D_i) T0(x+r+D_j) dx
             / int theta(x) theta(x+r) dx,   r = x_j - x_i,

    each evaluated by Gauss-Legendre quadrature over the (overlap of the)
    supports.  Returns per-realization averages over tracers and tracer
    pairs, shape ``(n,)`` each.
    """
    if theta.kind != "bump":
        raise ValueError("theta must be a bump")
    starts = np.asarray(starts, dtype=float)
    disp = np.asarray(ends, dtype=float) - starts
    n, m, d = starts.shape
    if m < 2:
        raise ValueError("need at least two tracers per realization")
    c = np.asarray(theta.center)
    rad = theta.width
    pts, wts = _box_rule(c - rad, c + rad, nodes)
    base = wts * theta(pts)  # (Q,)
    z1 = np.einsum("q,nmq->nm", base, T0(pts[None, None] + disp[:, :, None, :]))
    i, j = np.triu_indices(m, 1)
    l1sq = theta.l1_norm() ** 2
    z2 = np.empty(n)
    block = max(1, 4096 // len(i))  # caps the (block, pairs, Q, d) temporaries
    for b0 in range(0, n, block):
        sl = slice(b0, b0 + block)
        r = starts[sl, j] - starts[sl, i]  # (b, pairs, d)
        lo = np.maximum(c - rad, c - r - rad)
        hi = np.minimum(c + rad, c - r + rad)
        x, w = _box_rule(lo, hi, nodes)  # (b, pairs, Q, d)
        weight = w * theta(x) * theta(x + r[..., None, :])
        prod = T0(x + disp[sl, i, None, :]) * T0(x + r[..., None, :] + disp[sl, j, None, :])
        z2[sl] = (l1sq * np.sum(weight * prod, axis=-1) / np.sum(weight, axis=-1)).mean(axis=1)
    return z1.mean(axis=1), z2
