"""Stationary Ornstein-Uhlenbeck velocity fields as finite mode sums.

A field realization is

    V(t, x) = sum_m w_m p_m (xi_m(t) cos(k_m.x) + eta_m(t) sin(k_m.x))

where every ``xi_m``, ``eta_m`` is an independent unit-variance OU process
with rate ``theta_m = a |k_m|**(2 beta)``.  The scaled field is
``u(t, x) = V(t / eps**2, x) / eps``; a :class:`FieldState` stores the
mode amplitudes of a batch of independent realizations and advances them
with the exact OU transition in scaled time.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .spectra import ExponentChoice, ModeSet, SpectrumParams, build_modeset

__all__ = [
    "FieldState",
    "FieldSnapshot",
    "make_rng",
    "init_stationary",
    "transition_coefficient",
    "advance",
    "snapshot",
    "eval_velocity",
    "eval_divergence",
    "structure_function",
    "dump_snapshot",
    "load_snapshot",
]

MAGIC = b"OUF1"


def make_rng(seed, *spawn_key: int) -> np.random.Generator:
    """Counter-based Philox generator keyed by ``seed`` and an optional spawn key."""
    ss = np.random.SeedSequence(seed, spawn_key=tuple(int(k) for k in spawn_key))
    return np.random.Generator(np.random.Philox(ss))


@dataclass(eq=False)
class FieldState:
    """Mode amplitudes of ``n_fields`` independent realizations sharing one mode set."""

    modeset: ModeSet
    xi: np.ndarray
    eta: np.ndarray
    epsilon: float = 1.0
    time: float = 0.0
    rng: np.random.Generator = field(default_factory=lambda: make_rng(0))

    @property
    def n_fields(self) -> int:
        return self.xi.shape[0]

    @property
    def dim(self) -> int:
        return self.modeset.dim


@dataclass(frozen=True, eq=False)
class FieldSnapshot:
    """Read-only copy of a field state; evaluable but not advanceable."""

    modeset: ModeSet
    xi: np.ndarray
    eta: np.ndarray
    epsilon: float = 1.0
    time: float = 0.0

    def __post_init__(self):
        for name in ("xi", "eta"):
            arr = np.array(getattr(self, name), dtype=float, ndmin=2)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n_fields(self) -> int:
        return self.xi.shape[0]

    @property
    def dim(self) -> int:
        return self.modeset.dim


def init_stationary(
    modeset: ModeSet,
    epsilon: float = 1.0,
    seed: int = 0,
    n_fields: int = 1,
    rng: np.random.Generator | None = None,
) -> FieldState:
    """Draw the stationary amplitudes ``xi, eta ~ N(0, 1)`` i.i.d."""
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    if rng is None:
        rng = make_rng(seed)
    z = rng.standard_normal((2, n_fields, len(modeset)))
    return FieldState(modeset, z[0], z[1], float(epsilon), 0.0, rng)


def transition_coefficient(theta, dt: float, epsilon: float = 1.0):
    """Exact OU autocorrelation ``exp(-theta dt / eps**2)`` over a step ``dt``."""
    return np.exp(-np.asarray(theta) * dt / epsilon**2)


def advance(state: FieldState, dt: float) -> FieldState:
    """Advance every mode by the exact OU transition over scaled time ``dt`` (in place)."""
    if dt < 0:
        raise ValueError("dt must be nonnegative")
    if dt == 0:
        return state
    x = state.modeset.theta * (dt / state.epsilon**2)
    rho = np.exp(-x)
    sig = np.sqrt(-np.expm1(-2.0 * x))
    z = state.rng.standard_normal((2,) + state.xi.shape)
    state.xi *= rho
    state.xi += sig * z[0]
    state.eta *= rho
    state.eta += sig * z[1]
    state.time += dt
    return state


def snapshot(state: FieldState) -> FieldSnapshot:
    return FieldSnapshot(state.modeset, state.xi.copy(), state.eta.copy(), state.epsilon, state.time)


def _points(x, n_fields: int, dim: int):
    """Broadcast positions to ``(n_fields, P, d)``; returns the array and the output shape."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != dim:
        raise ValueError(f"positions must have trailing dimension {dim}")
    if x.ndim == 1:
        pts = np.broadcast_to(x, (n_fields, 1, dim))
        shape = (n_fields,)
    elif x.ndim == 2:
        pts = np.broadcast_to(x, (n_fields,) + x.shape)
        shape = (n_fields, x.shape[0])
    elif x.ndim == 3 and x.shape[0] == n_fields:
        pts = x
        shape = x.shape[:2]
    else:
        raise ValueError("positions must be (d,), (P, d) or (n_fields, P, d)")
    return np.ascontiguousarray(pts), shape


def eval_velocity(state, x) -> np.ndarray:
    """Scaled velocity ``V(t/eps^2, x) / eps`` of every realization.

    ``x`` of shape ``(d,)`` or ``(P, d)`` is shared by all realizations;
    ``(n_fields, P, d)`` gives per-realization points.  The result has
    shape ``(n_fields, ..., d)``.
    """
    ms = state.modeset
    pts, shape = _points(x, state.n_fields, ms.dim)
    out = np.empty(pts.shape)
    if len(ms) == 0:
        out[:] = 0.0
    else:
        _kernels.mode_sum(
            pts, ms.k, ms.polarization, ms.weight, state.xi, state.eta, 1.0 / state.epsilon, out
        )
    return out.reshape(shape + (ms.dim,))


def eval_divergence(state, x) -> np.ndarray:
    """Exact divergence of the scaled velocity, shape ``(n_fields, ...)``."""
    ms = state.modeset
    pts, shape = _points(x, state.n_fields, ms.dim)
    out = np.empty(pts.shape[:2])
    if len(ms) == 0:
        out[:] = 0.0
    else:
        _kernels.mode_divergence(
            pts, ms.k, ms.polarization, ms.weight, state.xi, state.eta, 1.0 / state.epsilon, out
        )
    return out.reshape(shape)


def structure_function(
    params: SpectrumParams,
    r,
    tau: float = 0.0,
    n_samples: int = 10_000,
    shells: int = 32,
    dirs_per_shell: int = 8,
    seed: int = 0,
    x0=None,
    modeset: ModeSet | None = None,
):
    """Monte-Carlo two-time structure function of the unscaled field.

    Estimates ``E[(V(t,x+r)-V(t,x)) (V(t+tau,x+r)-V(t+tau,x))^T]`` over
    ``n_samples`` independent realizations.

    Returns
    -------
    estimate, stderr : ndarray, shape (d, d)
    """
    if n_samples < 2:
        raise ValueError("need at least two samples")
    if modeset is None:
        modeset = build_modeset(params, ExponentChoice.BASE, shells, dirs_per_shell)
    d = modeset.dim
    x0 = np.zeros(d) if x0 is None else np.asarray(x0, dtype=float)
    pts = np.stack([x0, x0 + np.asarray(r, dtype=float)])
    state = init_stationary(modeset, 1.0, seed, n_fields=n_samples)
    v0 = eval_velocity(state, pts)
    advance(state, tau)
    v1 = eval_velocity(state, pts)
    dv0 = v0[:, 1] - v0[:, 0]
    dv1 = v1[:, 1] - v1[:, 0]
    prod = dv0[:, :, None] * dv1[:, None, :]
    est = prod.mean(axis=0)
    se = prod.std(axis=0, ddof=1) / np.sqrt(n_samples)
    return est, se


def dump_snapshot(state, path, index: int = 0) -> None:
    """Write one realization as little-endian binary.

    Layout: ``b"OUF1"``, uint32 dim, uint32 mode count, then one record per
    mode of float64 ``k[d], polarization[d], weight, theta, xi, eta``.
    """
    ms = state.modeset
    rec = np.column_stack(
        [ms.k, ms.polarization, ms.weight, ms.theta, state.xi[index], state.eta[index]]
    )
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", ms.dim, len(ms)))
        fh.write(rec.astype("<f8").tobytes())


def load_snapshot(path, epsilon: float = 1.0) -> FieldSnapshot:
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:4] != MAGIC:
        raise ValueError(f"{path}: not an OUF1 snapshot")
    dim, n = struct.unpack("<II", data[4:12])
    rec = np.frombuffer(data[12:], dtype="<f8").reshape(n, 2 * dim + 4)
    ms = ModeSet(
        k=rec[:, :dim],
        polarization=rec[:, dim : 2 * dim],
        weight=rec[:, 2 * dim],
        theta=rec[:, 2 * dim + 1],
        dim=dim,
    )
    return FieldSnapshot(ms, rec[None, :, 2 * dim + 2], rec[None, :, 2 * dim + 3], epsilon)
