"""Power spectra, isotropic covariance tensors and quadrature mode sets.

The velocity spectrum is a power law restricted to the band
``(1/ell0, 1/ell1)``::

    E(gamma, k) = e0 * |k|**(1 - 2*gamma)   inside the band, 0 outside

and the spectral tensor is ``E(gamma, k) |k|**(1-d) P(k_hat)`` with the
polarization projector

    P(k_hat) = s (I - k_hat k_hat) / (d - 1) + (1 - s) k_hat k_hat,

``s`` being the solenoidal fraction.  ``trace P = 1`` so the trace of the
one-point covariance is the radial integral of the spectrum.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import integrate, interpolate, special

__all__ = [
    "SpectrumParams",
    "ExponentChoice",
    "ModeSet",
    "LimitSpectrum",
    "QuadratureError",
    "IllPosedLimitError",
    "spectral_density",
    "radial_density",
    "shell_mass",
    "build_modeset",
    "covariance",
    "isotropic_parts",
    "CovarianceTable",
    "limit_spectrum",
    "effective_diffusivity",
    "sphere_area",
]

GOLDEN = 0.5 * (math.sqrt(5.0) - 1.0)


class QuadratureError(RuntimeError):
    """Adaptive quadrature failed to reach the requested tolerance."""


class IllPosedLimitError(ValueError):
    """The compressible limit with ell1 = 0 requires alpha + beta > 3/2."""


@dataclass(frozen=True)
class SpectrumParams:
    """Model constants of the OU velocity field and its white-noise limit."""

    alpha: float = 4.0 / 3.0
    beta: float = 1.0 / 3.0
    a: float = 1.0
    ell0: float = 20.0
    ell1: float = 0.05
    dim: int = 2
    e0: float = 1.0
    kappa: float = 0.0
    kappa0: float = 0.0
    solenoidal_fraction: float = 1.0

    def __post_init__(self):
        if not 1.0 < self.alpha < 2.0:
            raise ValueError(f"alpha must lie in (1, 2), got {self.alpha}")
        if not self.beta > 0.0:
            raise ValueError(f"beta must be positive, got {self.beta}")
        if not self.a > 0.0:
            raise ValueError(f"a must be positive, got {self.a}")
        if not (0.0 < self.ell0 < math.inf):
            raise ValueError(f"ell0 must be finite and positive, got {self.ell0}")
        if not 0.0 <= self.ell1 < self.ell0:
            raise ValueError(f"need 0 <= ell1 < ell0, got ell1={self.ell1}")
        if int(self.dim) != self.dim or self.dim < 2:
            raise ValueError(f"dim must be an integer >= 2, got {self.dim}")
        if self.e0 < 0.0:
            raise ValueError("e0 must be nonnegative")
        if self.kappa < 0.0 or self.kappa0 < 0.0:
            raise ValueError("diffusivities must be nonnegative")
        if not 0.0 <= self.solenoidal_fraction <= 1.0:
            raise ValueError("solenoidal_fraction must lie in [0, 1]")

    @property
    def k_min(self) -> float:
        return 1.0 / self.ell0

    @property
    def k_max(self) -> float:
        return math.inf if self.ell1 == 0.0 else 1.0 / self.ell1

    @property
    def solenoidal(self) -> bool:
        return self.solenoidal_fraction == 1.0

    def with_(self, **changes) -> "SpectrumParams":
        return replace(self, **changes)


class ExponentChoice(enum.Enum):
    """Which power-law exponent of the spectrum to use.

    ``BASE`` is the OU field itself, ``LIMIT`` the white-noise limit field
    (exponent alpha + beta) and ``INTEGRATED`` the time-integrated field
    (exponent alpha + 2 beta).
    """

    BASE = "base"
    LIMIT = "limit"
    INTEGRATED = "integrated"

    def exponent(self, params: SpectrumParams) -> float:
        if self is ExponentChoice.BASE:
            return params.alpha
        if self is ExponentChoice.LIMIT:
            return params.alpha + params.beta
        return params.alpha + 2.0 * params.beta


def sphere_area(dim: int) -> float:
    """Surface area of the unit sphere in ``R^dim``."""
    return 2.0 * math.pi ** (dim / 2.0) / math.gamma(dim / 2.0)


def _gamma_of(params: SpectrumParams, choice) -> float:
    if isinstance(choice, ExponentChoice):
        return choice.exponent(params)
    return float(choice)


def radial_density(params: SpectrumParams, choice, kmag):
    """``E(gamma, |k|)`` as a function of the wavenumber magnitude."""
    gamma = _gamma_of(params, choice)
    kmag = np.asarray(kmag, dtype=float)
    inside = (kmag > params.k_min) & (kmag < params.k_max)
    safe = np.where(inside, kmag, 1.0)
    return np.where(inside, params.e0 * safe ** (1.0 - 2.0 * gamma), 0.0)


def spectral_density(params: SpectrumParams, choice, k):
    """Power spectrum evaluated at wavevector(s) ``k`` of shape ``(..., d)``.

    A scalar ``k`` is taken as a wavenumber magnitude.
    """
    k = np.asarray(k, dtype=float)
    kmag = np.abs(k) if k.ndim == 0 else np.linalg.norm(k, axis=-1)
    out = radial_density(params, choice, kmag)
    return float(out) if out.ndim == 0 else out


def _power_integral(p: float, lo, hi):
    """Integral of ``k**p`` over ``[lo, hi]`` (``hi`` may be infinite)."""
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    if p == -1.0:
        return np.log(hi / lo)
    q = p + 1.0
    if np.any(np.isinf(hi)):
        if q >= 0.0:
            raise ValueError("power-law integral diverges at large wavenumber")
        hi_term = np.where(np.isinf(hi), 0.0, np.abs(hi) ** q)
    else:
        hi_term = hi**q
    return (hi_term - lo**q) / q


def shell_mass(params: SpectrumParams, choice, k_lo, k_hi):
    """Exact integral of ``E(gamma,k)|k|^(1-d)`` over the annulus ``k_lo<|k|<k_hi``."""
    gamma = _gamma_of(params, choice)
    lo = np.maximum(k_lo, params.k_min)
    hi = np.minimum(k_hi, params.k_max)
    mass = params.e0 * sphere_area(params.dim) * _power_integral(1.0 - 2.0 * gamma, lo, hi)
    return np.where(hi > lo, mass, 0.0)


@dataclass(frozen=True, eq=False)
class ModeSet:
    """Discrete spectral representation shared by all field synthesizers.

    Each row is one (wavevector, polarization) pair; the associated random
    amplitudes multiply ``cos(k.x)`` and ``sin(k.x)``.
    """

    k: np.ndarray
    polarization: np.ndarray
    weight: np.ndarray
    theta: np.ndarray
    dim: int
    exponent: float = float("nan")
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in ("k", "polarization", "weight", "theta"):
            arr = np.ascontiguousarray(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        m = self.weight.shape[0]
        if self.k.shape != (m, self.dim) or self.polarization.shape != (m, self.dim):
            raise ValueError("inconsistent mode array shapes")
        if self.theta.shape != (m,):
            raise ValueError("theta must have one entry per mode")

    def __len__(self) -> int:
        return self.weight.shape[0]

    @property
    def kmag(self) -> np.ndarray:
        return np.linalg.norm(self.k, axis=1)

    def total_variance(self) -> float:
        """Sum of squared weights, i.e. the trace of the one-point covariance."""
        return float(np.sum(self.weight**2))

    def scaled(self, factor: float) -> "ModeSet":
        """Copy with every weight multiplied by ``factor``."""
        return replace(self, weight=self.weight * factor, meta=dict(self.meta))

    def covariance(self, r, tau: float = 0.0) -> np.ndarray:
        """Mode-sum two-time covariance ``E[V(t,x+r) V(t+tau,x)^T]``.

        ``r`` may carry leading batch axes; ``tau`` is measured in unscaled
        time so each mode decorrelates as ``exp(-theta |tau|)``.
        """
        r = np.asarray(r, dtype=float)
        c = np.cos(r @ self.k.T) * (self.weight**2 * np.exp(-self.theta * abs(tau)))
        return np.einsum("...m,mi,mj->...ij", c, self.polarization, self.polarization)

    def structure_function(self, r, tau: float = 0.0) -> np.ndarray:
        """Mode-sum ``E[(V(t,x+r)-V(t,x)) (V(s,x+r)-V(s,x))^T]`` with ``s = t+tau``."""
        r = np.asarray(r, dtype=float)
        c = (2.0 - 2.0 * np.cos(r @ self.k.T)) * (
            self.weight**2 * np.exp(-self.theta * abs(tau))
        )
        return np.einsum("...m,mi,mj->...ij", c, self.polarization, self.polarization)


def _directions(dim: int, n: int, shell: int) -> np.ndarray:
    """Equidistributed unit vectors for one shell, rotated from shell to shell."""
    offset = (shell * GOLDEN) % 1.0
    if dim == 2:
        # half circle suffices: each mode carries both k and -k
        phi = np.pi * (np.arange(n) + offset) / n
        return np.stack([np.cos(phi), np.sin(phi)], axis=1)
    if dim == 3:
        i = np.arange(n) + 0.5
        z = 1.0 - 2.0 * i / n
        rad = np.sqrt(1.0 - z * z)
        phi = np.pi * (3.0 - math.sqrt(5.0)) * i + 2.0 * np.pi * offset
        pts = np.stack([rad * np.cos(phi), rad * np.sin(phi), z], axis=1)
        tilt = np.arccos(1.0 - 2.0 * ((shell * GOLDEN * GOLDEN) % 1.0))
        ct, st = math.cos(tilt), math.sin(tilt)
        rot = np.array([[1.0, 0.0, 0.0], [0.0, ct, -st], [0.0, st, ct]])
        return pts @ rot.T
    rng = np.random.default_rng([dim, n, shell])
    pts = rng.standard_normal((n, dim))
    return pts / np.linalg.norm(pts, axis=1, keepdims=True)


def _transverse_basis(khat: np.ndarray) -> np.ndarray:
    """Orthonormal basis of the plane orthogonal to each row of ``khat``.

    Returns an array of shape ``(n, d-1, d)``.
    """
    n, d = khat.shape
    if d == 2:
        return np.stack([-khat[:, 1], khat[:, 0]], axis=1)[:, None, :]
    out = np.empty((n, d - 1, d))
    for j in range(n):
        # first column is +-khat, the remaining columns span its complement
        q, _ = np.linalg.qr(np.column_stack([khat[j], np.eye(d)]))
        out[j] = q[:, 1:d].T
    return out


def build_modeset(
    params: SpectrumParams,
    choice: ExponentChoice = ExponentChoice.BASE,
    shells: int = 32,
    dirs_per_shell: int = 8,
) -> ModeSet:
    """Quadrature of the spectral measure by log-spaced shells.

    Each shell's mass is integrated in closed form and split evenly among
    ``dirs_per_shell`` directions and, per direction, between transverse
    and longitudinal polarizations according to the solenoidal fraction.
    All modes of a shell sit at the geometric shell centre and share the
    OU rate ``a |k_c|**(2 beta)``.
    """
    dim = params.dim
    min_dirs = 2 if dim == 2 else 4
    if shells < 1:
        raise ValueError("need at least one shell")
    if dirs_per_shell < min_dirs:
        raise ValueError(f"need at least {min_dirs} directions per shell in d={dim}")
    if params.ell1 == 0.0:
        raise ValueError(
            "ell1 = 0 leaves an unbounded wavenumber range; use a finite ell1 schedule"
        )
    edges = np.geomspace(params.k_min, params.k_max, shells + 1)
    centres = np.sqrt(edges[:-1] * edges[1:])
    masses = shell_mass(params, choice, edges[:-1], edges[1:])
    s = params.solenoidal_fraction

    ks, pols, weights, thetas = [], [], [], []
    for i, (kc, mass) in enumerate(zip(centres, masses)):
        khat = _directions(dim, dirs_per_shell, i)
        per_dir = mass / dirs_per_shell
        theta = params.a * kc ** (2.0 * params.beta)
        if s > 0.0:
            basis = _transverse_basis(khat)
            w = math.sqrt(per_dir * s / (dim - 1))
            for j in range(dim - 1):
                ks.append(kc * khat)
                pols.append(basis[:, j])
                weights.append(np.full(dirs_per_shell, w))
                thetas.append(np.full(dirs_per_shell, theta))
        if s < 1.0:
            ks.append(kc * khat)
            pols.append(khat)
            weights.append(np.full(dirs_per_shell, math.sqrt(per_dir * (1.0 - s))))
            thetas.append(np.full(dirs_per_shell, theta))

    gamma = _gamma_of(params, choice)
    return ModeSet(
        k=np.concatenate(ks),
        polarization=np.concatenate(pols),
        weight=np.concatenate(weights),
        theta=np.concatenate(thetas),
        dim=dim,
        exponent=gamma,
        meta={"shells": shells, "dirs_per_shell": dirs_per_shell, "choice": str(choice)},
    )


# ---------------------------------------------------------------------------
# isotropic covariance by radial quadrature
# ---------------------------------------------------------------------------


def _jv(order: float, z):
    """Bessel J with fast paths for the orders that occur in two and three dimensions."""
    if order == 0.0:
        return special.j0(z)
    if order == 1.0:
        return special.j1(z)
    n = order - 0.5
    if n >= 0 and n == int(n):
        return np.sqrt(2.0 * z / np.pi) * special.spherical_jn(int(n), z)
    return special.jv(order, z)


def _angular_kernels(z, dim):
    """Angular averages of ``cos(k.r)`` and ``k_hat k_hat cos(k.r)``.

    Returns ``(iso, par, perp)`` as functions of ``z = |k||r|``: the scalar
    average and the components of the tensor average along and across
    ``r_hat``.
    """
    z = np.asarray(z, dtype=float)
    nu = dim / 2.0 - 1.0
    c = math.gamma(nu + 1.0) * 2.0**nu
    small = z < 1e-3
    zs = np.where(small, 1.0, z)
    iso = np.where(small, 1.0 - z * z / (2.0 * dim), c * zs**-nu * _jv(nu, zs))
    perp = np.where(
        small,
        1.0 / dim - z * z / (2.0 * dim * (dim + 2.0)),
        c * zs ** (-nu - 1.0) * _jv(nu + 1.0, zs),
    )
    par = iso - (dim - 1) * perp
    return iso, par, perp


def _hankel_coeffs(nu: float, terms: int = 10) -> np.ndarray:
    mu = 4.0 * nu * nu
    out = np.ones(terms)
    for k in range(1, terms):
        out[k] = out[k - 1] * (mu - (2 * k - 1) ** 2) / (k * 8.0)
    return out


def _bessel_asymptotic(nu: float, z):
    """Amplitudes ``(A_cos, A_sin)`` with ``J_nu(z) ~ A_cos cos(z) + A_sin sin(z)``.

    Hankel's expansion; accurate to double precision for ``z >= 40`` and
    modest ``nu``.
    """
    z = np.asarray(z, dtype=float)
    a = _hankel_coeffs(nu)
    p = np.zeros_like(z)
    q = np.zeros_like(z)
    for m in range(0, len(a) // 2):
        p += (-1) ** m * a[2 * m] / z ** (2 * m)
        q += (-1) ** m * a[2 * m + 1] / z ** (2 * m + 1)
    amp = np.sqrt(2.0 / (np.pi * z))
    phase = nu * np.pi / 2.0 + np.pi / 4.0
    cp, sp = math.cos(phase), math.sin(phase)
    # cos(z - phase) = cos z cp + sin z sp ; sin(z - phase) = sin z cp - cos z sp
    return amp * (p * cp + q * sp), amp * (p * sp - q * cp)


_GL_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _gauss_legendre(n: int):
    if n not in _GL_CACHE:
        _GL_CACHE[n] = np.polynomial.legendre.leggauss(n)
    return _GL_CACHE[n]


def _panel_edges(k_lo: float, k_hi: float, rho: float, refine: int) -> np.ndarray:
    """Log panels below the first oscillation, then half-period linear panels."""
    ratio = 2.0 ** (1.0 / refine)
    knee = max(k_lo, min(k_hi, np.pi / rho if rho > 0 else k_hi))
    n_log = max(1, int(math.ceil(math.log(knee / k_lo) / math.log(ratio)))) if knee > k_lo else 0
    log_part = np.geomspace(k_lo, knee, n_log + 1) if n_log else np.array([k_lo])
    if knee < k_hi:
        width = np.pi / (rho * refine)
        n_lin = max(1, int(math.ceil((k_hi - knee) / width)))
        lin_part = np.linspace(knee, k_hi, n_lin + 1)[1:]
        return np.concatenate([log_part, lin_part])
    return log_part


def _panel_quad(fun, edges: np.ndarray, n: int):
    """Composite Gauss-Legendre sum; ``fun`` may return leading stacked components."""
    x, w = _gauss_legendre(n)
    lo, hi = edges[:-1, None], edges[1:, None]
    half = 0.5 * (hi - lo)
    nodes = (lo + hi) * 0.5 + half * x
    return np.sum(fun(nodes) * w * half, axis=(-2, -1))


def _tail_integral(kmu: float, nu_shift: float, dim: int, rho: float, k_from: float, tol: float):
    """Oscillatory tail ``int_{k_from}^inf k**kmu * g(k rho) dk`` via QAWF.

    ``g`` is ``z**(-nu-nu_shift) J_{nu+nu_shift}(z)`` up to the constant of
    :func:`_angular_kernels`.
    """
    nu = dim / 2.0 - 1.0
    order = nu + nu_shift
    c = math.gamma(nu + 1.0) * 2.0**nu

    def ampl(k, which):
        z = k * rho
        ac, as_ = _bessel_asymptotic(order, z)
        pref = c * k**kmu * z ** (-order)
        return pref * (ac if which == 0 else as_)

    opts = dict(epsabs=tol, limlst=200, full_output=1)
    ic = integrate.quad(lambda k: ampl(k, 0), k_from, np.inf, weight="cos", wvar=rho, **opts)
    is_ = integrate.quad(lambda k: ampl(k, 1), k_from, np.inf, weight="sin", wvar=rho, **opts)
    for res in (ic, is_):
        if len(res) > 3 and res[1] > 10 * tol:
            raise QuadratureError(f"oscillatory tail did not converge (err={res[1]:.2e})")
    return ic[0] + is_[0]


def isotropic_parts(
    params: SpectrumParams,
    choice,
    rho,
    tol: float = 1e-8,
    max_refine: int = 4,
):
    """Longitudinal and transverse parts of the isotropic covariance.

    ``Gamma(r) = A_par(|r|) r_hat r_hat + A_perp(|r|) (I - r_hat r_hat)``.

    Parameters
    ----------
    rho : array_like
        Separation magnitudes.
    tol : float
        Absolute tolerance per value; panel refinement is doubled until two
        successive Gauss-Legendre estimates agree within ``tol``.

    Returns
    -------
    (A_par, A_perp) : tuple of ndarray
    """
    gamma = _gamma_of(params, choice)
    dim = params.dim
    rho = np.atleast_1d(np.asarray(rho, dtype=float))
    s = params.solenoidal_fraction
    c_iso = s / (dim - 1)
    c_kk = (1.0 - s) - s / (dim - 1)
    mu = 1.0 - 2.0 * gamma
    pref = params.e0 * sphere_area(dim)
    k_lo, k_hi = params.k_min, params.k_max
    if math.isinf(k_hi) and gamma <= 1.0:
        raise QuadratureError("covariance diverges for ell1 = 0 unless the exponent exceeds 1")

    a_par = np.empty_like(rho)
    a_perp = np.empty_like(rho)
    trace0 = float(pref * _power_integral(mu, k_lo, k_hi))
    for idx, r in enumerate(rho):
        if r == 0.0:
            a_par[idx] = a_perp[idx] = trace0 / dim
            continue
        top = k_hi
        tail_par = tail_perp = 0.0
        if math.isinf(k_hi):
            top = max(2.0 * k_lo, 40.0 / r)
            t_iso = _tail_integral(mu, 0.0, dim, r, top, tol / 4)
            t_perp = _tail_integral(mu, 1.0, dim, r, top, tol / 4)
            tail_perp = c_iso * t_iso + c_kk * t_perp
            tail_par = c_iso * t_iso + c_kk * (t_iso - (dim - 1) * t_perp)

        def f_both(k, r=r):
            iso, par, perp = _angular_kernels(k * r, dim)
            km = k**mu
            return np.stack([km * (c_iso * iso + c_kk * par), km * (c_iso * iso + c_kk * perp)])

        for refine in range(1, max_refine + 1):
            edges = _panel_edges(k_lo, top, r, refine)
            p_lo, q_lo = _panel_quad(f_both, edges, 12)
            p_hi, q_hi = _panel_quad(f_both, edges, 24)
            err = pref * max(abs(p_hi - p_lo), abs(q_hi - q_lo))
            if err <= tol:
                break
        else:
            raise QuadratureError(
                f"radial quadrature at |r|={r:g} stalled at error {err:.2e} > {tol:.1e}"
            )
        a_par[idx] = pref * (p_hi + tail_par)
        a_perp[idx] = pref * (q_hi + tail_perp)
    return a_par, a_perp


def _assemble(a_par, a_perp, r):
    r = np.asarray(r, dtype=float)
    d = r.shape[-1]
    rho = np.linalg.norm(r, axis=-1)
    safe = np.where(rho > 0, rho, 1.0)[..., None]
    rhat = np.where(rho[..., None] > 0, r / safe, 0.0)
    outer = rhat[..., :, None] * rhat[..., None, :]
    eye = np.eye(d)
    return a_par[..., None, None] * outer + a_perp[..., None, None] * (eye - outer)


def covariance(params: SpectrumParams, choice, r, tol: float = 1e-8) -> np.ndarray:
    """Spatial covariance tensor ``int e^{ik.r} E(gamma,k)|k|^(1-d) P(k_hat) dk``.

    ``r`` is a displacement of shape ``(d,)`` or a batch ``(..., d)``.
    """
    r = np.asarray(r, dtype=float)
    if r.shape[-1] != params.dim:
        raise ValueError("displacement dimension does not match params.dim")
    rho = np.linalg.norm(r, axis=-1)
    flat = rho.reshape(-1)
    uniq, inverse = np.unique(flat, return_inverse=True)
    a_par, a_perp = isotropic_parts(params, choice, uniq, tol=tol)
    a_par = a_par[inverse].reshape(rho.shape)
    a_perp = a_perp[inverse].reshape(rho.shape)
    return _assemble(a_par, a_perp, r)


class CovarianceTable:
    """Spline tabulation of an isotropic covariance for repeated evaluation.

    Values are computed by :func:`isotropic_parts` on a radial grid (geometric
    near the origin, then uniform with spacing ``1 / (2 k_max)``) and
    interpolated with cubic splines.  Separations beyond the
    table are evaluated by direct quadrature.
    """

    def __init__(
        self,
        params: SpectrumParams,
        choice,
        r_max: float | None = None,
        spacing: float | None = None,
        tol: float = 1e-8,
    ):
        self.params = params
        self.choice = choice
        self.tol = tol
        k_top = params.k_max if not math.isinf(params.k_max) else 50.0 * params.k_min
        if spacing is None:
            spacing = 1.0 / (2.0 * k_top)
        if r_max is None:
            r_max = 5.0 * params.ell0
        n = int(math.ceil(r_max / spacing))
        uniform = np.linspace(0.0, n * spacing, n + 1)
        fine = np.geomspace(1e-4 * spacing, spacing, 24)[:-1]
        grid = np.unique(np.concatenate([uniform, fine]))
        a_par, a_perp = isotropic_parts(params, choice, grid, tol=tol)
        self.r_max = float(grid[-1])
        self.grid = grid
        self._par = interpolate.CubicSpline(grid, a_par)
        self._perp = interpolate.CubicSpline(grid, a_perp)
        self.at_zero = float(a_par[0])

    def parts(self, rho):
        rho = np.asarray(rho, dtype=float)
        a_par = self._par(np.minimum(rho, self.r_max))
        a_perp = self._perp(np.minimum(rho, self.r_max))
        far = rho > self.r_max
        if np.any(far):
            fp, fq = isotropic_parts(self.params, self.choice, rho[far], tol=self.tol)
            a_par[far] = fp
            a_perp[far] = fq
        return a_par, a_perp

    def __call__(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        a_par, a_perp = self.parts(np.linalg.norm(r, axis=-1))
        return _assemble(np.asarray(a_par), np.asarray(a_perp), r)


# ---------------------------------------------------------------------------
# white-noise limit
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LimitSpectrum:
    """Spectrum of the limiting Brownian velocity field.

    The covariance of the Brownian field per unit time is
    ``amplitude_factor * Gamma_LIMIT`` with ``Gamma_LIMIT`` built from
    ``params`` at exponent ``alpha + beta``.
    """

    params: SpectrumParams
    exponent: float
    amplitude: float
    amplitude_factor: float
    hurst: float


def _check_compressible_limit(params: SpectrumParams):
    if (
        params.solenoidal_fraction < 1.0
        and params.ell1 == 0.0
        and params.alpha + params.beta <= 1.5
    ):
        raise IllPosedLimitError(
            "compressible limit with ell1 = 0 needs alpha + beta > 3/2 "
            f"(got {params.alpha + params.beta:g})"
        )


def limit_spectrum(params: SpectrumParams) -> LimitSpectrum:
    """Parameters of the limiting Kraichnan field: exponent alpha+beta, amplitude 2 e0 / a."""
    _check_compressible_limit(params)
    gamma = params.alpha + params.beta
    return LimitSpectrum(
        params=params,
        exponent=gamma,
        amplitude=2.0 * params.e0 / params.a,
        amplitude_factor=2.0 / params.a,
        hurst=gamma - 1.0,
    )


def effective_diffusivity(params: SpectrumParams) -> np.ndarray:
    """Diffusion tensor ``kappa0 I + (2/a) Gamma_LIMIT(0)`` of the one-point limit generator."""
    _check_compressible_limit(params)
    d = params.dim
    gamma0 = covariance(params, ExponentChoice.LIMIT, np.zeros(d))
    return params.kappa0 * np.eye(d) + (2.0 / params.a) * gamma0
