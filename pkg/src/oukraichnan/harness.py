"""Convergence experiments: OU transport against the Kraichnan oracle over an eps sweep.

A sweep evaluates, for every eps of a :class:`Schedule`, Monte-Carlo
statistics of OU-driven tracers and compares them with the limit model.
Replicas are processed in fixed-size chunks, each keyed by
``(seed, row, chunk)``, so the merged result does not depend on how many
worker processes ran the chunks.

Per replica the following tracers share one field realization:

* ``n_theta`` tracers started from ``theta / |theta|_1``: unbiased samples
  of ``<T_t, theta>`` and, through pairwise products, of its second moment;
* a partner of the first tracer at offset ``pair_separation``;
* a twin of the first tracer (same start, independent molecular noise),
  whose displacement difference gives ``E |T_t|_2^2 = E G(D1 - D2)``
  with ``G`` the autocorrelation of ``T0``.
"""

from __future__ import annotations

import dataclasses
import json
import logging
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .oracle import (
    NPointState,
    generator_diffuse,
    limit_table,
    mean_weak_exact,
    pair_dispersion_curve,
    single_dispersion_slope,
    weak_second_moment,
)
from .ou_field import init_stationary, make_rng
from .spectra import ExponentChoice, SpectrumParams, build_modeset
from .transport import Observable, blob_autocorrelation, default_dt, step_particles, weak_moment_samples

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

__all__ = [
    "CONDITIONS",
    "ConfigError",
    "ScheduleViolation",
    "Rule",
    "Schedule",
    "ScheduleVerdict",
    "TransportSettings",
    "OutputSettings",
    "SweepConfig",
    "SweepReport",
    "load_config",
    "validate_schedule",
    "run_sweep",
    "report_emit",
    "worker_count",
]

log = logging.getLogger(__name__)

CONDITIONS = ("T1_fixed_cutoff", "i", "ii", "iii", "iv", "v", "vi")
WORKERS_ENV = "OUKRAICHNAN_WORKERS"
OBSERVABLES = ("dispersion_slope", "weak_mean", "weak_variance", "pair_dispersion", "energy")


class ConfigError(ValueError):
    """Malformed or inconsistent configuration."""


class ScheduleViolation(RuntimeError):
    def __init__(self, verdict: "ScheduleVerdict"):
        super().__init__(verdict.describe())
        self.verdict = verdict


# ---------------------------------------------------------------------------
# schedules
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Rule:
    """Closed-form map ``eps -> coefficient * eps**exponent`` (``kind='constant'`` ignores eps)."""

    kind: str = "constant"
    coefficient: float = 1.0
    exponent: float = 0.0

    def __post_init__(self):
        if self.kind not in ("constant", "power"):
            raise ConfigError(f"rule kind must be 'constant' or 'power', got {self.kind!r}")

    def __call__(self, eps: float) -> float:
        if self.kind == "constant":
            return float(self.coefficient)
        return float(self.coefficient * eps**self.exponent)

    @property
    def is_constant(self) -> bool:
        return self.kind == "constant" or self.exponent == 0.0


@dataclass(frozen=True)
class Schedule:
    condition: str
    epsilons: tuple
    ell1_rule: Rule = Rule("constant", 0.05)
    kappa_rule: Rule = Rule("constant", 0.1)

    def __post_init__(self):
        if self.condition not in CONDITIONS:
            raise ConfigError(f"condition must be one of {CONDITIONS}, got {self.condition!r}")
        eps = tuple(float(e) for e in self.epsilons)
        if any(e <= 0 for e in eps):
            raise ConfigError("epsilons must be positive")
        if any(b >= a for a, b in zip(eps, eps[1:])):
            raise ConfigError("epsilons must be strictly decreasing")
        object.__setattr__(self, "epsilons", eps)

    def ell1(self, eps: float) -> float:
        return self.ell1_rule(eps)

    def kappa(self, eps: float) -> float:
        return self.kappa_rule(eps)


@dataclass(frozen=True)
class ScheduleVerdict:
    valid: bool
    condition: str
    expression: str = ""
    value: float = float("nan")
    values: tuple = ()

    def describe(self) -> str:
        if self.valid:
            return f"valid under {self.condition}"
        return f"violated({self.condition}): {self.expression} = {self.value:.4g}"


def _regime(s: float) -> str:
    close = lambda v: math.isclose(s, v, rel_tol=0.0, abs_tol=1e-12)  # noqa: E731
    if close(4.0):
        return "ii"
    if close(3.0):
        return "iv"
    if s > 4.0:
        return "i"
    if s > 3.0:
        return "iii"
    if s > 2.0 and not close(2.0):
        return "v"
    return "vi"


def _condition_expressions(condition: str, s: float, kappa0: float):
    """Named limit expressions ``f(eps, ell1, kappa)`` that must tend to zero."""
    eps_term = ("eps*ell1^(alpha+2beta-3)", lambda e, l, k: e * l ** (s - 3.0))
    kap_term = ("kappa*eps^2*ell1^(alpha+2beta-4)", lambda e, l, k: k * e * e * l ** (s - 4.0))
    table = {
        "i": [],
        "ii": [("kappa*eps^2*sqrt(log(1/ell1))", lambda e, l, k: k * e * e * math.sqrt(math.log(1.0 / l)))],
        "iii": [kap_term],
        "iv": [
            ("eps*sqrt(log(1/ell1))", lambda e, l, k: e * math.sqrt(math.log(1.0 / l))),
            ("kappa*eps^2/ell1", lambda e, l, k: k * e * e / l),
        ],
        # with kappa0 > 0 the kappa expression implies the eps one
        "v": [kap_term] if kappa0 > 0 else [eps_term, kap_term],
        "vi": [eps_term],
    }
    return table[condition]


def _tends_to_zero(values, threshold: float) -> bool:
    v = np.asarray(values, dtype=float)
    if np.all(v == 0.0):
        return True
    if not np.all(np.isfinite(v)):
        return False
    # strict decrease beyond round-off, so constant sequences never pass
    return bool(np.all(v[1:] < v[:-1] * (1.0 - 1e-9)) and abs(v[-1]) < threshold)


def validate_schedule(params: SpectrumParams, schedule: Schedule, threshold: float = 0.1) -> ScheduleVerdict:
    """Check a schedule against the fixed-cutoff or vanishing-cutoff convergence conditions.

    Every limit expression must decrease strictly along the sweep and end
    below ``threshold``; identically zero expressions pass.
    """
    eps = schedule.epsilons
    if not eps:
        return ScheduleVerdict(False, schedule.condition, "epsilons", float("nan"))
    ell1 = [schedule.ell1(e) for e in eps]
    kap = [schedule.kappa(e) for e in eps]
    if any(k < 0 for k in kap):
        return ScheduleVerdict(False, schedule.condition, "kappa", min(kap), tuple(kap))
    drift = [abs(k - params.kappa0) for k in kap]
    kappa_ok = _tends_to_zero(drift, threshold) or all(d == 0.0 for d in drift)

    if schedule.condition == "T1_fixed_cutoff":
        if not schedule.ell1_rule.is_constant or ell1[0] <= 0:
            return ScheduleVerdict(False, "T1_fixed_cutoff", "ell1 (must be a positive constant)", ell1[-1], tuple(ell1))
        if not kappa_ok:
            return ScheduleVerdict(False, "T1_fixed_cutoff", "|kappa-kappa0|", drift[-1], tuple(drift))
        return ScheduleVerdict(True, "T1_fixed_cutoff")

    if not params.solenoidal:
        return ScheduleVerdict(False, schedule.condition, "solenoidal_fraction (must be 1)", params.solenoidal_fraction)
    s = params.alpha + 2.0 * params.beta
    mandated = _regime(s)
    if schedule.condition != mandated:
        return ScheduleVerdict(False, schedule.condition, f"alpha+2beta (regime {mandated})", s)
    if not all(0 < l < 1 for l in ell1) or not _tends_to_zero(ell1, math.inf):
        return ScheduleVerdict(False, mandated, "ell1 (must decrease to 0)", ell1[-1], tuple(ell1))
    for name, fun in _condition_expressions(mandated, s, params.kappa0):
        vals = tuple(fun(e, l, k) for e, l, k in zip(eps, ell1, kap))
        if not _tends_to_zero(vals, threshold):
            return ScheduleVerdict(False, mandated, name, vals[-1], vals)
    if not kappa_ok:
        return ScheduleVerdict(False, mandated, "|kappa-kappa0|", drift[-1], tuple(drift))
    return ScheduleVerdict(True, mandated)


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TransportSettings:
    horizon: float = 1.0
    replicas: int = 10_000
    chunk: int = 250
    shells: int = 16
    dirs_per_shell: int = 4
    rate_fraction: float = 1.0
    cfl: float = 1.0
    n_records: int = 10
    n_theta: int = 16
    pair_separation: tuple = (0.5, 0.0)
    oracle_samples: int = 40_000
    oracle_dt: float = 0.01
    trend_z: float = 2.0
    threshold: float = 0.1

    def __post_init__(self):
        if self.replicas < 2 or self.chunk < 1 or self.n_records < 2 or self.n_theta < 2:
            raise ConfigError("replicas >= 2, chunk >= 1, n_records >= 2 and n_theta >= 2 required")
        if not (self.horizon > 0 and self.rate_fraction > 0 and self.cfl > 0 and self.oracle_dt > 0):
            raise ConfigError("horizon, rate_fraction, cfl and oracle_dt must be positive")
        object.__setattr__(self, "pair_separation", tuple(float(v) for v in self.pair_separation))


@dataclass(frozen=True)
class OutputSettings:
    directory: str = "out"
    prefix: str = "sweep"


@dataclass(frozen=True)
class SweepConfig:
    spectrum: SpectrumParams = SpectrumParams(kappa=0.1, kappa0=0.1)
    schedule: Schedule = Schedule("T1_fixed_cutoff", (0.4, 0.2, 0.1, 0.05))
    transport: TransportSettings = TransportSettings()
    T0: Observable = Observable.gaussian_blob((0.0, 0.0), 1.0)
    theta: Observable = Observable.bump((0.0, 0.0), 2.0)
    output: OutputSettings = OutputSettings()

    def __post_init__(self):
        d = self.spectrum.dim
        if self.T0.dim != d or self.theta.dim != d or len(self.transport.pair_separation) != d:
            raise ConfigError(f"observable centres and pair_separation must have dimension {d}")
        if self.T0.kind != "gaussian_blob":
            raise ConfigError("the sweep oracle needs a gaussian_blob T0")
        if self.theta.kind != "bump" or self.theta.role != "test":
            raise ConfigError("theta must be a bump test function")

    def to_dict(self) -> dict:
        return _plain(dataclasses.asdict(self))


def _plain(obj):
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def _build(cls, data: dict, section: str):
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = set(data) - names
    if unknown:
        raise ConfigError(f"[{section}] unknown field(s): {', '.join(sorted(unknown))}")
    try:
        return cls(**data)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"[{section}] {exc}") from exc


def _observable(data: dict, role: str, section: str) -> Observable:
    data = dict(data)
    kind = data.pop("kind", None)
    try:
        if kind == "gaussian_blob":
            return Observable.gaussian_blob(data["center"], data["width"], data.get("height", 1.0), role)
        if kind == "bump":
            return Observable.bump(data["center"], data["radius"], data.get("height", 1.0), role)
        if kind == "constant":
            return Observable.constant(data["c"], data.get("dim", 2))
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"[{section}] {exc}") from exc
    raise ConfigError(f"[{section}] unknown observable kind {kind!r}")


def config_from_dict(raw: dict) -> SweepConfig:
    allowed = {"spectrum", "schedule", "transport", "observables", "output"}
    extra = set(raw) - allowed
    if extra:
        raise ConfigError(f"unknown section(s): {', '.join(sorted(extra))}")
    spectrum = _build(SpectrumParams, raw.get("spectrum", {}), "spectrum")
    sched = dict(raw.get("schedule", {}))
    for key in ("ell1_rule", "kappa_rule"):
        if key in sched:
            sched[key] = _build(Rule, sched[key], f"schedule.{key}")
    if "epsilons" in sched:
        sched["epsilons"] = tuple(sched["epsilons"])
    sched.setdefault("condition", "T1_fixed_cutoff")
    sched.setdefault("epsilons", (0.4, 0.2, 0.1, 0.05))
    schedule = _build(Schedule, sched, "schedule")
    transport = _build(TransportSettings, raw.get("transport", {}), "transport")
    obs = dict(raw.get("observables", {}))
    unknown = set(obs) - {"T0", "theta"}
    if unknown:
        raise ConfigError(f"[observables] unknown field(s): {', '.join(sorted(unknown))}")
    kw = {}
    if "T0" in obs:
        kw["T0"] = _observable(obs["T0"], "initial", "observables.T0")
    if "theta" in obs:
        kw["theta"] = _observable(obs["theta"], "test", "observables.theta")
    output = _build(OutputSettings, raw.get("output", {}), "output")
    try:
        return SweepConfig(spectrum, schedule, transport, output=output, **kw)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path) -> SweepConfig:
    """Read a TOML config with sections [spectrum], [schedule], [transport], [observables], [output]."""
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return config_from_dict(raw)


def worker_count(default: int = 1) -> int:
    raw = os.environ.get(WORKERS_ENV)
    if not raw:
        return default
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"{WORKERS_ENV} must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise ConfigError(f"{WORKERS_ENV} must be a positive integer, got {raw!r}")
    return n


# ---------------------------------------------------------------------------
# sweep
# ---------------------------------------------------------------------------


def row_params(config: SweepConfig, eps: float) -> SpectrumParams:
    return config.spectrum.with_(ell1=config.schedule.ell1(eps), kappa=config.schedule.kappa(eps))


def oracle_params(config: SweepConfig) -> SpectrumParams:
    """Limit-model parameters: the fixed cutoff under ``T1_fixed_cutoff`` schedules, ``ell1 = 0`` otherwise."""
    p = config.spectrum
    if config.schedule.condition == "T1_fixed_cutoff":
        return p.with_(ell1=config.schedule.ell1(config.schedule.epsilons[0]))
    return p.with_(ell1=0.0)


def _row_plan(config: SweepConfig, eps: float):
    tr = config.transport
    params = row_params(config, eps)
    ms = build_modeset(params, ExponentChoice.BASE, tr.shells, tr.dirs_per_shell)
    dt = min(default_dt(ms, eps, tr.rate_fraction, tr.cfl), tr.horizon / tr.n_records)
    n_steps = int(math.ceil(tr.horizon / dt / tr.n_records - 1e-9)) * tr.n_records
    return params, ms, tr.horizon / n_steps, n_steps


def _chunk_task(args):
    config, seed, row, chunk_index = args
    tr = config.transport
    eps = config.schedule.epsilons[row]
    params, ms, h, n_steps = _row_plan(config, eps)
    lo = chunk_index * tr.chunk
    n = min(tr.chunk, tr.replicas - lo)
    starts = config.theta.sample((n, tr.n_theta), make_rng(seed, 3, row, chunk_index))
    first = starts[:, :1]
    pos = np.concatenate(
        [starts, first + np.asarray(tr.pair_separation), first], axis=1
    )  # (n, n_theta + 2, d)
    x0 = pos.copy()
    state = init_stationary(ms, eps, n_fields=n, rng=make_rng(seed, 0, row, chunk_index))
    records = step_particles(
        state,
        pos,
        tr.horizon,
        h,
        params.kappa,
        make_rng(seed, 1, row, chunk_index),
        tr.cfl,
        record_every=n_steps // tr.n_records,
    )
    rec = np.stack(records)  # (n_rec + 1, n, P, d)
    sq = np.sum((rec - x0) ** 2, axis=-1)
    pair = np.sum((rec[:, :, 0] - rec[:, :, tr.n_theta]) ** 2, axis=-1)
    end = rec[-1]
    t0_end = config.T0(end)
    z1, z2 = weak_moment_samples(config.theta, config.T0, x0[:, : tr.n_theta], end[:, : tr.n_theta])
    twin = tr.n_theta + 1
    energy = blob_autocorrelation(config.T0, (end[:, 0] - x0[:, 0]) - (end[:, twin] - x0[:, twin]))
    return {
        "dispersion": sq.mean(axis=2).T,  # (n, n_rec + 1)
        "pair": pair.T,
        "z1": z1,
        "z2": z2,
        "energy": energy,
        "fk_min": float(t0_end.min()),
        "fk_max": float(t0_end.max()),
        "fk_count": int(t0_end.size),
        "fk_violations": int(np.sum((t0_end < config.T0.inf) | (t0_end > config.T0.sup))),
    }


def _stat(x) -> tuple[float, float]:
    x = np.asarray(x, dtype=float)
    return float(x.mean()), float(x.std(ddof=1) / math.sqrt(len(x)))


def _slope_weights(times: np.ndarray) -> np.ndarray:
    tc = times - times.mean()
    return tc / np.sum(tc * tc)


def _r_squared(times, values) -> float:
    fit = np.polyfit(times, values, 1)
    resid = values - np.polyval(fit, times)
    tot = np.sum((values - values.mean()) ** 2)
    return float(1.0 - np.sum(resid**2) / tot) if tot > 0 else 1.0


def _summarize(config: SweepConfig, eps: float, parts: list, times: np.ndarray, h: float, n_steps: int, n_modes: int):
    disp = np.concatenate([p["dispersion"] for p in parts])
    pair = np.concatenate([p["pair"] for p in parts])
    ybar = np.concatenate([p["z1"] for p in parts])
    u = np.concatenate([p["z2"] for p in parts])
    energy = np.concatenate([p["energy"] for p in parts])
    m1, se1 = _stat(ybar)
    m2 = float(u.mean())
    cov = np.cov(np.stack([ybar, u])) / len(u)
    grad = np.array([-2.0 * m1, 1.0])
    slope, slope_se = _stat(disp @ _slope_weights(times))
    pair_mean = pair.mean(axis=0)
    pair_se = pair.std(axis=0, ddof=1) / math.sqrt(len(pair))
    e_mean, e_se = _stat(energy)
    return {
        "epsilon": eps,
        "ell1": config.schedule.ell1(eps),
        "kappa": config.schedule.kappa(eps),
        "dt": h,
        "n_steps": n_steps,
        "n_modes": n_modes,
        "replicas": int(len(u)),
        "dispersion_slope": [slope, slope_se],
        "dispersion_r2": _r_squared(times, disp.mean(axis=0)),
        "weak_mean": [m1, se1],
        "weak_variance": [m2 - m1 * m1, float(math.sqrt(max(grad @ cov @ grad, 0.0)))],
        "pair_dispersion": [float(pair_mean[-1]), float(pair_se[-1])],
        "pair_curve": [pair_mean.tolist(), pair_se.tolist()],
        "energy": [e_mean, e_se],
        "fk_min": min(p["fk_min"] for p in parts),
        "fk_max": max(p["fk_max"] for p in parts),
        "fk_count": sum(p["fk_count"] for p in parts),
        "fk_violations": sum(p["fk_violations"] for p in parts),
    }


def compute_oracle(config: SweepConfig, seed: int) -> dict:
    tr = config.transport
    params = oracle_params(config)
    times = np.linspace(0.0, tr.horizon, tr.n_records + 1)
    table = limit_table(params)
    var_m2 = weak_second_moment(config.theta, config.T0, params, tr.horizon, tr.oracle_dt, tr.oracle_samples, seed, table)
    mean = mean_weak_exact(config.theta, config.T0, params, tr.horizon)
    curve = pair_dispersion_curve(params, tr.pair_separation, times, tr.oracle_dt, tr.oracle_samples, seed + 1, table=table)
    twins = generator_diffuse(
        NPointState(np.zeros((2, params.dim))), params, tr.horizon, tr.oracle_dt, tr.oracle_samples, seed + 2, table
    )
    e_mean, e_se = _stat(blob_autocorrelation(config.T0, twins.positions[:, 0] - twins.positions[:, 1]))
    return {
        "ell1": params.ell1,
        "kappa0": params.kappa0,
        "dispersion_slope": [single_dispersion_slope(params), 0.0],
        "weak_mean": [mean, 0.0],
        "weak_variance": [var_m2[0] - mean * mean, var_m2[1]],
        "pair_dispersion": [float(curve.mean_sq_separation[-1]), float(curve.stderr[-1])],
        "pair_curve": [curve.mean_sq_separation.tolist(), curve.stderr.tolist()],
        "energy": [e_mean, e_se],
    }


def _gaps(rows: list, oracle: dict, z: float) -> dict:
    out = {}
    good = [r for r in rows if "error" not in r]
    for name in OBSERVABLES:
        o, ose = oracle[name]
        gaps, ses, rel = [], [], []
        for r in good:
            v, vse = r[name]
            gaps.append(abs(v - o))
            ses.append(math.hypot(vse, ose))
            rel.append(abs(v - o) / abs(o) if o != 0 else math.inf)
        monotone = len(gaps) >= 2 and all(
            b <= a + z * math.hypot(sa, sb) for a, b, sa, sb in zip(gaps, gaps[1:], ses, ses[1:])
        )
        decreasing = monotone and gaps[0] - gaps[-1] > z * math.hypot(ses[0], ses[-1])
        out[name] = {
            "epsilon": [r["epsilon"] for r in good],
            "gap": gaps,
            "gap_stderr": ses,
            "relative_gap": rel,
            "monotone_within_se": bool(monotone),
            "decrease_significant": bool(decreasing),
        }
    return out


@dataclass
class SweepReport:
    rows: list = field(default_factory=list)
    oracle: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(dataclasses.asdict(self), indent=2, sort_keys=True, allow_nan=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "SweepReport":
        data = json.loads(text)
        return cls(**{f.name: data.get(f.name, {} if f.name != "rows" else []) for f in dataclasses.fields(cls)})


def _run_tasks(tasks, workers: int):
    if workers <= 1:
        return [_chunk_task(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_chunk_task, tasks))


def run_sweep(
    config: SweepConfig,
    seed: int,
    workers: int | None = None,
    override: bool = False,
    with_oracle: bool = True,
) -> SweepReport:
    """Run every eps row of the schedule and compare with the limit oracle.

    Raises :class:`ScheduleViolation` unless the schedule validates or
    ``override`` is set.  A failing row is recorded with its error message
    and the sweep continues.
    """
    verdict = validate_schedule(config.spectrum, config.schedule, config.transport.threshold)
    if not verdict.valid and not override:
        raise ScheduleViolation(verdict)
    workers = worker_count() if workers is None else workers
    tr = config.transport
    times = np.linspace(0.0, tr.horizon, tr.n_records + 1)
    n_chunks = -(-tr.replicas // tr.chunk)
    started = time.perf_counter()
    rows = []
    for row, eps in enumerate(config.schedule.epsilons):
        try:
            _, ms, h, n_steps = _row_plan(config, eps)
            parts = _run_tasks([(config, seed, row, c) for c in range(n_chunks)], workers)
            rows.append(_summarize(config, eps, parts, times, h, n_steps, len(ms)))
        except (ValueError, ArithmeticError, RuntimeError) as exc:
            log.warning("row eps=%g failed: %s", eps, exc)
            rows.append({"epsilon": eps, "error": f"{type(exc).__name__}: {exc}"})
        log.info("row eps=%g done after %.1f s", eps, time.perf_counter() - started)
    oracle = compute_oracle(config, seed) if with_oracle else {}
    diagnostics = {"schedule": verdict.describe()}
    if oracle:
        diagnostics["gaps"] = _gaps(rows, oracle, tr.trend_z)
    diagnostics["max_principle_violations"] = sum(r.get("fk_violations", 0) for r in rows)
    metadata = {
        "seed": seed,
        "config": config.to_dict(),
        "record_times": times.tolist(),
        "chunk": tr.chunk,
        "rng": "Philox keyed by (seed, stream, row, chunk)",
    }
    log.info("sweep finished in %.1f s with %d worker(s)", time.perf_counter() - started, workers)
    return SweepReport(rows, oracle, diagnostics, metadata)


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------

_CSV_HEADER = "epsilon,ell1,kappa,observable,estimate,stderr,oracle,oracle_stderr,gap,gap_stderr,relative_gap\n"


def _fmt(v) -> str:
    return repr(float(v))


def report_emit(report: SweepReport, directory, prefix: str = "sweep", formats=("csv", "json", "plot")) -> list:
    """Write CSV, JSON and plot-data files; returns the written paths."""
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    if "csv" in formats:
        lines = [_CSV_HEADER]
        for r in report.rows:
            if "error" in r:
                continue
            for name in OBSERVABLES:
                v, vse = r[name]
                o, ose = report.oracle.get(name, [math.nan, math.nan])
                gap = abs(v - o)
                rel = gap / abs(o) if o not in (0, 0.0) else math.inf
                lines.append(
                    ",".join(
                        [_fmt(r["epsilon"]), _fmt(r["ell1"]), _fmt(r["kappa"]), name]
                        + [_fmt(x) for x in (v, vse, o, ose, gap, math.hypot(vse, ose), rel)]
                    )
                    + "\n"
                )
        path = out / f"{prefix}.csv"
        path.write_text("".join(lines))
        written.append(path)
    if "json" in formats:
        path = out / f"{prefix}.json"
        path.write_text(report.to_json())
        written.append(path)
    if "plot" in formats:
        for name, g in report.diagnostics.get("gaps", {}).items():
            lines = ["epsilon,log10_epsilon,gap,gap_stderr\n"]
            for e, gap, se in zip(g["epsilon"], g["gap"], g["gap_stderr"]):
                lines.append(f"{_fmt(e)},{_fmt(math.log10(e))},{_fmt(gap)},{_fmt(se)}\n")
            path = out / f"{prefix}_gap_{name}.csv"
            path.write_text("".join(lines))
            written.append(path)
    return written
