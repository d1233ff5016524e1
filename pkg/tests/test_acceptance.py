"""Acceptance criteria C1-C12, each at its stated tolerance.

Every test records one PASS/FAIL line; the lines are also collected in the
terminal summary under "acceptance criteria".
"""

import math

import numpy as np
import pytest

from oukraichnan import harness, kraichnan_field, oracle, ou_field, spectra, transport
from oukraichnan.spectra import ExponentChoice, SpectrumParams

DEFAULT = SpectrumParams(kappa=0.1, kappa0=0.1)


def test_C1_ou_exactness(record_criterion):
    rng = np.random.default_rng(1)
    # exponents theta dt / eps^2 up to 40, well clear of underflow
    theta = 10 ** rng.uniform(-3, 1, 1000)
    dt = 10 ** rng.uniform(-4, -2, 1000)
    eps = 10 ** rng.uniform(-1.3, 0, 1000)
    got = ou_field.transition_coefficient(theta, dt, eps)
    want = np.array([math.exp(-t * h / e**2) for t, h, e in zip(theta, dt, eps)])
    rel = float(np.max(np.abs(got - want) / want))

    ms = spectra.build_modeset(DEFAULT, ExponentChoice.BASE, shells=1250, dirs_per_shell=8)
    assert len(ms) == 10_000
    state = ou_field.init_stationary(ms, epsilon=0.3, seed=7)
    steps = np.random.default_rng(2).exponential(0.01, 1000)
    for h in steps:
        ou_field.advance(state, h)
    var = float(np.var(np.concatenate([state.xi.ravel(), state.eta.ravel()])))
    ok = rel <= 1e-12 and 0.95 <= var <= 1.05
    record_criterion("C1", ok, f"max rel err of rho {rel:.2e}; variance after 1e3 advances {var:.4f}")
    assert ok


def test_C2_covariance_fidelity(record_criterion):
    n = 10_000
    ms = spectra.build_modeset(DEFAULT, ExponentChoice.BASE, shells=64, dirs_per_shell=16)
    seps = [r * np.array([math.cos(a), math.sin(a)]) for r, a in zip(np.geomspace(0.05, 30, 10), np.linspace(0, 3, 10))]
    x0 = np.array([3.7, -1.2])
    pts = np.stack([x0] + [x0 + r for r in seps])
    state = ou_field.init_stationary(ms, 1.0, seed=11, n_fields=n)
    v0 = ou_field.eval_velocity(state, pts)
    tau = 0.5
    ou_field.advance(state, tau)
    v1 = ou_field.eval_velocity(state, pts)

    worst_eq = worst_lag = 0.0
    for i, r in enumerate(seps, start=1):
        for lagged, later, target in (
            (False, v0, spectra.covariance(DEFAULT, ExponentChoice.BASE, r)),
            (True, v1, ms.covariance(r, tau)),
        ):
            prod = v0[:, 0, :, None] * later[:, i, None, :]
            est = prod.mean(axis=0)
            se = prod.std(axis=0, ddof=1) / math.sqrt(n)
            z = float(np.max(np.abs(est - target) / se))
            if lagged:
                worst_lag = max(worst_lag, z)
            else:
                worst_eq = max(worst_eq, z)
    ok = worst_eq <= 4 and worst_lag <= 4
    record_criterion("C2", ok, f"max |z| equal-time {worst_eq:.2f}, lagged {worst_lag:.2f} (limit 4)")
    assert ok


def test_C3_spectrum_map_identity(record_criterion):
    rng = np.random.default_rng(3)
    mag = np.exp(rng.uniform(math.log(DEFAULT.k_min), math.log(DEFAULT.k_max), 100))
    ang = rng.uniform(0, 2 * math.pi, 100)
    k = mag[:, None] * np.stack([np.cos(ang), np.sin(ang)], axis=1)
    kn = np.linalg.norm(k, axis=1)
    lhs = spectra.spectral_density(DEFAULT, ExponentChoice.BASE, k) * 2.0 / (DEFAULT.a * kn ** (2 * DEFAULT.beta))
    rhs = 2.0 / DEFAULT.a * spectra.spectral_density(DEFAULT, ExponentChoice.LIMIT, k)
    rel = float(np.max(np.abs(lhs - rhs) / np.abs(rhs)))
    ok = rel <= 1e-12
    record_criterion("C3", ok, f"max rel err {rel:.2e} over 100 in-band wavenumbers")
    assert ok


def test_C4_divergence_free(record_criterion):
    ms = spectra.build_modeset(DEFAULT, ExponentChoice.BASE, 32, 8)
    state = ou_field.init_stationary(ms, 0.1, seed=4)
    x = np.random.default_rng(4).uniform(-50, 50, (100, 2))
    div = np.abs(ou_field.eval_divergence(state, x))
    scale = np.sum(np.abs(ms.weight * ms.kmag)) / state.epsilon
    rel = float(div.max() / scale)
    ok = rel < 1e-10
    record_criterion("C4", ok, f"max |div| / sum|w k| = {rel:.2e} at 100 points")
    assert ok


@pytest.mark.slow
def test_C5_max_principle(default_sweep, record_criterion):
    rows = default_sweep.rows
    errors = [r["error"] for r in rows if "error" in r]
    violations = sum(r.get("fk_violations", 0) for r in rows)
    count = sum(r.get("fk_count", 0) for r in rows)
    lo = min(r["fk_min"] for r in rows if "error" not in r)
    hi = max(r["fk_max"] for r in rows if "error" not in r)
    ok = not errors and violations == 0
    record_criterion("C5", ok, f"{violations} violations among {count} estimates; range [{lo:.3g}, {hi:.3g}] within [0, 1]")
    assert ok


def test_C6_energy_identity(record_criterion):
    params = SpectrumParams(ell0=2.0, ell1=0.5, e0=0.05)
    ms = spectra.build_modeset(params, ExponentChoice.BASE, 8, 4)
    T0 = transport.Observable.gaussian_blob((0.0, 0.0), 1.0)
    grid = transport.ScalarGrid.covering((0.0, 0.0), 8.0, 0.1)
    e0 = T0.l2_squared()
    dt = 0.02
    st = ou_field.init_stationary(ms, 1.0, seed=6, n_fields=4)
    cons, _ = transport.energy(st, T0, 1.0, grid, dt, kappa=0.0)
    drift = float(np.max(np.abs(cons / e0 - 1)))
    st = ou_field.init_stationary(ms, 1.0, seed=6, n_fields=4)
    diss, se = transport.energy(st, T0, 1.0, grid, dt, kappa=0.1, n_samples=8)
    mean = float(diss.mean())
    comb = float(math.hypot(diss.std(ddof=1) / 2.0, np.sqrt(np.mean(se**2))))
    ok = drift < 0.01 and mean < e0 - 4 * comb
    record_criterion(
        "C6", ok, f"kappa=0 max rel drift {drift:.2e}; kappa=0.1 energy {mean:.4f} vs {e0:.4f} (4 SE = {4 * comb:.3g})"
    )
    assert ok


def test_C7_kraichnan_dispersion(record_criterion):
    n = 100_000
    times, pos = kraichnan_field.dispersion_run(DEFAULT, np.zeros((1, 2)), 1.0, 0.01, n, seed=7, n_records=10)
    sq = np.sum(pos[:, :, 0] ** 2, axis=-1)  # (records, n)
    tc = times - times.mean()
    per = (tc / np.sum(tc**2)) @ sq
    slope, se = float(per.mean()), float(per.std(ddof=1) / math.sqrt(n))
    want = oracle.single_dispersion_slope(DEFAULT)
    curve = sq.mean(axis=1)
    fit = np.polyfit(times, curve, 1)
    r2 = 1 - np.sum((curve - np.polyval(fit, times)) ** 2) / np.sum((curve - curve.mean()) ** 2)
    z = abs(slope - want) / se
    ok = z <= 4 and r2 > 0.999
    record_criterion("C7", ok, f"slope {slope:.2f} +/- {se:.2f} vs oracle {want:.2f} (|z|={z:.2f}); R^2={r2:.5f}")
    assert ok


@pytest.mark.slow
def test_C8_convergence_sweep(default_sweep, record_criterion):
    gaps = default_sweep.diagnostics["gaps"]
    parts = []
    ok = True
    for name in ("dispersion_slope", "weak_mean", "weak_variance"):
        g = gaps[name]
        good = g["monotone_within_se"] and g["decrease_significant"] and g["relative_gap"][-1] < 0.1
        ok &= good
        rel = ", ".join(f"{v:.3f}" for v in g["relative_gap"])
        parts.append(f"{name}: rel gaps [{rel}] monotone={g['monotone_within_se']} "
                     f"significant={g['decrease_significant']} -> {'ok' if good else 'FAIL'}")
    record_criterion("C8", ok, "; ".join(parts))
    assert ok


@pytest.mark.slow
def test_C9_pair_dispersion(default_sweep, record_criterion):
    row = next(r for r in default_sweep.rows if r["epsilon"] == 0.05)
    ou, ou_se = map(np.asarray, row["pair_curve"])
    lim, lim_se = map(np.asarray, default_sweep.oracle["pair_curve"])
    idx = [2, 4, 6, 8, 10]
    z = np.abs(ou[idx] - lim[idx]) / np.hypot(ou_se[idx], lim_se[idx])
    ok = bool(np.all(z <= 4))
    times = default_sweep.metadata["record_times"]
    record_criterion("C9", ok, "|z| at t=" + ", ".join(f"{times[i]:.1f}:{v:.2f}" for i, v in zip(idx, z)))
    assert ok


def _p(alpha, beta, kappa0=0.1):
    return SpectrumParams(alpha=alpha, beta=beta, kappa=kappa0, kappa0=kappa0)


EPS = (0.4, 0.1, 0.02, 0.005)
K = harness.Rule("constant", 0.1)
VALIDATOR_TABLE = [
    # (condition, params, ell1 rule, kappa rule, expected valid)
    ("i", _p(1.5, 1.75), harness.Rule("power", 1.0, 1.0), K, True),
    ("i", _p(1.5, 1.75), harness.Rule("constant", 0.05), K, False),
    ("ii", _p(1.5, 1.25), harness.Rule("power", 1.0, 1.0), K, True),
    ("ii", _p(1.5, 1.25), harness.Rule("power", 1.0, 1.0), harness.Rule("power", 0.1, -2.0), False),
    ("iii", _p(1.5, 1.0), harness.Rule("power", 1.0, 1.0), K, True),
    ("iii", _p(1.5, 1.0), harness.Rule("power", 1.0, 4.0), K, False),
    ("iv", _p(1.5, 0.75), harness.Rule("power", 1.0, 1.0), K, True),
    ("iv", _p(1.5, 0.75), harness.Rule("power", 1.0, 3.0), K, False),
    ("v", _p(1.5, 0.5), harness.Rule("power", 1.0, 1.0), K, True),
    ("v", _p(1.5, 0.5), harness.Rule("power", 1.0, 2.0), K, False),
    ("vi", _p(4 / 3, 1 / 3), harness.Rule("power", 1.0, 0.5), K, True),
    ("vi", _p(4 / 3, 1 / 3), harness.Rule("power", 1.0, 2.0), K, False),
]


def test_C10_schedule_validator(record_criterion):
    wrong = []
    for cond, params, ell1, kap, expected in VALIDATOR_TABLE:
        verdict = harness.validate_schedule(params, harness.Schedule(cond, EPS, ell1, kap))
        if verdict.valid != expected or verdict.condition != cond:
            wrong.append(f"{cond}/{'valid' if expected else 'violating'} -> {verdict.describe()}")
    ok = not wrong
    record_criterion("C10", ok, f"{len(VALIDATOR_TABLE) - len(wrong)}/12 cases classified correctly" + (
        "; " + "; ".join(wrong) if wrong else ""))
    assert ok


def test_C11_compressible_guard(record_criterion):
    bad = SpectrumParams(alpha=1.2, beta=0.2, ell1=0.0, solenoidal_fraction=0.5)
    raised = []
    for fn in (spectra.limit_spectrum, kraichnan_field.drift_correction, spectra.effective_diffusivity):
        try:
            fn(bad)
        except spectra.IllPosedLimitError:
            raised.append(fn.__name__)
    fine = SpectrumParams(alpha=1.4, beta=0.2, ell1=0.0, solenoidal_fraction=0.5)
    spectra.limit_spectrum(fine)
    ok = len(raised) == 3
    record_criterion("C11", ok, f"IllPosedLimitError raised by {', '.join(raised)} for alpha+beta=1.4")
    assert ok


def test_C12_reproducible_workers(tmp_path, record_criterion):
    cfg = harness.SweepConfig(
        schedule=harness.Schedule("T1_fixed_cutoff", (0.4, 0.2)),
        transport=harness.TransportSettings(replicas=64, chunk=8, oracle_samples=400),
    )
    blobs = {}
    for workers in (1, 4, 8):
        rep = harness.run_sweep(cfg, seed=99, workers=workers)
        out = tmp_path / f"w{workers}"
        harness.report_emit(rep, out, "sweep")
        blobs[workers] = ((out / "sweep.csv").read_bytes(), (out / "sweep.json").read_bytes())
    ok = blobs[1] == blobs[4] == blobs[8]
    record_criterion("C12", ok, "CSV and JSON byte-identical under 1, 4 and 8 workers" if ok else "outputs differ")
    assert ok
