import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oukraichnan import ou_field
from oukraichnan.spectra import ExponentChoice, ModeSet, SpectrumParams, build_modeset


@pytest.fixture(scope="module")
def modes():
    return build_modeset(SpectrumParams(ell0=5.0, ell1=0.2), ExponentChoice.BASE, 8, 4)


def single_mode(k, p, w=1.0, theta=1.0):
    return ModeSet(
        k=np.atleast_2d(k).astype(float),
        polarization=np.atleast_2d(p).astype(float),
        weight=np.array([w]),
        theta=np.array([theta]),
        dim=len(k),
    )


def test_make_rng_is_keyed():
    a = ou_field.make_rng(5, 1, 2).standard_normal(4)
    b = ou_field.make_rng(5, 1, 2).standard_normal(4)
    c = ou_field.make_rng(5, 1, 3).standard_normal(4)
    assert np.array_equal(a, b)
    assert not np.allclose(a, c)


def test_zero_step_is_identity(modes):
    state = ou_field.init_stationary(modes, 0.3, seed=1, n_fields=3)
    before = ou_field.snapshot(state)
    ou_field.advance(state, 0.0)
    assert np.array_equal(state.xi, before.xi) and state.time == 0.0
    with pytest.raises(ValueError):
        ou_field.advance(state, -1.0)


def test_amplitudes_stay_stationary(modes):
    state = ou_field.init_stationary(modes, 0.5, seed=2, n_fields=4000)
    for _ in range(20):
        ou_field.advance(state, 0.05)
    var = np.concatenate([state.xi, state.eta]).var(axis=0)
    # 8000 draws per mode; 5 sigma of the variance estimator
    assert np.all(np.abs(var - 1.0) < 5 * math.sqrt(2 / 8000))


def test_transition_matches_ou_autocorrelation():
    ms = single_mode([1.0, 0.0], [0.0, 1.0], theta=2.0)
    state = ou_field.init_stationary(ms, 0.5, seed=3, n_fields=40000)
    x0 = state.xi.copy()
    ou_field.advance(state, 0.1)
    rho = ou_field.transition_coefficient(2.0, 0.1, 0.5)
    assert rho == pytest.approx(math.exp(-0.8))
    assert np.mean(x0 * state.xi) == pytest.approx(rho, abs=4 / math.sqrt(40000))


@settings(max_examples=20, deadline=None)
@given(eps=st.floats(0.05, 2.0))
def test_velocity_scales_as_inverse_epsilon(eps):
    ms = build_modeset(SpectrumParams(ell0=5.0, ell1=0.2), ExponentChoice.BASE, 4, 2)
    ref = ou_field.init_stationary(ms, 1.0, seed=4)
    scaled = ou_field.FieldState(ms, ref.xi, ref.eta, eps)
    x = np.array([[0.3, -1.2], [2.0, 0.1]])
    assert np.allclose(ou_field.eval_velocity(scaled, x), ou_field.eval_velocity(ref, x) / eps)


def test_single_mode_velocity_and_divergence():
    k, p = np.array([2.0, 1.0]), np.array([0.6, 0.8])
    ms = single_mode(k, p, w=0.7)
    state = ou_field.FieldState(ms, np.array([[1.5]]), np.array([[-0.4]]), 1.0)
    x = np.array([0.2, -0.3])
    ph = k @ x
    want_u = 0.7 * (1.5 * math.cos(ph) - 0.4 * math.sin(ph)) * p
    want_div = 0.7 * (k @ p) * (-1.5 * math.sin(ph) - 0.4 * math.cos(ph))
    assert np.allclose(ou_field.eval_velocity(state, x)[0], want_u)
    assert ou_field.eval_divergence(state, x)[0] == pytest.approx(want_div)


def test_divergence_matches_finite_differences():
    ms = build_modeset(SpectrumParams(ell0=5.0, ell1=0.5, solenoidal_fraction=0.4), ExponentChoice.BASE, 6, 4)
    state = ou_field.init_stationary(ms, 1.0, seed=5, n_fields=2)
    x = np.array([0.7, -0.2])
    h = 1e-5
    fd = sum(
        (ou_field.eval_velocity(state, x + h * e)[:, i] - ou_field.eval_velocity(state, x - h * e)[:, i]) / (2 * h)
        for i, e in enumerate(np.eye(2))
    )
    assert np.allclose(ou_field.eval_divergence(state, x), fd, atol=1e-6)


def test_solenoidal_field_is_divergence_free(modes):
    state = ou_field.init_stationary(modes, 0.2, seed=6, n_fields=3)
    pts = ou_field.make_rng(0).uniform(-10, 10, (50, 2))
    assert np.max(np.abs(ou_field.eval_divergence(state, pts))) < 1e-10


def test_point_shapes(modes):
    state = ou_field.init_stationary(modes, 1.0, seed=7, n_fields=3)
    assert ou_field.eval_velocity(state, np.zeros(2)).shape == (3, 2)
    assert ou_field.eval_velocity(state, np.zeros((5, 2))).shape == (3, 5, 2)
    assert ou_field.eval_velocity(state, np.zeros((3, 5, 2))).shape == (3, 5, 2)
    with pytest.raises(ValueError):
        ou_field.eval_velocity(state, np.zeros(3))


def test_structure_function_vanishes_at_zero_separation(modes):
    est, se = ou_field.structure_function(None, np.zeros(2), n_samples=100, modeset=modes)
    assert np.all(est == 0.0) and np.all(se == 0.0)


@pytest.mark.parametrize("tau", [0.0, 0.3])
def test_structure_function_matches_mode_sum(modes, tau):
    r = np.array([1.0, 0.5])
    est, se = ou_field.structure_function(None, r, tau, n_samples=20000, seed=8, modeset=modes)
    want = modes.structure_function(r, tau)
    assert np.all(np.abs(est - want) <= 5 * se + 1e-12)


def test_velocity_is_gaussian(modes):
    state = ou_field.init_stationary(modes, 1.0, seed=9, n_fields=40000)
    u = ou_field.eval_velocity(state, np.array([0.4, 1.1]))[:, 0]
    z = (u - u.mean()) / u.std()
    assert np.mean(z**4) == pytest.approx(3.0, abs=0.15)
    assert u.var() == pytest.approx(modes.covariance(np.zeros(2))[0, 0], rel=0.05)


def test_snapshot_round_trip(tmp_path, modes):
    state = ou_field.init_stationary(modes, 0.25, seed=10, n_fields=2)
    path = tmp_path / "f.ouf"
    ou_field.dump_snapshot(state, path, index=1)
    back = ou_field.load_snapshot(path, 0.25)
    assert np.array_equal(back.modeset.k, modes.k)
    assert np.array_equal(back.modeset.theta, modes.theta)
    x = np.array([[1.0, 2.0], [-3.0, 0.5]])
    assert np.array_equal(ou_field.eval_velocity(back, x)[0], ou_field.eval_velocity(state, x)[1])


def test_load_rejects_foreign_file(tmp_path):
    path = tmp_path / "bad.ouf"
    path.write_bytes(b"nope" + bytes(20))
    with pytest.raises(ValueError):
        ou_field.load_snapshot(path)
