import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wptlab import manifold as mf
from wptlab.delta_scheme import (
    DeltaGeodesic,
    atomwise_distance,
    delta_leg_map,
    finite_leg_map,
    run_delta_scheme,
)
from wptlab.errors import ConjugatePointError
from wptlab.measure import AtomicMeasure
from wptlab.scenarios import sphere_delta_default, torus_delta

S2 = mf.sphere2()
ONE = np.array([1.0])


def test_flat_leg_map_is_identity():
    m, x, v, nu = torus_delta()
    out = delta_leg_map(m, x, v / 4, nu)
    np.testing.assert_array_equal(out.atoms, nu.atoms)
    np.testing.assert_array_equal(out.weights, nu.weights)


@pytest.mark.parametrize("theta", [0.2, 0.9, 1.5])
def test_orthogonal_atom_is_rescaled(theta):
    x = np.array([1.0, 0, 0])
    v = np.array([0, theta, 0])
    w = np.array([[0, 0, np.sin(theta) / theta]])
    out = delta_leg_map(S2, x, v, AtomicMeasure(w, ONE))
    assert np.linalg.norm(out.atoms[0]) == pytest.approx(1.0, rel=1e-13)


def test_zero_atom_unchanged():
    nu = AtomicMeasure(np.zeros((1, 3)), ONE)
    out = delta_leg_map(S2, np.array([0, 0, 1.0]), np.array([0.3, 0, 0]), nu)
    assert np.all(out.atoms == 0.0)


def test_conjugate_leg_rejected():
    nu = AtomicMeasure(np.array([[0, 0, 0.1]]), ONE)
    with pytest.raises(ConjugatePointError):
        delta_leg_map(S2, np.array([1.0, 0, 0]), np.array([0, np.pi, 0]), nu)


def test_speed_limit():
    with pytest.raises(ValueError):
        DeltaGeodesic(S2, np.array([1.0, 0, 0]), np.array([0, 1.6, 0]), 4)


@pytest.mark.parametrize("Q", [1, 3, 64])
def test_flat_scheme_is_exact(Q):
    m, x, v, nu = torus_delta()
    r = run_delta_scheme(DeltaGeodesic(m, x, v, Q), nu)
    np.testing.assert_array_equal(r["nu0"].atoms, nu.atoms)
    assert r["err"] == 0.0


def test_equator_quarter_arc():
    g = DeltaGeodesic(S2, np.array([1.0, 0, 0]), np.array([0, np.pi / 2, 0]), 64)
    r = run_delta_scheme(g, AtomicMeasure(np.array([[0, 0, 0.1]]), ONE))
    assert np.linalg.norm(r["nu0"].atoms[0] - [0, 0, 0.1]) <= 1e-3


def test_finite_s_cross_check():
    m, x, v, nu = sphere_delta_default()
    g = DeltaGeodesic(m, x, v, 8)
    start, vel = g.leg(5)
    y = g.point(6 / 8)
    atoms = nu.atoms - (nu.atoms @ y)[:, None] * y
    nu_y = AtomicMeasure(atoms, nu.weights)
    exact = delta_leg_map(m, start, vel, nu_y)
    approx = finite_leg_map(m, start, vel, nu_y, s=1e-3)
    assert atomwise_distance(m, exact, approx) <= 1e-3 * max(np.abs(atoms).max(), 1.0)


def test_sphere_convergence_first_order():
    m, x, v, nu = sphere_delta_default()
    errs = [run_delta_scheme(DeltaGeodesic(m, x, v, Q), nu)["err"] for Q in (8, 16, 32, 64)]
    for a, b in zip(errs, errs[1:]):
        assert b <= 0.75 * a
    order = -np.polyfit(np.log([8, 16, 32, 64]), np.log(errs), 1)[0]
    assert order >= 1.0 - 0.05


def test_weights_and_count_preserved():
    m, x, v, nu = sphere_delta_default()
    r = run_delta_scheme(DeltaGeodesic(m, x, v, 16), nu)
    assert len(r["nu0"]) == len(nu)
    assert np.array_equal(r["nu0"].weights, nu.weights)


unit = st.floats(-1, 1, allow_nan=False)


@settings(max_examples=40)
@given(st.floats(0.05, 1.5), unit, unit, unit, st.integers(2, 64))
def test_per_leg_norm_inflation(theta, a, b, c, Q):
    x = np.array([1.0, 0, 0])
    leg = np.array([0, theta / Q, 0])
    y = mf.exp_map(S2, x, leg)
    w = np.array([a, b, c])
    w = w - (w @ y) * y
    out = delta_leg_map(S2, x, leg, AtomicMeasure(w[None], ONE))
    n_in, n_out = np.linalg.norm(w), np.linalg.norm(out.atoms[0])
    assert n_out >= n_in * (1 - 1e-12)
    assert n_out <= n_in * (1 + (theta / Q) ** 2)
