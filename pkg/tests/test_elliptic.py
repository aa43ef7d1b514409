import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wptlab import manifold as mf
from wptlab.elliptic import project_to_gradients, solve_weighted_poisson, weighted_laplacian
from wptlab.errors import IncompatibleRHSError
from wptlab.measure import Density, integrate, otto_inner, otto_norm

C = mf.circle(256)
T2 = mf.torus2(64)
XT, YT = T2.nodes
MU_T = Density.normalized(T2, 1.0 + 0.2 * np.cos(XT) * np.cos(YT))


def test_zero_rhs():
    assert np.abs(solve_weighted_poisson(Density.uniform(C), np.zeros(C.shape))).max() == 0.0


def test_uniform_circle_example():
    x = C.nodes[0]
    u = solve_weighted_poisson(Density.uniform(C), -np.cos(x) / (2 * np.pi))
    np.testing.assert_allclose(u, np.cos(x), atol=1e-10)


def test_residual_and_gauge():
    rho = Density.normalized(C, 1.0 + 0.3 * np.cos(C.nodes[0]))
    g = np.sin(3 * C.nodes[0]) + 0.2 * np.cos(C.nodes[0])
    u = solve_weighted_poisson(rho, g)
    assert np.abs(weighted_laplacian(rho, u) - g).max() <= 1e-10
    assert abs(integrate(u, rho)) <= 1e-12


def test_incompatible_rhs():
    with pytest.raises(IncompatibleRHSError):
        solve_weighted_poisson(Density.uniform(C), np.ones(C.shape))


def test_projection_of_gradient_is_identity():
    W = mf.grad(T2, np.sin(XT) * np.cos(2 * YT))
    G, p = project_to_gradients(MU_T, W)
    np.testing.assert_allclose(G, W, atol=1e-10)
    assert abs(integrate(p, MU_T)) <= 1e-12


def test_projection_kills_uniform_curl():
    psi = np.sin(XT) * np.sin(YT)
    g = mf.grad(T2, psi)
    W = np.array([-g[1], g[0]])
    G, _ = project_to_gradients(Density.uniform(T2), W)
    assert np.abs(G).max() <= 1e-10


def test_projection_pythagoras():
    W = np.array([np.sin(YT), np.zeros(T2.shape)])
    G, _ = project_to_gradients(MU_T, W)
    lhs = otto_norm(MU_T, W - G) ** 2 + otto_norm(MU_T, G) ** 2
    assert lhs == pytest.approx(otto_norm(MU_T, W) ** 2, abs=1e-8)
    # residual orthogonal to battery gradients
    for f in (np.cos(XT), np.sin(XT + YT), np.cos(2 * YT)):
        gf = mf.grad(T2, f)
        assert abs(otto_inner(MU_T, W - G, gf)) <= 1e-8 * otto_norm(MU_T, W) * otto_norm(MU_T, gf)


def test_circle_closed_form_projection():
    x = C.nodes[0]
    rho = Density.normalized(C, 1.0 + 0.3 * np.cos(x))
    W = (0.5 + np.sin(2 * x))[None]
    G, _ = project_to_gradients(rho, W)
    inv = 1.0 / rho.values
    c = W[0].mean() / inv.mean()
    np.testing.assert_allclose(G[0], W[0] - c * inv, atol=1e-9)


fields = st.integers(0, 2**32 - 1)


def _smooth_field(seed, m):
    rng = np.random.default_rng(seed)
    x, y = m.nodes
    out = np.zeros((2, *m.shape))
    for a in range(2):
        for kx, ky in [(0, 0), (1, 0), (0, 1), (1, 1), (2, -1)]:
            ph = rng.uniform(0, 2 * np.pi)
            out[a] += rng.standard_normal() * np.cos(kx * x + ky * y + ph)
    return out


@settings(max_examples=10, deadline=None)
@given(fields, fields)
def test_projection_properties(s1, s2):
    m = mf.torus2(32)
    mu = Density.normalized(m, 1.0 + 0.2 * np.cos(m.nodes[0]) * np.cos(m.nodes[1]))
    W, V = _smooth_field(s1, m), _smooth_field(s2, m)
    PW = project_to_gradients(mu, W)[0]
    PV = project_to_gradients(mu, V)[0]
    np.testing.assert_allclose(project_to_gradients(mu, PW)[0], PW, atol=1e-10)
    assert otto_inner(mu, PW, V) == pytest.approx(otto_inner(mu, W, PV), abs=1e-9)
    assert otto_norm(mu, PW) <= otto_norm(mu, W) + 1e-10
