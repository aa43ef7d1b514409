"""Residual of the weak parallel transport identity.

For a triple ``(V, V0, V1)`` along a geodesic and a test function
``f(t, x)`` the identity is

    int <grad f(1), V1> dmu_1 - int <grad f(0), V0> dmu_0
        = int_0^1 int <grad df/dt, V> + Hess f(V, grad phi) dmu_t dt.

Test functions are ``t**a * trig(k . x)`` with closed-form derivatives;
the time integral uses the trapezoid rule on whatever samples ``V`` carries.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import manifold as mf
from .measure import otto_inner

TIME_POWERS = (0, 1, 2)

# wavevectors for the torus battery: 10 directions, components at most 3
_TORUS_MODES = ((1, 0), (0, 1), (1, 1), (1, -1), (2, 0), (0, 2), (2, 1), (1, 2), (3, 0), (0, 3))
_CIRCLE_MAX_MODE = 10


@dataclass(frozen=True)
class TestFunction:
    """``f(t, x) = t**power * trig(k . x)`` with ``trig`` in {cos, sin, 1}."""

    power: int
    k: tuple
    kind: str

    __test__ = False  # not a pytest class

    def _phase(self, m):
        k = np.array(self.k, dtype=float).reshape(m.dim, *[1] * m.dim)
        return np.sum(k * m.nodes, axis=0), k

    def _time(self, t, deriv=0):
        a = self.power
        if deriv == 0:
            return t**a
        return a * t ** (a - 1) if a > 0 else 0.0

    def _spatial(self, m):
        theta, k = self._phase(m)
        if self.kind == "const":
            return np.ones(m.shape), np.zeros((m.dim, *m.shape)), np.zeros((m.dim, m.dim, *m.shape))
        c, s = np.cos(theta), np.sin(theta)
        if self.kind == "cos":
            val, dval = c, -k * s
        else:
            val, dval = s, k * c
        kk = k[:, None] * k[None, :]
        return val, dval, -kk * val

    def value(self, m, t):
        return self._time(t) * self._spatial(m)[0]

    def grad(self, m, t, deriv=0):
        return self._time(t, deriv) * self._spatial(m)[1]

    def hess(self, m, t):
        return self._time(t) * self._spatial(m)[2]


class TestBattery(list):
    """A non-empty list of :class:`TestFunction`."""

    __test__ = False

    def __init__(self, functions):
        super().__init__(functions)
        if not self:
            raise ValueError("test battery must not be empty")


def default_battery(m: mf.ManifoldKind) -> TestBattery:
    """63 test functions: three time powers times 21 spatial modes."""
    if m.dim == 1:
        modes = [(k,) for k in range(1, _CIRCLE_MAX_MODE + 1)]
    else:
        modes = list(_TORUS_MODES)
    spatial = [((0,) * m.dim, "const")]
    for k in modes:
        spatial += [(k, "cos"), (k, "sin")]
    return TestBattery(TestFunction(a, k, kind) for a in TIME_POWERS for k, kind in spatial)


def weak_defects(path, V, V0, V1, battery=None, times=None) -> np.ndarray:
    """Signed defect ``LHS - RHS`` for every battery element."""
    m = path.manifold
    battery = default_battery(m) if battery is None else battery
    times = path.times if times is None else np.asarray(times, dtype=float)
    V = np.asarray(V, dtype=float)
    if V.shape != (len(times), m.dim, *m.shape):
        raise ValueError(f"V has shape {V.shape}, expected {(len(times), m.dim, *m.shape)}")
    mu0, mu1 = path.density(times[0]), path.density(times[-1])
    spatial = [f._spatial(m) for f in battery]
    integrand = np.empty((len(battery), len(times)))
    for j, t in enumerate(times):
        w = path.density(t).values * m.cell_volume
        vel = path.velocity(t)
        Vw = V[j] * w
        for n, (f, (_, g, H)) in enumerate(zip(battery, spatial)):
            Hv = np.einsum("ab...,b...->a...", H, vel)
            integrand[n, j] = np.sum((f._time(t, 1) * g + f._time(t) * Hv) * Vw)
    out = np.empty(len(battery))
    for n, (f, (_, g, _)) in enumerate(zip(battery, spatial)):
        lhs = otto_inner(mu1, f._time(times[-1]) * g, V1) - otto_inner(mu0, f._time(times[0]) * g, V0)
        out[n] = lhs - np.trapezoid(integrand[n], times)
    return out


def weak_residual(path, V, V0, V1, battery=None, times=None) -> float:
    """Largest absolute defect of the weak identity over ``battery``.

    ``V`` has one vector field per entry of ``times`` (default: the path's
    sample times), which must run from 0 to 1.
    """
    return float(np.abs(weak_defects(path, V, V0, V1, battery, times)).max())
