"""Built-in scenarios with fixed constants.

Each grid scenario returns ``(mu0, phi0, eta1)`` on its default grid; the
delta scenarios return a :class:`~wptlab.delta_scheme.DeltaGeodesic` seed
``(manifold, x, v)`` together with the atomic measure to transport.
"""
from __future__ import annotations

import numpy as np

from . import manifold as mf
from .measure import AtomicMeasure, Density

GRID_SCENARIOS = ("s1-default", "t2-default")
DELTA_SCENARIOS = ("sphere-delta-default", "torus-delta")
SCENARIOS = GRID_SCENARIOS + DELTA_SCENARIOS

DEFAULT_RESOLUTION = {"s1-default": 256, "t2-default": 64}
DEFAULT_T = 1000


def s1_default(n=256, eta1="cos2x"):
    m = mf.circle(n)
    x = m.nodes[0]
    mu0 = Density.normalized(m, 1.0 + 0.3 * np.cos(x))
    phi0 = 0.2 * np.sin(x)
    return m, mu0, phi0, _eta1(m, eta1)


def t2_default(n=64, eta1="cos2x+siny"):
    m = mf.torus2(n)
    x, y = m.nodes
    mu0 = Density.normalized(m, 1.0 + 0.2 * np.cos(x) * np.cos(y))
    phi0 = 0.1 * np.sin(x) + 0.15 * np.sin(y)
    return m, mu0, phi0, _eta1(m, eta1)


_ETA = {
    "cos2x": lambda x, y: np.cos(2 * x),
    "sinx": lambda x, y: np.sin(x),
    "cos2x+siny": lambda x, y: np.cos(2 * x) + np.sin(y),
    "zero": lambda x, y: np.zeros_like(x),
}


def _eta1(m, name):
    if name not in _ETA:
        raise ValueError(f"unknown terminal potential {name!r}; choose from {sorted(_ETA)}")
    x = m.nodes[0]
    y = m.nodes[1] if m.dim > 1 else np.zeros_like(x)
    return _ETA[name](x, y)


def grid_scenario(name, n=None, eta1=None):
    """``(manifold, mu0, phi0, eta1)`` for a named grid scenario."""
    if name == "s1-default":
        return s1_default(n or 256, eta1 or "cos2x")
    if name == "t2-default":
        return t2_default(n or 64, eta1 or "cos2x+siny")
    raise ValueError(f"unknown grid scenario {name!r}")


_SPHERE_TILT = 0.4
_SPHERE_SPEED = 1.2
_ATOM_WEIGHTS = (0.3, 0.25, 0.2, 0.15, 0.1)


def sphere_delta_default():
    """Tilted great-circle arc of length 1.2 and a five-atom cloud at its end.

    The arc starts at ``x = (cos a, 0, sin a)`` and leaves along the
    equator direction ``(0, 1, 0)``; its plane is inclined by ``a = 0.4``.
    """
    m = mf.sphere2()
    a = _SPHERE_TILT
    x = np.array([np.cos(a), 0.0, np.sin(a)])
    v = _SPHERE_SPEED * np.array([0.0, 1.0, 0.0])
    y = mf.exp_map(m, x, v)
    t = -np.sin(_SPHERE_SPEED) * x + np.cos(_SPHERE_SPEED) * v / _SPHERE_SPEED
    n = np.cross(y, t)
    coeffs = np.array([(0.4, 0.2), (-0.1, 0.45), (0.25, -0.3), (-0.35, -0.2), (0.0, 0.0)])
    atoms = coeffs[:, :1] * t + coeffs[:, 1:] * n
    return m, x, v, AtomicMeasure(atoms, np.array(_ATOM_WEIGHTS))


def torus_delta():
    m = mf.torus2(64)
    x = np.array([0.5, 1.0])
    v = np.array([0.7, -0.4])
    coeffs = np.array([(0.4, 0.2), (-0.1, 0.45), (0.25, -0.3), (-0.35, -0.2), (0.0, 0.0)])
    return m, x, v, AtomicMeasure(coeffs, np.array(_ATOM_WEIGHTS))


def delta_scenario(name):
    if name == "sphere-delta-default":
        return sphere_delta_default()
    if name == "torus-delta":
        return torus_delta()
    raise ValueError(f"unknown delta scenario {name!r}")
