"""Transport of tangent-space measures along a geodesic of point masses.

Along ``c(t) = delta_{gamma(t)}`` the tangent cone at ``c(t)`` is the space
of measures on the tangent plane at ``gamma(t)``.  One leg of the discrete
scheme pulls a measure at ``gamma_i(1)`` back to ``gamma_i(0)`` by the
inverse differential of the exponential map; composing the ``Q`` legs is
compared with the pushforward by Riemannian parallel transport.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import manifold as mf
from .errors import ConjugatePointError
from .measure import AtomicMeasure

MAX_SPEED = np.pi / 2


@dataclass(frozen=True)
class DeltaGeodesic:
    """``gamma(t) = exp_x(t v)`` cut into ``Q`` legs.

    The speed is limited to ``pi/2`` so the arc sits well inside a
    minimizing geodesic on the unit sphere.
    """

    manifold: mf.ManifoldKind
    x: np.ndarray
    v: np.ndarray
    Q: int = 1

    def __post_init__(self):
        m = self.manifold
        x = np.asarray(self.x, dtype=float)
        v = np.asarray(self.v, dtype=float)
        if int(self.Q) != self.Q or self.Q < 1:
            raise ValueError(f"Q must be a positive integer, got {self.Q!r}")
        if m.flat:
            if x.shape != (m.dim,) and not (m.dim == 1 and x.shape == ()):
                raise ValueError("base point does not match the manifold")
        else:
            if x.shape != (3,) or abs(np.linalg.norm(x) - 1.0) > 1e-12:
                raise ValueError("sphere base point must be a unit 3-vector")
            if abs(x @ v) > 1e-12:
                raise ValueError("velocity is not tangent at the base point")
            if np.linalg.norm(v) > MAX_SPEED:
                raise ValueError(f"speed {np.linalg.norm(v):.4f} exceeds pi/2")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "v", v)

    @property
    def speed(self) -> float:
        return float(np.linalg.norm(self.v))

    def point(self, t):
        return mf.exp_map(self.manifold, self.x, t * self.v)

    def velocity(self, t):
        """``gamma'(t)``, the parallel transport of ``v``."""
        return mf.geodesic_transport(self.manifold, self.x, t * self.v, self.v)

    def leg(self, i):
        """Start point and leg velocity ``gamma'(i/Q)/Q`` of leg ``i``."""
        t = i / self.Q
        return self.point(t), self.velocity(t) / self.Q


def delta_leg_map(m: mf.ManifoldKind, start, leg_velocity, nu: AtomicMeasure) -> AtomicMeasure:
    """Pull ``nu`` (atoms tangent at the leg's end) back to the leg's start.

    Each atom ``w`` goes to the unique ``z`` with ``dexp_{leg_velocity}(z) = w``.
    """
    if not m.flat and np.linalg.norm(leg_velocity) >= np.pi:
        raise ConjugatePointError("leg length reaches the conjugate radius pi")
    if len(nu) == 0:
        return nu
    z = mf.dexp_inverse(m, np.broadcast_to(start, nu.atoms.shape),
                        np.broadcast_to(leg_velocity, nu.atoms.shape), nu.atoms)
    return AtomicMeasure(z, nu.weights)


def finite_leg_map(m: mf.ManifoldKind, start, leg_velocity, nu: AtomicMeasure, s=1e-3):
    """Finite-``s`` version of :func:`delta_leg_map`.

    Moves the endpoint to ``exp_{gamma_i(1)}(s w)`` and reads the new
    initial velocity with ``log_map``; the difference quotient in ``s``
    tends to ``dexp^{-1} w``.
    """
    y = mf.exp_map(m, start, leg_velocity)
    ends = mf.exp_map(m, np.broadcast_to(y, nu.atoms.shape), s * nu.atoms)
    v = mf.log_map(m, np.broadcast_to(start, nu.atoms.shape), ends)
    return AtomicMeasure((v - leg_velocity) / s, nu.weights)


def atomwise_distance(m, a: AtomicMeasure, b: AtomicMeasure) -> float:
    """``sqrt(sum_k w_k |a_k - b_k|^2)`` for measures sharing weights."""
    if len(a) != len(b) or not np.array_equal(a.weights, b.weights):
        raise ValueError("atomwise distance needs matching atoms and weights")
    d = a.atoms - b.atoms
    sq = d**2 if d.ndim == 1 else np.sum(d**2, axis=-1)
    return float(np.sqrt(np.sum(a.weights * sq)))


def parallel_pullback(g: DeltaGeodesic, nu1: AtomicMeasure) -> AtomicMeasure:
    """Exact reverse parallel transport of ``nu1`` from ``gamma(1)`` to ``gamma(0)``."""
    m = g.manifold
    if len(nu1) == 0 or m.flat:
        return AtomicMeasure(nu1.atoms.copy(), nu1.weights)
    y = g.point(1.0)
    back = -g.velocity(1.0)
    shape = nu1.atoms.shape
    z = mf.geodesic_transport(m, np.broadcast_to(y, shape), np.broadcast_to(back, shape), nu1.atoms)
    return AtomicMeasure(z, nu1.weights)


def run_delta_scheme(g: DeltaGeodesic, nu1: AtomicMeasure) -> dict:
    """Compose the ``Q`` leg maps and compare with parallel transport.

    Returns ``{"nu0": ..., "err": ...}`` with ``err`` the atomwise distance
    between the scheme's ``nu0`` and the exact pullback.
    """
    m = g.manifold
    nu = nu1
    for i in range(g.Q - 1, -1, -1):
        start, vel = g.leg(i)
        nu = delta_leg_map(m, start, vel, nu)
    exact = parallel_pullback(g, nu1)
    return {"nu0": nu, "err": atomwise_distance(m, nu, exact), "exact": exact}
