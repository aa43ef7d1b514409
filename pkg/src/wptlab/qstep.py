"""Intrinsic Q-step parallel transport along a geodesic of densities.

The geodesic is cut into ``Q`` legs.  On leg ``i`` the rescaled potential
``phi_i = phi(i/Q) / Q`` generates maps ``F_{i,u}(x) = exp_x(u grad phi_i(x))``
pushing ``mu_{i,0}`` along the leg.  A gradient field ``grad sigma`` at the
start of the leg is carried by ``dexp`` to the field ``W_sigma(u)`` and
projected onto gradients to give ``L_sigma(u)``; the leg operator is
``A_i(grad sigma) = L_sigma(1)`` with approximate inverse
``B_i(grad f) = grad(f o F_{i,1})``.  Transport runs backwards from ``t = 1``,
inverting one ``A_i`` per leg.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import manifold as mf
from .elliptic import project_to_gradients
from .errors import SubdivisionError
from .geodesic import GeodesicPath
from .measure import Density, jacobian_det, otto_inner, otto_norm, pushforward_density
from .weak_residual import default_battery

U_SAMPLES = (0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0)
LEG_JACOBIAN_FLOOR = 0.5
MAX_INVERSION_STEPS = 200


def _to_points(X):
    """Field layout ``(dim, ...)`` to pointwise layout."""
    return X[0] if X.shape[0] == 1 else np.moveaxis(X, 0, -1)


def _to_field(P, dim):
    return P[None] if dim == 1 else np.moveaxis(P, -1, 0)


@dataclass
class LegState:
    u: float
    F: np.ndarray
    dF: np.ndarray
    preimages: np.ndarray
    density: Density


class Leg:
    """One segment ``c_i(u) = c((i + u) / Q)`` of the subdivided geodesic."""

    def __init__(self, path: GeodesicPath, index: int, Q: int):
        m = path.manifold
        self.manifold = m
        self.index = index
        self.Q = Q
        self.t0 = index / Q
        self.t1 = (index + 1) / Q
        self.phi = path.potential(self.t0) / Q
        self.grad_phi = mf.grad(m, self.phi)
        self.hess_phi = mf.hess(m, self.phi)
        # a leg with zero potential is the identity: W = L = grad sigma, B = I
        self.trivial = not np.any(self.grad_phi)
        self.mu0 = path.density(self.t0)
        self._states: dict[float, LegState] = {}
        self.endpoint_mismatch = float(
            np.abs(self.state(1.0).density.values - path.density(self.t1).values).max()
        )

    def maps(self, u):
        """``F_{i,u}`` on the grid and its Jacobian."""
        m = self.manifold
        F = _to_field(mf.exp_map(m, _to_points(m.nodes), _to_points(u * self.grad_phi)), m.dim)
        dF = np.eye(m.dim).reshape(m.dim, m.dim, *[1] * m.dim) + u * self.hess_phi
        return F, dF

    def state(self, u) -> LegState:
        key = round(float(u), 12)
        if key not in self._states:
            m = self.manifold
            F, dF = self.maps(u)
            if key == 0.0 or self.trivial:
                st = LegState(key, F, dF, m.nodes.copy(), self.mu0)
            else:
                det = jacobian_det(dF)
                if det.min() < LEG_JACOBIAN_FLOOR:
                    raise SubdivisionError(
                        f"leg {self.index}: Jacobian {det.min():.3f} below "
                        f"{LEG_JACOBIAN_FLOOR}; increase Q"
                    )
                mu, x = pushforward_density(self.mu0, F, dF, return_preimages=True)
                st = LegState(u, F, dF, x, mu)
            self._states[key] = st
        return self._states[key]

    def density(self, u) -> Density:
        return self.state(u).density

    def __repr__(self):
        return f"Leg({self.index}/{self.Q})"


def build_legs(path: GeodesicPath, Q: int) -> list[Leg]:
    """Subdivide ``path`` into ``Q`` legs.

    Leg endpoints are evaluated directly on the path, so ``Q`` need not
    divide the number of time samples.
    """
    if int(Q) != Q or Q < 1:
        raise ValueError(f"Q must be a positive integer, got {Q!r}")
    return [Leg(path, i, int(Q)) for i in range(int(Q))]


def leg_W(leg: Leg, grad_sigma, u) -> np.ndarray:
    """``W_sigma(u)`` sampled on the grid, ``y = F_{i,u}(x)``.

    At ``y`` the field is ``dexp_{u grad phi_i(x)}(grad sigma(x))``; the
    preimage ``x`` comes from the leg's inverse map.
    """
    m = leg.manifold
    grad_sigma = m.check_vector(grad_sigma)
    st = leg.state(u)
    if st.u == 0.0 or leg.trivial:
        return grad_sigma.copy()
    vals = mf.interpolate(m, np.concatenate([grad_sigma, leg.grad_phi]), st.preimages)
    w, v = vals[: m.dim], u * vals[m.dim :]
    x = st.preimages
    return _to_field(mf.dexp(m, _to_points(x), _to_points(v), _to_points(w)), m.dim)


def leg_L(leg: Leg, grad_sigma, u) -> np.ndarray:
    """``L_sigma(u)``: ``W_sigma(u)`` projected onto gradients in ``L^2(mu_{i,u})``."""
    if leg.trivial:
        return leg_W(leg, grad_sigma, u)
    return project_to_gradients(leg.density(u), leg_W(leg, grad_sigma, u))[0]


def leg_A(leg: Leg, grad_sigma) -> np.ndarray:
    return leg_L(leg, grad_sigma, 1.0)


def leg_B(leg: Leg, grad_f) -> np.ndarray:
    """``grad(f o F_{i,1})`` on ``mu_{i,0}`` for a gradient field ``grad f`` on ``mu_{i,1}``."""
    m = leg.manifold
    if leg.trivial:
        return m.check_vector(grad_f).copy()
    _, f = project_to_gradients(leg.density(1.0), grad_f)
    st = leg.state(1.0)
    return mf.grad(m, mf.interpolate(m, f, st.F))


class Inversion(NamedTuple):
    field: np.ndarray
    iterations: int
    residual: float


def invert_leg_A(leg: Leg, v, tol=1e-10, maxiter=MAX_INVERSION_STEPS) -> Inversion:
    """Solve ``A_i(grad sigma) = v`` by the ``B_i``-preconditioned fixed point.

    Iterates ``u <- u + B_i(v - A_i(u))`` from ``u = B_i(v)`` until
    ``|A_i(u) - v|`` in ``L^2(mu_{i,1})`` is at most ``tol``.
    """
    mu1 = leg.density(1.0)
    u = leg_B(leg, v)
    for it in range(1, maxiter + 1):
        r = v - leg_A(leg, u)
        res = otto_norm(mu1, r)
        if res <= tol:
            return Inversion(u, it, res)
        u = u + leg_B(leg, r)
    raise SubdivisionError(
        f"leg {leg.index}: inversion did not converge in {maxiter} iterations "
        f"(residual {res:.2e}); subdivision too coarse, increase Q"
    )


@dataclass
class SchemeOutput:
    """Discrete transport ``V_Q(t)`` along the legs.

    ``fields[k]`` is ``V_Q(times[k])`` in the scale of the input;
    ``densities[k]`` is the leg density it lives on.
    """

    path: GeodesicPath
    Q: int
    times: np.ndarray
    fields: np.ndarray
    densities: list
    V0: np.ndarray
    V1: np.ndarray
    input_norm: float
    legs: list = field(repr=False, default_factory=list)
    sigmas: list = field(repr=False, default_factory=list)
    iterations: list = field(default_factory=list)

    def unit_norms(self) -> np.ndarray:
        """``|V_Q(t)|`` for the unit-normalised input."""
        if self.input_norm == 0.0:
            return np.zeros(len(self.times))
        return np.array([otto_norm(mu, V) for mu, V in zip(self.densities, self.fields)]) / self.input_norm

    def norm_drift(self) -> float:
        """``sup_t | |V_Q(t)| - 1 |`` for the unit-normalised input."""
        if self.input_norm == 0.0:
            return 0.0
        return float(np.abs(self.unit_norms() - 1.0).max())


def run_scheme(path: GeodesicPath, grad_eta1, Q: int, *, tol=1e-12,
               u_samples=U_SAMPLES) -> SchemeOutput:
    """Backward recursion through the inverted leg operators.

    The input is scaled to unit Otto norm internally.  ``V_Q(1)`` is the
    input itself; on leg ``i`` the output is ``L_{sigma_i}(u)`` at each
    ``u`` in ``u_samples`` (the ``u = 1`` value is the next leg's ``u = 0``).
    """
    m = path.manifold
    grad_eta1 = m.check_vector(grad_eta1, "grad_eta1")
    mu1 = path.density(1.0)
    norm = otto_norm(mu1, grad_eta1)
    us = sorted(set(float(u) for u in u_samples) | {0.0})
    us = [u for u in us if u < 1.0]
    times = np.array([(i + u) / Q for i in range(Q) for u in us] + [1.0])

    if norm == 0.0:
        zeros = np.zeros((len(times), m.dim, *m.shape))
        dens = [path.density(t) for t in times]
        return SchemeOutput(path, Q, times, zeros, dens, zeros[0], grad_eta1.copy(), 0.0)

    legs = build_legs(path, Q)
    target = grad_eta1 / norm
    sigmas = [None] * Q
    iterations = [0] * Q
    for i in range(Q - 1, -1, -1):
        inv = invert_leg_A(legs[i], target, tol)
        sigmas[i], iterations[i] = inv.field, inv.iterations
        target = inv.field

    fields, dens = [], []
    for i, leg in enumerate(legs):
        for u in us:
            fields.append(sigmas[i] if u == 0.0 else leg_L(leg, sigmas[i], u))
            dens.append(leg.density(u))
    fields = np.array(fields) * norm
    fields = np.concatenate([fields, grad_eta1[None]])
    dens.append(mu1)
    return SchemeOutput(path, Q, times, fields, dens, fields[0], grad_eta1.copy(), norm,
                        legs, sigmas, iterations)


def compare_to_pde(output: SchemeOutput, sol, interval=(0.0, 1.0)) -> dict:
    """Distances between the scheme and a PDE transport solution.

    ``err_path`` is the ``L^2([a, b]; L^2(mu_t))`` distance over ``interval``
    (trapezoid rule on the scheme's samples) and ``err_0`` the
    ``L^2(mu_0)`` distance of the endpoint fields at ``t = 0``.
    """
    path = output.path
    a, b = interval
    sel = [k for k, t in enumerate(output.times) if a - 1e-12 <= t <= b + 1e-12]
    ts = output.times[sel]
    sq = np.array([
        otto_norm(path.density(output.times[k]), output.fields[k] - sol.grad_at(output.times[k])) ** 2
        for k in sel
    ])
    err_path = float(np.sqrt(np.trapezoid(sq, ts))) if len(ts) > 1 else 0.0
    err_0 = otto_norm(path.density(0.0), output.V0 - sol.grad_at(0.0))
    return {"err_path": err_path, "err_0": err_0}


def _transition_deviation(leg: Leg, u) -> float:
    """``max_x |T_{i,u,x} - I|`` with ``T = dF_{i,u}^{-1} dexp_{u grad phi_i}``."""
    m = leg.manifold
    _, dF = leg.maps(u)
    D = np.moveaxis(dF, (0, 1), (-2, -1))
    E = np.empty_like(D)
    pts = _to_points(m.nodes)
    v = _to_points(u * leg.grad_phi)
    for b in range(m.dim):
        e = np.zeros((m.dim, *m.shape))
        e[b] = 1.0
        E[..., :, b] = np.moveaxis(
            _to_field(mf.dexp(m, pts, v, _to_points(e)), m.dim), 0, -1
        )
    T = np.linalg.solve(D, E)
    dev = T - np.eye(m.dim)
    return float(np.linalg.norm(dev, ord=2, axis=(-2, -1)).max())


def _jacobi_derivative(leg: Leg, grad_sigma, u, du=1e-4) -> float:
    """``|D_u W_sigma(u)|`` along the leg's geodesics, by differences in ``u``.

    In flat charts the covariant derivative is the componentwise one; the
    field is followed in Lagrangian form so no resampling enters.
    """
    m = leg.manifold
    pts = _to_points(m.nodes)
    w = _to_points(grad_sigma)

    def W_lagr(s):
        return mf.dexp(m, pts, _to_points(s * leg.grad_phi), w)

    lo, hi = max(u - du, 0.0), min(u + du, 1.0)
    d = _to_field((W_lagr(hi) - W_lagr(lo)) / (hi - lo), m.dim)
    return otto_norm(leg.mu0, d)


@dataclass
class SchemeDiagnostics:
    """Per-leg estimates; every quantity is relative to unit input norm."""

    Q: int
    wl_gap: np.ndarray
    ab_minus_identity: np.ndarray
    jacobi_derivative: np.ndarray
    transition_deviation: np.ndarray
    norm_drift: np.ndarray
    velocity_component: np.ndarray
    iterations: np.ndarray

    def summary(self) -> dict:
        return {
            "Q": self.Q,
            "wl_gap": float(self.wl_gap.max()),
            "ab_minus_identity": float(self.ab_minus_identity.max()),
            "jacobi_derivative": float(self.jacobi_derivative.max()),
            "transition_deviation": float(self.transition_deviation.max()),
            "norm_drift": float(self.norm_drift.max()),
            "velocity_component": float(np.abs(self.velocity_component).max()),
            "max_iterations": int(self.iterations.max()),
        }


def ab_minus_identity(leg: Leg, battery=None) -> float:
    """Largest ``|(A_i B_i - I) grad f| / |grad f|`` over battery gradients."""
    m = leg.manifold
    mu1 = leg.density(1.0)
    battery = default_battery(m) if battery is None else battery
    worst = 0.0
    seen = set()
    for f in battery:
        key = (f.k, f.kind)
        if f.kind == "const" or key in seen:
            continue
        seen.add(key)
        g = f.grad(m, 1.0) if f.power == 0 else f._spatial(m)[1]
        n = otto_norm(mu1, g)
        if n == 0.0:
            continue
        d = leg_A(leg, leg_B(leg, g)) - g
        worst = max(worst, otto_norm(mu1, d) / n)
    return worst


def scheme_diagnostics(output: SchemeOutput, legs=None, battery=None,
                       u_samples=U_SAMPLES) -> SchemeDiagnostics:
    """Per-leg diagnostics of a scheme run.

    ``wl_gap``: ``max_u |W - L| / |grad sigma_i|``; ``ab_minus_identity``:
    sampled operator norm of ``A_i B_i - I``; ``jacobi_derivative``:
    ``max_u |D_u W|``; ``transition_deviation``: ``max |T - I|``;
    ``norm_drift``: ``| |grad sigma_i| - 1 |``; ``velocity_component``:
    the component of ``V_Q(t)`` along ``grad phi(t)`` at each output time.
    """
    Q = output.Q
    legs = output.legs if legs is None else legs
    path = output.path
    n_legs = len(legs)
    zeros = np.zeros(n_legs)
    if output.input_norm == 0.0 or not output.sigmas:
        return SchemeDiagnostics(Q, zeros, zeros.copy(), zeros.copy(), zeros.copy(),
                                 zeros.copy(), np.zeros(len(output.times)),
                                 np.zeros(n_legs, dtype=int))
    gap, abi, jac, trans, drift = (np.zeros(n_legs) for _ in range(5))
    for i, leg in enumerate(legs):
        s = output.sigmas[i]
        ns = otto_norm(leg.mu0, s)
        drift[i] = abs(ns - 1.0)
        for u in u_samples:
            if u == 0.0:
                continue
            W = leg_W(leg, s, u)
            mu = leg.density(u)
            L = project_to_gradients(mu, W)[0]
            gap[i] = max(gap[i], otto_norm(mu, W - L) / ns)
        abi[i] = ab_minus_identity(leg, battery)
        jac[i] = max(_jacobi_derivative(leg, s, u) for u in u_samples) / ns
        trans[i] = max(_transition_deviation(leg, u) for u in u_samples)
    vel = []
    for t, V in zip(output.times, output.fields):
        mu = path.density(t)
        g = path.velocity(t)
        gn = otto_norm(mu, g)
        vel.append(otto_inner(mu, V, g) / (gn * output.input_norm) if gn > 0 else 0.0)
    return SchemeDiagnostics(Q, gap, abi, jac, trans, drift, np.array(vel),
                             np.array(output.iterations))
