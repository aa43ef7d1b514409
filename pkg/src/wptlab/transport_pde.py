"""The smooth parallel transport equation along a geodesic.

Rearranged for the time derivative, the equation reads

    div(rho grad(d eta/dt)) = -div(rho Hess(eta) grad(phi)),

so each evaluation of the right-hand side is one weighted Poisson solve.
Time stepping is classical RK4 and ``eta`` is re-gauged to
``int eta dmu_t = 0`` after every step.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import manifold as mf
from .elliptic import solve_weighted_poisson
from .errors import ResolutionError
from .geodesic import GeodesicPath
from .measure import integrate, otto_inner

DRIFT_LIMIT = 1e-2
GUESSES = ("unweighted", "zero", "previous")


@dataclass
class TransportSolution:
    path: GeodesicPath
    times: np.ndarray
    eta: np.ndarray
    eta_rate: np.ndarray
    direction: str
    dt: float
    meta: dict = field(default_factory=dict)

    def grad(self, j) -> np.ndarray:
        return mf.grad(self.path.manifold, self.eta[j])

    def eta_at(self, t) -> np.ndarray:
        """Cubic Hermite interpolation of ``eta`` in time (gauge aside)."""
        n = len(self.times) - 1
        s = np.clip(t, 0.0, 1.0) * n
        j = min(int(np.floor(s + 1e-9)), n - 1)
        tau = s - j
        if abs(tau) < 1e-9:
            return self.eta[j]
        if abs(tau - 1.0) < 1e-9:
            return self.eta[j + 1]
        h = self.times[j + 1] - self.times[j]
        h00 = 2 * tau**3 - 3 * tau**2 + 1
        h10 = tau**3 - 2 * tau**2 + tau
        h01 = -2 * tau**3 + 3 * tau**2
        h11 = tau**3 - tau**2
        return (h00 * self.eta[j] + h10 * h * self.eta_rate[j]
                + h01 * self.eta[j + 1] + h11 * h * self.eta_rate[j + 1])

    def grad_at(self, t) -> np.ndarray:
        return mf.grad(self.path.manifold, self.eta_at(t))


def transport_rate(path: GeodesicPath, t, eta, x0=None) -> np.ndarray:
    """``d eta/dt`` at time ``t``."""
    m = path.manifold
    rho = path.density(t)
    H = mf.hess(m, eta)
    flux = rho.values * np.einsum("ab...,b...->a...", H, path.velocity(t))
    return solve_weighted_poisson(rho, -mf.div(m, flux), x0)


def solve_parallel_pde(path: GeodesicPath, eta_end, direction="backward", *, T=None,
                       initial_guess="unweighted", check_drift=True) -> TransportSolution:
    """Integrate the transport equation from one end of ``path`` to the other.

    ``direction="backward"`` imposes ``eta(1) = eta_end`` and integrates down
    to ``t = 0``; ``"forward"`` imposes ``eta(0) = eta_end``.
    ``initial_guess`` picks the seed for every elliptic solve: the unweighted
    solution, zero, or the previous stage's rate.
    """
    m = path.manifold
    eta_end = m.check_scalar(eta_end, "eta_end")
    if direction not in ("backward", "forward"):
        raise ValueError(f"direction must be 'backward' or 'forward', not {direction!r}")
    if initial_guess not in GUESSES:
        raise ValueError(f"initial_guess must be one of {GUESSES}")
    T = path.T if T is None else int(T)
    h = 1.0 / T
    times = np.arange(T + 1) / T
    order = range(T, -1, -1) if direction == "backward" else range(T + 1)
    order = list(order)
    sign = -1.0 if direction == "backward" else 1.0

    eta = np.empty((T + 1, *m.shape))
    rate = np.empty_like(eta)
    prev = None

    def f(t, e):
        nonlocal prev
        if initial_guess == "zero":
            x0 = np.zeros(m.shape)
        elif initial_guess == "previous":
            x0 = prev
        else:
            x0 = None
        prev = transport_rate(path, t, e, x0)
        return prev

    cur = eta_end - integrate(eta_end, path.density(times[order[0]]))
    for a, b in zip(order[:-1], order[1:]):
        t = times[a]
        dt = sign * h
        k1 = f(t, cur)
        k2 = f(t + dt / 2, cur + dt / 2 * k1)
        k3 = f(t + dt / 2, cur + dt / 2 * k2)
        k4 = f(t + dt, cur + dt * k3)
        eta[a], rate[a] = cur, k1
        cur = cur + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        cur = cur - integrate(cur, path.density(times[b]))
    last = order[-1]
    eta[last], rate[last] = cur, f(times[last], cur)
    sol = TransportSolution(path, times, eta, rate, direction, h)
    if check_drift:
        drift = pairing_drift(path, sol)
        sol.meta["drift"] = drift
        if drift > DRIFT_LIMIT:
            raise ResolutionError(
                f"resolution insufficient: transport norm drifts by {drift:.2e}"
            )
    return sol


def pairing_series(path: GeodesicPath, sol_a: TransportSolution,
                   sol_b: TransportSolution) -> np.ndarray:
    """``t_j -> int <grad eta_a, grad eta_b> dmu_{t_j}``."""
    return np.array([
        otto_inner(path.density(t), sol_a.grad(j), sol_b.grad(j))
        for j, t in enumerate(sol_a.times)
    ])


def pairing_drift(path: GeodesicPath, sol: TransportSolution) -> float:
    """Relative spread of the transported energy over the time samples."""
    s = pairing_series(path, sol, sol)
    ref = s[-1] if sol.direction == "backward" else s[0]
    if ref == 0.0:
        return float(np.abs(s).max())
    return float(np.abs(s - ref).max() / abs(ref))


def pairing_identity_check(path: GeodesicPath, sol: TransportSolution, f, f_t=None) -> float:
    """Largest defect of the transported pairing derivative identity.

    For ``P(t) = int <grad f, grad eta> dmu_t`` checks, at interior samples,

        dP/dt = int <grad f_t, grad eta> dmu_t + int Hess f(grad eta, grad phi) dmu_t

    with ``dP/dt`` by centred differences.  ``f`` and ``f_t`` are callables
    returning grid fields; ``f_t`` defaults to a centred difference of ``f``.
    """
    m = path.manifold
    times = sol.times
    h = sol.dt
    if f_t is None:
        def f_t(t):
            return (f(t + h) - f(t - h)) / (2 * h)

    P = np.array([otto_inner(path.density(t), mf.grad(m, f(t)), sol.grad(j))
                  for j, t in enumerate(times)])
    worst = 0.0
    for j in range(1, len(times) - 1):
        t = times[j]
        mu = path.density(t)
        g_eta = sol.grad(j)
        lhs = (P[j + 1] - P[j - 1]) / (2 * h)
        term1 = otto_inner(mu, mf.grad(m, f_t(t)), g_eta)
        H = mf.hess(m, f(t))
        Hv = np.einsum("ab...,b...->a...", H, path.velocity(t))
        term2 = otto_inner(mu, g_eta, Hv)
        worst = max(worst, abs(lhs - term1 - term2))
    return worst
