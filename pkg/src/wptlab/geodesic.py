"""Wasserstein geodesics generated from an initial density and potential.

A geodesic is ``mu_t = (F_t)_* mu_0`` with ``F_t(x) = exp_x(t grad phi_0)``.
Densities are evaluated lazily at any time in the extended interval
``[-extension, 1 + extension]`` and cached; the velocity potential ``phi(t)``
is recovered from the continuity equation with a centred time difference of
the densities.
"""
from __future__ import annotations

import numpy as np

from . import manifold as mf
from .elliptic import solve_weighted_poisson
from .errors import GeodesicRegimeError
from .measure import Density, integrate, jacobian_det, pushforward_density

EXTENSION = 0.1


def _key(t):
    return round(float(t), 12)


class GeodesicPath:
    """Time-sampled Wasserstein geodesic on a grid manifold.

    Samples sit at ``t_j = j / T``; ``dt = 1 / T`` is also the step of the
    centred difference used to recover potentials.  The path is defined on
    the extended interval ``[-extension, 1 + extension]`` and the portion on
    ``[0, 1]`` is what the transport code uses.
    """

    def __init__(self, rho0: Density, phi0, T: int = 1000, *, extension=EXTENSION):
        m = rho0.manifold
        if not m.has_grid:
            raise ValueError("geodesics of absolutely continuous measures need a grid manifold")
        if T < 2:
            raise ValueError("T must be at least 2")
        if 2.0 / T > extension:
            raise ValueError("extension too short for the time difference stencil")
        self.manifold = m
        self.rho0 = rho0
        self.phi0 = m.check_scalar(phi0, "phi0").copy()
        self.T = int(T)
        self.extension = float(extension)
        self._grad_phi0 = mf.grad(m, self.phi0)
        self._hess_phi0 = mf.hess(m, self.phi0)
        self._densities: dict[float, Density] = {}
        self._potentials: dict[float, np.ndarray] = {}

    @property
    def dt(self) -> float:
        return 1.0 / self.T

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.T + 1) / self.T

    @property
    def extended_interval(self) -> tuple[float, float]:
        return (-self.extension, 1.0 + self.extension)

    @property
    def is_constant(self) -> bool:
        return not np.any(self._grad_phi0)

    def _check_time(self, t, pad=0.0):
        lo, hi = self.extended_interval
        if not (lo + pad - 1e-12 <= t <= hi - pad + 1e-12):
            raise ValueError(f"time {t} outside the path's extended interval")

    def flow(self, t):
        """Grid map ``F_t`` and its Jacobian ``dF_t``."""
        m = self.manifold
        pts = np.moveaxis(m.nodes, 0, -1)
        v = np.moveaxis(t * self._grad_phi0, 0, -1)
        if m.dim == 1:
            F = mf.exp_map(m, pts[..., 0], v[..., 0])[None]
        else:
            F = np.moveaxis(mf.exp_map(m, pts, v), -1, 0)
        dF = np.eye(m.dim).reshape(m.dim, m.dim, *[1] * m.dim) + t * self._hess_phi0
        return F, dF

    def jacobian_range(self, t0=None, t1=None, samples=241):
        """Min and max of ``det dF_t`` over nodes and times in ``[t0, t1]``."""
        lo, hi = self.extended_interval
        t0 = lo if t0 is None else t0
        t1 = hi if t1 is None else t1
        dets = [jacobian_det(self.flow(t)[1]) for t in np.linspace(t0, t1, samples)]
        return float(min(d.min() for d in dets)), float(max(d.max() for d in dets))

    def density(self, t) -> Density:
        self._check_time(t)
        k = _key(t)
        if k not in self._densities:
            if k == 0.0 or self.is_constant:
                self._densities[k] = self.rho0
            else:
                F, dF = self.flow(t)
                self._densities[k] = pushforward_density(self.rho0, F, dF)
        return self._densities[k]

    def density_rate(self, t, order=2) -> np.ndarray:
        """Centred difference of the density in time with step ``dt``."""
        h = self.dt
        if order == 2:
            self._check_time(t, h)
            return (self.density(t + h).values - self.density(t - h).values) / (2 * h)
        if order == 4:
            self._check_time(t, 2 * h)
            d = self.density
            return (
                -d(t + 2 * h).values + 8 * d(t + h).values - 8 * d(t - h).values
                + d(t - 2 * h).values
            ) / (12 * h)
        raise ValueError("order must be 2 or 4")

    def potential(self, t) -> np.ndarray:
        """Velocity potential ``phi(t)``, normalised by ``int phi dmu_t = 0``."""
        k = _key(t)
        if k not in self._potentials:
            m = self.manifold
            if self.is_constant:
                self._potentials[k] = np.zeros(m.shape)
            else:
                rate = self.density_rate(t)
                rate = rate - rate.mean()
                self._potentials[k] = solve_weighted_poisson(self.density(t), -rate)
        return self._potentials[k]

    def velocity(self, t) -> np.ndarray:
        return mf.grad(self.manifold, self.potential(t))

    def sample(self, j):
        t = self.times[j]
        return self.density(t), self.potential(t)


def generate_geodesic(mu0: Density, phi0, T: int = 1000, *, extension=EXTENSION,
                      check_times=11) -> GeodesicPath:
    """Build the geodesic generated by ``(mu0, phi0)`` sampled at ``T + 1`` times.

    Raises :class:`GeodesicRegimeError` unless the flow stays a
    diffeomorphism on the whole extended interval.  The largest continuity
    residual over ``check_times`` equispaced sample times is stored on the
    path as ``continuity_residual``.
    """
    path = GeodesicPath(mu0, phi0, T, extension=extension)
    lo, _ = path.jacobian_range()
    if lo <= 1e-6:
        raise GeodesicRegimeError(
            f"not a minimizing-geodesic regime: Jacobian reaches {lo:.3e} on the extended interval"
        )
    ts = np.linspace(0.0, 1.0, check_times) if check_times else []
    path.continuity_residual = max((continuity_residual(path, t) for t in ts), default=0.0)
    return path


def recover_potential(path: GeodesicPath, j: int) -> np.ndarray:
    return path.potential(path.times[j])


def continuity_residual(path: GeodesicPath, t) -> float:
    """``max |d rho/dt + div(rho grad phi)|`` with a fourth-order rate as reference."""
    m = path.manifold
    rho = path.density(t)
    rate = path.density_rate(t, order=4)
    return float(np.abs(rate + mf.div(m, rho.values * path.velocity(t))).max())


def c2_norm(m: mf.ManifoldKind, phi) -> float:
    """Pointwise ``max(|phi|, |grad phi|, |Hess phi|)``, the latter two as norms."""
    g = np.sqrt(np.sum(mf.grad(m, phi) ** 2, axis=0))
    H = mf.hess(m, phi)
    Hn = np.abs(np.moveaxis(H, (0, 1), (-2, -1)))
    if m.dim > 1:
        Hn = np.linalg.norm(np.moveaxis(H, (0, 1), (-2, -1)), ord=2, axis=(-2, -1))
    else:
        Hn = Hn[..., 0, 0]
    return float(max(np.abs(phi).max(), g.max(), Hn.max()))


def regularity_report(path: GeodesicPath, t0=0.0, t1=1.0) -> float:
    """``sup_t |phi(t)|_{C^2}`` over the samples in ``[t0, t1]``."""
    ts = [t for t in path.times if t0 - 1e-12 <= t <= t1 + 1e-12]
    return max(c2_norm(path.manifold, path.potential(t)) for t in ts)


def potential_normalization(path: GeodesicPath, t) -> float:
    return integrate(path.potential(t), path.density(t))
