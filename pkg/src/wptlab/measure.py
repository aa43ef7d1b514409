"""Probability measures on the grid manifolds and on tangent spaces."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import manifold as mf
from .errors import DensityError, GridMismatchError, NotDiffeomorphicError

DENSITY_FLOOR = 1e-8
MASS_TOL = 1e-10
JACOBIAN_FLOOR = 1e-6


class Density:
    """A strictly positive grid density with unit mass.

    Values below ``DENSITY_FLOOR`` are rejected, never clipped.
    """

    def __init__(self, manifold: mf.ManifoldKind, values, *, mass_tol=MASS_TOL):
        values = np.array(manifold.check_scalar(values, "density"), dtype=float)
        if not np.all(np.isfinite(values)):
            raise DensityError("density has non-finite values")
        lo = values.min()
        if lo < DENSITY_FLOOR:
            raise DensityError(f"density minimum {lo:.3e} is below the floor {DENSITY_FLOOR}")
        mass = values.sum() * manifold.cell_volume
        if abs(mass - 1.0) > mass_tol:
            raise DensityError(f"density has mass {mass!r}, expected 1")
        values.setflags(write=False)
        self.manifold = manifold
        self.values = values

    @classmethod
    def normalized(cls, manifold, values):
        values = np.asarray(values, dtype=float)
        return cls(manifold, values / (values.sum() * manifold.cell_volume))

    @classmethod
    def uniform(cls, manifold):
        return cls(manifold, np.full(manifold.shape, 1.0 / manifold.volume))

    @property
    def weights(self) -> float:
        return self.manifold.cell_volume

    @property
    def mass(self) -> float:
        return float(self.values.sum() * self.weights)

    def __repr__(self):
        return f"Density({self.manifold.tag}, n={self.manifold.resolution})"


def integrate(f, mu: Density) -> float:
    f = mu.manifold.check_scalar(f)
    return float(np.sum(f * mu.values) * mu.weights)


def otto_inner(mu: Density, X, Y) -> float:
    """Otto metric pairing ``int <X, Y> dmu`` of two vector fields."""
    m = mu.manifold
    X = m.check_vector(X)
    Y = m.check_vector(Y)
    return float(np.sum(np.sum(X * Y, axis=0) * mu.values) * mu.weights)


def otto_norm(mu: Density, X) -> float:
    return float(np.sqrt(max(otto_inner(mu, X, X), 0.0)))


def jacobian_det(J) -> np.ndarray:
    J = np.asarray(J)
    if J.shape[0] == 1:
        return J[0, 0]
    return J[0, 0] * J[1, 1] - J[0, 1] * J[1, 0]


def _solve_small(J, r):
    """Solve ``J d = r`` pointwise for 1x1 or 2x2 blocks."""
    if J.shape[0] == 1:
        return r / J[0, 0]
    det = jacobian_det(J)
    return np.array(
        [(J[1, 1] * r[0] - J[0, 1] * r[1]) / det, (J[0, 0] * r[1] - J[1, 0] * r[0]) / det]
    )


def invert_map(m: mf.ManifoldKind, F, dF, *, tol=1e-12, maxiter=50) -> np.ndarray:
    """Preimages of the grid nodes under the grid map ``F``.

    ``F`` holds chart coordinates of the images of the nodes (any branch of
    the angle), ``dF`` its Jacobian.  Returns ``x`` of shape
    ``(dim, *shape)`` with ``F(x) = node`` to within ``tol``, found by damped
    Newton iteration started from the first-order inverse.
    """
    F = m.check_vector(F, "map")
    dF = np.asarray(dF, dtype=float)
    if dF.shape != (m.dim, m.dim, *m.shape):
        raise GridMismatchError(f"Jacobian has shape {dF.shape}")
    det = jacobian_det(dF)
    if det.min() < JACOBIAN_FLOOR:
        raise NotDiffeomorphicError("map not diffeomorphic at this resolution")
    Y = m.nodes
    D = mf.wrap(F - Y)
    stack = np.concatenate([D, dF.reshape(m.dim * m.dim, *m.shape)])

    def residual(x):
        vals = mf.interpolate(m, stack, x)
        r = mf.wrap(x + vals[: m.dim] - Y)
        return r, vals[m.dim :].reshape(m.dim, m.dim, *m.shape)

    x = Y - D
    r, J = residual(x)
    err = np.abs(r).max()
    for _ in range(maxiter):
        if err <= tol:
            return x % mf.TWO_PI
        step = _solve_small(J, r)
        lam = 1.0
        while True:
            x_new = x - lam * step
            r_new, J_new = residual(x_new)
            err_new = np.abs(r_new).max()
            if err_new < err or lam < 1e-3:
                break
            lam *= 0.5
        x, r, J, err = x_new, r_new, J_new, err_new
    if err <= tol:
        return x % mf.TWO_PI
    raise NotDiffeomorphicError(f"inverse map did not converge (residual {err:.2e})")


def pushforward_density(mu0: Density, F, dF, *, return_preimages=False):
    """Image of ``mu0`` under the grid map ``F``.

    The density at a node ``y`` is ``rho0(x) / |det dF(x)|`` with
    ``x = F^{-1}(y)``.
    """
    m = mu0.manifold
    x = invert_map(m, F, dF)
    q = mu0.values / np.abs(jacobian_det(dF))
    mu = Density(m, mf.interpolate(m, q, x))
    if return_preimages:
        return mu, x
    return mu


@dataclass(frozen=True)
class AtomicMeasure:
    """Finitely many weighted atoms; atoms live on the last axis."""

    atoms: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        atoms = np.atleast_1d(np.asarray(self.atoms, dtype=float))
        weights = np.atleast_1d(np.asarray(self.weights, dtype=float))
        if atoms.shape[0] != weights.shape[0]:
            raise ValueError("atoms and weights differ in length")
        if np.any(weights < 0):
            raise ValueError("negative atom weight")
        if abs(weights.sum() - 1.0) > 1e-12:
            raise ValueError(f"atom weights sum to {weights.sum()!r}")
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "weights", weights)

    def __len__(self):
        return len(self.weights)

    def second_moment(self) -> float:
        """``int |z|^2 dnu``, the squared tangent-cone norm at a delta."""
        sq = self.atoms**2
        if sq.ndim > 1:
            sq = sq.sum(axis=-1)
        return float(np.dot(self.weights, sq))

    def norm(self) -> float:
        return float(np.sqrt(self.second_moment()))
