"""Weighted Poisson solves and the weighted projection onto gradients.

The operator ``u -> -div(rho grad u)`` is symmetric positive semidefinite for
the spectral discretisation; it is solved by conjugate gradients
preconditioned with the inverse of the unweighted Laplacian.
"""
from __future__ import annotations

import numpy as np

from . import manifold as mf
from .errors import IncompatibleRHSError, SolverStagnationError
from .measure import Density, integrate

RTOL = 1e-12
MAXITER = 10_000
COMPAT_TOL = 1e-8


def pcg(apply_A, b, precond, x0=None, *, tol=RTOL, maxiter=MAXITER):
    """Preconditioned conjugate gradients for an SPD operator.

    Returns ``(x, iterations)``.  Converged when ``|b - A x| <= tol |b|``.
    """
    x = np.zeros_like(b) if x0 is None else np.array(x0, dtype=float)
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return np.zeros_like(b), 0
    r = b - apply_A(x)
    if np.linalg.norm(r) <= tol * bnorm:
        return x, 0
    z = precond(r)
    p = z.copy()
    rz = np.vdot(r, z)
    for it in range(1, maxiter + 1):
        Ap = apply_A(p)
        alpha = rz / np.vdot(p, Ap)
        x += alpha * p
        r -= alpha * Ap
        if np.linalg.norm(r) <= tol * bnorm:
            return x, it
        z = precond(r)
        rz_new = np.vdot(r, z)
        p = z + (rz_new / rz) * p
        rz = rz_new
    raise SolverStagnationError(
        f"PCG stagnated after {maxiter} iterations (relative residual "
        f"{np.linalg.norm(r) / bnorm:.2e})"
    )


def weighted_laplacian(rho: Density, u) -> np.ndarray:
    m = rho.manifold
    return mf.div(m, rho.values * mf.grad(m, u))


def solve_weighted_poisson(rho: Density, g, x0=None, *, tol=RTOL, maxiter=MAXITER):
    """Solve ``div(rho grad u) = g`` with the gauge ``int u drho = 0``.

    ``g`` must integrate to zero against the volume form.  ``x0`` is the
    initial guess for the iteration; by default the unweighted solution
    scaled by the mean density.
    """
    m = rho.manifold
    g = m.check_scalar(g, "right-hand side")
    total = g.sum() * m.cell_volume
    if abs(total) > COMPAT_TOL:
        raise IncompatibleRHSError(f"right-hand side integrates to {total:.3e}, not 0")
    b = -mf.remove_kernel(m, g)
    rho_bar = rho.values.mean()

    def apply_A(u):
        return -weighted_laplacian(rho, u)

    def precond(r):
        return -mf.inverse_laplacian(m, r) / rho_bar

    if x0 is None:
        x0 = precond(b)
    else:
        x0 = mf.remove_kernel(m, m.check_scalar(x0, "initial guess"))
    u, _ = pcg(apply_A, b, precond, x0, tol=tol, maxiter=maxiter)
    return u - integrate(u, rho)


def gradient_potential(m: mf.ManifoldKind, X) -> np.ndarray:
    """Potential of the unweighted Helmholtz gradient part of ``X``."""
    return mf.inverse_laplacian(m, mf.div(m, X))


def project_to_gradients(mu: Density, W, x0=None, *, tol=RTOL):
    """Orthogonal projection of ``W`` onto gradients in ``L^2(mu)``.

    Returns ``(G, p)`` with ``G = grad p``, ``div(rho grad p) = div(rho W)``
    and ``int p dmu = 0``.  The unweighted potential of ``W`` seeds the
    iteration, so exact gradients are returned unchanged at once.
    """
    m = mu.manifold
    W = m.check_vector(W)
    if x0 is None:
        x0 = gradient_potential(m, W)
    p = solve_weighted_poisson(mu, mf.div(m, mu.values * W), x0, tol=tol)
    return mf.grad(m, p), p
