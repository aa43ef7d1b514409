"""Model manifolds and their discrete calculus.

Three manifolds are supported: the circle S^1 and the flat torus T^2, both
in periodic angle charts and discretised on uniform grids, and the round
sphere S^2 embedded in R^3 (pointwise geometry only, no grid).

Layout conventions
------------------
* Grid fields: a scalar field has shape ``m.shape``; a vector field has shape
  ``(m.dim, *m.shape)``; a symmetric tensor field ``(m.dim, m.dim, *m.shape)``.
* Pointwise geometry (``exp_map``, ``dexp``, ...): circle points are bare
  angles, torus points carry their two angles on the last axis, sphere points
  are unit 3-vectors on the last axis.

Derivatives are spectral.  The Nyquist mode is dropped from first-derivative
symbols so that the discrete gradient is real and skew-adjoint.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import ConjugatePointError, GridMismatchError

TWO_PI = 2.0 * np.pi

_TAGS = ("circle", "torus2", "sphere2")


@dataclass(frozen=True)
class ManifoldKind:
    """One of the model manifolds, with its grid resolution if it has one."""

    tag: str
    resolution: int | None = None

    def __post_init__(self):
        if self.tag not in _TAGS:
            raise ValueError(f"unknown manifold tag {self.tag!r}")
        if self.tag == "sphere2":
            if self.resolution is not None:
                raise ValueError("sphere2 carries no grid")
        else:
            n = self.resolution
            if n is None or int(n) != n or n < 16 or n % 2:
                raise ValueError(f"resolution must be an even integer >= 16, got {n!r}")

    @property
    def flat(self) -> bool:
        return self.tag != "sphere2"

    @property
    def has_grid(self) -> bool:
        return self.tag != "sphere2"

    @property
    def dim(self) -> int:
        return 1 if self.tag == "circle" else 2

    @property
    def shape(self) -> tuple[int, ...]:
        self._require_grid()
        return (self.resolution,) * self.dim

    @property
    def h(self) -> float:
        self._require_grid()
        return TWO_PI / self.resolution

    @property
    def cell_volume(self) -> float:
        return self.h**self.dim

    @property
    def volume(self) -> float:
        return TWO_PI**self.dim

    @cached_property
    def nodes(self) -> np.ndarray:
        """Grid coordinates, shape ``(dim, *shape)``."""
        x = np.arange(self.resolution) * self.h
        return np.array(np.meshgrid(*([x] * self.dim), indexing="ij"))

    @cached_property
    def _wavenumbers(self):
        n = self.resolution
        k = np.fft.fftfreq(n, 1.0 / n)
        kd = k.copy()
        kd[n // 2] = 0.0
        ks = []
        for a in range(self.dim):
            shp = [1] * self.dim
            shp[a] = n
            ks.append(kd.reshape(shp))
        k2 = sum(kk**2 for kk in ks)
        return ks, k2

    def _require_grid(self):
        if not self.has_grid:
            raise ValueError(f"{self.tag} has no grid")

    def check_scalar(self, f, name="field") -> np.ndarray:
        f = np.asarray(f, dtype=float)
        if f.shape != self.shape:
            raise GridMismatchError(f"{name} has shape {f.shape}, expected {self.shape}")
        return f

    def check_vector(self, X, name="field") -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.shape != (self.dim, *self.shape):
            raise GridMismatchError(
                f"{name} has shape {X.shape}, expected {(self.dim, *self.shape)}"
            )
        return X


def circle(n: int = 256) -> ManifoldKind:
    return ManifoldKind("circle", n)


def torus2(n: int = 64) -> ManifoldKind:
    return ManifoldKind("torus2", n)


def sphere2() -> ManifoldKind:
    return ManifoldKind("sphere2")


def wrap(a):
    """Reduce angles (or angle differences) to ``[-pi, pi)``."""
    return (np.asarray(a) + np.pi) % TWO_PI - np.pi


# ---------------------------------------------------------------------------
# spectral calculus on the grid manifolds


def _fft(m, f):
    return np.fft.fftn(f, axes=tuple(range(-m.dim, 0)))


def _ifft(m, F):
    return np.fft.ifftn(F, axes=tuple(range(-m.dim, 0))).real


def grad(m: ManifoldKind, f) -> np.ndarray:
    f = m.check_scalar(f)
    ks, _ = m._wavenumbers
    fh = _fft(m, f)
    return np.array([_ifft(m, 1j * k * fh) for k in ks])


def hess(m: ManifoldKind, f) -> np.ndarray:
    """Spectral Hessian, taken directly from ``f``."""
    f = m.check_scalar(f)
    ks, _ = m._wavenumbers
    fh = _fft(m, f)
    H = np.empty((m.dim, m.dim, *m.shape))
    for a in range(m.dim):
        for b in range(a, m.dim):
            H[a, b] = _ifft(m, -ks[a] * ks[b] * fh)
            H[b, a] = H[a, b]
    return H


def div(m: ManifoldKind, X) -> np.ndarray:
    X = m.check_vector(X)
    ks, _ = m._wavenumbers
    total = sum(1j * ks[a] * _fft(m, X[a]) for a in range(m.dim))
    return _ifft(m, total)


def weighted_div(rho, X) -> np.ndarray:
    """``div(rho X)`` for a :class:`~wptlab.measure.Density` ``rho``."""
    m = rho.manifold
    X = m.check_vector(X)
    return div(m, rho.values * X)


def laplacian(m: ManifoldKind, f) -> np.ndarray:
    f = m.check_scalar(f)
    _, k2 = m._wavenumbers
    return _ifft(m, -k2 * _fft(m, f))


def inverse_laplacian(m: ManifoldKind, g) -> np.ndarray:
    """Solve ``lap u = g`` modulo the kernel of the discrete gradient.

    Modes annihilated by the gradient (the mean, and Nyquist modes) are set
    to zero in both the data and the result.
    """
    g = m.check_scalar(g)
    _, k2 = m._wavenumbers
    with np.errstate(divide="ignore", invalid="ignore"):
        sym = np.where(k2 > 0, -1.0 / np.where(k2 > 0, k2, 1.0), 0.0)
    return _ifft(m, sym * _fft(m, g))


def remove_kernel(m: ManifoldKind, f) -> np.ndarray:
    """Project out modes on which the discrete gradient vanishes."""
    _, k2 = m._wavenumbers
    return _ifft(m, np.where(k2 > 0, 1.0, 0.0) * _fft(m, f))


def interpolate(m: ManifoldKind, values, points) -> np.ndarray:
    """Evaluate the trigonometric interpolant of grid data at arbitrary points.

    ``values`` has shape ``(*lead, *m.shape)`` and ``points`` has shape
    ``(m.dim, *pshape)``.  Returns an array of shape ``(*lead, *pshape)``.
    Nyquist modes are split symmetrically so the interpolant is real and
    reproduces the data exactly at the nodes.
    """
    values = np.asarray(values, dtype=float)
    points = np.asarray(points, dtype=float)
    n, d = m.resolution, m.dim
    if values.shape[values.ndim - d:] != m.shape:
        raise GridMismatchError(f"values shape {values.shape} does not end in {m.shape}")
    if points.shape[0] != d:
        raise GridMismatchError(f"points must have leading axis {d}")
    lead = values.shape[: values.ndim - d]
    pshape = points.shape[1:]
    V = values.reshape(-1, *m.shape)
    L = V.shape[0]
    P = points.reshape(d, -1)
    ky = np.arange(n // 2 + 1)
    if d == 1:
        c = np.fft.rfft(V, axis=-1) / n
        c[:, 1 : n // 2] *= 2.0
        E = np.exp(1j * np.outer(P[0], ky))
        out = (E @ c.T).real.T
    else:
        c = np.fft.fft(np.fft.rfft(V, axis=-1), axis=-2) / n**2
        c[..., 1 : n // 2] *= 2.0
        c[:, n // 2, :] *= 0.5
        c = np.concatenate([c, c[:, n // 2 : n // 2 + 1, :]], axis=1)
        kx = np.concatenate([np.fft.fftfreq(n, 1.0 / n), [n / 2]])
        Ex = np.exp(1j * np.outer(P[0], kx))
        Ey = np.exp(1j * np.outer(P[1], ky))
        C = c.transpose(1, 0, 2).reshape(n + 1, -1)
        tmp = (Ex @ C).reshape(-1, L, n // 2 + 1)
        out = np.einsum("plk,pk->lp", tmp, Ey).real
    return out.reshape(*lead, *pshape)


# ---------------------------------------------------------------------------
# pointwise geometry


def _dot(a, b):
    return np.sum(a * b, axis=-1, keepdims=True)


def _tangent(x, w):
    return w - _dot(w, x) * x


def _frame(x, v):
    """Unit direction of ``v``, its length, and the endpoint velocity direction."""
    theta = np.linalg.norm(v, axis=-1, keepdims=True)
    safe = np.where(theta > 0, theta, 1.0)
    e = v / safe
    end_dir = -np.sin(theta) * x + np.cos(theta) * e
    return theta, e, end_dir


def exp_map(m: ManifoldKind, x, v):
    """Endpoint of the geodesic leaving ``x`` with velocity ``v``."""
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    if m.flat:
        return (x + v) % TWO_PI
    theta = np.linalg.norm(v, axis=-1, keepdims=True)
    y = np.cos(theta) * x + np.sinc(theta / np.pi) * v
    return np.where(theta > 0, y / np.linalg.norm(y, axis=-1, keepdims=True), x)


def log_map(m: ManifoldKind, x, y):
    """Initial velocity of the minimizing geodesic from ``x`` to ``y``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if m.flat:
        return wrap(y - x)
    u = _tangent(x, y)
    s = np.linalg.norm(u, axis=-1, keepdims=True)
    theta = np.arctan2(s, _dot(x, y))
    scale = np.where(s > 0, theta / np.where(s > 0, s, 1.0), 1.0)
    return scale * u


def dexp(m: ManifoldKind, x, v, w):
    """Differential of ``exp_x`` at ``v`` applied to ``w``.

    On the sphere the radial part of ``w`` is carried along as the unit
    velocity and the orthogonal part is parallel and scaled by
    ``sin(theta)/theta``.
    """
    w = np.asarray(w, dtype=float)
    if m.flat:
        return w.copy()
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    theta, e, end_dir = _frame(x, v)
    w = _tangent(x, w)
    a = _dot(w, e)
    w_perp = w - a * e
    out = a * end_dir + np.sinc(theta / np.pi) * w_perp
    return np.where(theta > 0, out, w)


def dexp_inverse(m: ManifoldKind, x, v, w):
    """Solve ``dexp(m, x, v, z) = w`` for ``z`` tangent at ``x``."""
    w = np.asarray(w, dtype=float)
    if m.flat:
        return w.copy()
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    theta, e, end_dir = _frame(x, v)
    if np.any(theta >= np.pi):
        raise ConjugatePointError("leg length reaches the conjugate radius pi")
    y = exp_map(m, x, v)
    w = _tangent(y, w)
    a = _dot(w, end_dir)
    rest = w - a * end_dir
    out = a * e + rest / np.sinc(theta / np.pi)
    return np.where(theta > 0, out, w)


def geodesic_transport(m: ManifoldKind, x, v, w):
    """Parallel transport of ``w`` along ``t -> exp_x(t v)`` up to ``t = 1``."""
    w = np.asarray(w, dtype=float)
    if m.flat:
        return w.copy()
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    theta, e, end_dir = _frame(x, v)
    w = _tangent(x, w)
    a = _dot(w, e)
    out = a * end_dir + (w - a * e)
    return np.where(theta > 0, out, w)
