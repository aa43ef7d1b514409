"""Numerical parallel transport along Wasserstein geodesics."""
from . import manifold
from .errors import WPTError
from .manifold import ManifoldKind, circle, sphere2, torus2
from .measure import AtomicMeasure, Density

__version__ = "0.1.0"

__all__ = [
    "AtomicMeasure",
    "Density",
    "ManifoldKind",
    "WPTError",
    "circle",
    "manifold",
    "sphere2",
    "torus2",
]
