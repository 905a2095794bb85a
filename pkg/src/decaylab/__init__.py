"""Exact and certified computations around decay of special endomorphisms."""

from __future__ import annotations

from .errors import DecayLabError, RelationViolated
from .ffield import make_field
from .qlattice import QuadLattice, local_density, local_density_bruteforce

__version__ = "0.1.0"

__all__ = [
    "DecayLabError",
    "QuadLattice",
    "RelationViolated",
    "__version__",
    "local_density",
    "local_density_bruteforce",
    "make_field",
]
