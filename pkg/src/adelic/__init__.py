"""Exact-plus-numerical tools for heights, lattices, and point counting over Q.

Subpackages are organised by mathematical layer:

- ``places``: places of Q, exact absolute values, product formula.
- ``lattice``: Euclidean lattices with rational Gram data, theta series,
  completed Lambda functions and lattice zeta functions.
- ``heights``: metrized line bundles on projective space, exact heights,
  adelic points with local overrides, restriction to points.
- ``twist``: adelic group twists of heights and metrics.
- ``arakelov``: height-indexed L-series built from restricted bundles.
- ``fibration``: Hirzebruch surfaces, fibered heights, effectivity, counting.
- ``counts``: projective point enumeration, counting, height zeta, fits.
- ``tamagawa``: local densities, archimedean volumes, Tamagawa numbers,
  leading-constant comparisons.
- ``cli``: command line front end.

Exact data is kept as ``fractions.Fraction`` wherever the underlying value
is rational; floating point enters only where a limit or transcendental
function forces it, and every truncated series reports an error bound.
"""

from .errors import (
    CapacityError,
    PoleError,
    QuadratureError,
    SectionZeroError,
    ValidationError,
)

__all__ = [
    "CapacityError",
    "PoleError",
    "QuadratureError",
    "SectionZeroError",
    "ValidationError",
]

__version__ = "0.1.0"
