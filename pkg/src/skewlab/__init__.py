"""skewlab: numerics for skew-shift Schrodinger operators.

Transfer-matrix Lyapunov exponents, large-deviation statistics, Green
functions and localization diagnostics, and spectrum-interval evidence for
one-dimensional discrete Schrodinger operators whose potential is sampled
along orbits of torus skew shifts.
"""

__version__ = "0.1.0"

from . import backend

__all__ = ["backend", "__version__"]
