"""Jacob's ladder phi(T) for the Riemann zeta function.

Modules: ``specfun`` (Z, theta, pi(x)), ``hlgrid`` (cached Z^2 grid and
damped integrals), ``ladder`` (phi and derived maps), ``iterations``
(reverse chains and the integral transformation), ``orthosys`` (iterated
orthogonal systems) and ``cli``.
"""
from .errors import (
    AdmissibilityError,
    BracketError,
    ConvergenceError,
    DomainError,
    GridRangeError,
    InvariantError,
    IterationUnderflowError,
    LadderError,
    PrecisionWarning,
    ResourceError,
)
from .hlgrid import CumulativeZGrid, QuadratureSpec, build_grid, load_or_build
from .ladder import Ladder, LadderConfig
from .specfun import hardy_z, prime_count, riemann_siegel_theta

__all__ = [
    "AdmissibilityError", "BracketError", "ConvergenceError", "CumulativeZGrid", "DomainError",
    "GridRangeError", "InvariantError", "IterationUnderflowError", "Ladder", "LadderConfig",
    "LadderError", "PrecisionWarning", "QuadratureSpec", "ResourceError", "build_grid",
    "hardy_z", "load_or_build", "prime_count", "riemann_siegel_theta",
]
