"""Adaptive vector-valued quadrature shared by the chain and Gram code."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad_vec

from .errors import ConvergenceError, PrecisionWarning
from .hlgrid import oscillation_length

DEFAULT_LIMIT = 2_000


@dataclass(frozen=True)
class QuadResult:
    value: np.ndarray
    error: float
    n_evals: int


def integrate(f, a: float, b: float, rel_tol: float, abs_tol: float = 0.0, breakpoints=None, limit: int = DEFAULT_LIMIT) -> QuadResult:
    """Integrate a vector-valued f over [a, b] with adaptive Gauss-Kronrod 21.

    Subdivision is serial and visits intervals in a fixed order, so the
    result depends only on f, the interval and the tolerances.
    """
    calls = 0

    def counted(x):
        nonlocal calls
        calls += 1
        return np.atleast_1d(np.asarray(f(x), dtype=float))

    pts = None
    if breakpoints is not None:
        pts = [float(p) for p in breakpoints if a < p < b]
    value, err, info = quad_vec(
        counted, a, b, epsabs=abs_tol, epsrel=rel_tol, norm="max", limit=limit,
        points=pts, quadrature="gk21", full_output=True,
    )
    if info.status == 2:
        warnings.warn(f"quadrature on [{a:g}, {b:g}] hit roundoff (error {err:.3e})", PrecisionWarning, stacklevel=2)
    elif info.status != 0:
        raise ConvergenceError(f"adaptive quadrature on [{a:g}, {b:g}] stopped: {info.message} (error {err:.3e})")
    return QuadResult(np.atleast_1d(value), float(err), calls)


def oscillation_breakpoints(a: float, b: float, height: float, per_oscillation: float = 1.0, scale: float = 1.0) -> np.ndarray:
    """Uniform interior breakpoints spaced at most one Z^2 oscillation apart.

    ``height`` is where Z is sampled and ``scale`` the local stretch from
    the integration variable to that height.
    """
    step = oscillation_length(height) / (per_oscillation * abs(scale))
    n = max(1, math.ceil((b - a) / step))
    return np.linspace(a, b, n + 1)[1:-1]
