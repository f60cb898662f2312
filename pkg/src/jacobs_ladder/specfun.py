"""Riemann-Siegel theta, the Hardy Z-function, |zeta(1/2+it)|^2 and pi(x).

Z(t) is evaluated by Euler-Maclaurin summation of zeta(1/2+it) below
``RS_CROSSOVER`` and by the Riemann-Siegel formula with the correction
terms C0..C4 above it.  Both paths accept scalars or arrays.
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import loggamma

from . import _kernels
from .errors import DomainError, ResourceError

EULER_C = 0.57721566490153286061
LN_2PI = math.log(2.0 * math.pi)

T_MIN = 1.0
# below this height theta comes from log-gamma, above from the asymptotic series
THETA_CROSSOVER = 50.0
# below this height Z comes from Euler-Maclaurin, above from Riemann-Siegel
RS_CROSSOVER = 300.0
SIEVE_LIMIT = 10**8


@dataclass(frozen=True)
class Constants:
    euler_c: float = EULER_C
    ln_2pi: float = LN_2PI
    one_minus_c: float = 1.0 - EULER_C
    # least-squares estimate, see jacobs_ladder.ladder.fit_c0
    c0_estimate: float = float("nan")


def constants() -> Constants:
    from .ladder import C0_ESTIMATE

    return Constants(c0_estimate=C0_ESTIMATE)


def _as_array(t):
    arr = np.asarray(t, dtype=float)
    return arr, arr.ndim == 0


def _check_domain(arr, t_min):
    if not np.all(np.isfinite(arr)):
        raise DomainError("heights must be finite")
    if arr.size and arr.min() < t_min:
        raise DomainError(f"height {arr.min()!r} below t_min={t_min}")


def _theta_unchecked(arr: np.ndarray) -> np.ndarray:
    out = np.empty_like(arr)
    low = arr < THETA_CROSSOVER
    if low.any():
        tl = arr[low]
        out[low] = loggamma(0.25 + 0.5j * tl).imag - 0.5 * tl * math.log(math.pi)
    high = ~low
    if high.any():
        out[high] = [_kernels.theta_asymptotic(v) for v in arr[high]]
    return out


def riemann_siegel_theta(t, t_min: float = T_MIN):
    """Riemann-Siegel theta function.

    Uses the imaginary part of log-gamma below t = 50 and the asymptotic
    expansion through the t^-7 term above; both are accurate to ~1e-13 at
    the switch.
    """
    arr, scalar = _as_array(t)
    _check_domain(arr, t_min)
    out = _theta_unchecked(arr.ravel()).reshape(arr.shape)
    return float(out) if scalar else out


def _zeta_em(arr: np.ndarray) -> np.ndarray:
    return _kernels.em_zeta(np.ascontiguousarray(arr, dtype=float), _kernels.EM_COEF)


def _hardy_z_unchecked(arr: np.ndarray) -> np.ndarray:
    """Z(t) for t >= 0 without the t_min gate (used for grid construction)."""
    arr = np.ascontiguousarray(arr, dtype=float)
    out = np.empty_like(arr)
    low = arr < RS_CROSSOVER
    if low.any():
        tl = arr[low]
        rot = np.exp(1j * _theta_unchecked(tl))
        out[low] = (rot * _zeta_em(tl)).real
    high = ~low
    if high.any():
        out[high] = _kernels.rs_z(np.ascontiguousarray(arr[high]), _kernels.RS_COEF)
    return out


def hardy_z(t, t_min: float = T_MIN):
    """Hardy's Z(t) = exp(i theta(t)) zeta(1/2 + i t), real for real t."""
    arr, scalar = _as_array(t)
    _check_domain(arr, t_min)
    out = _hardy_z_unchecked(arr.ravel()).reshape(arr.shape)
    return float(out) if scalar else out


def zeta_modulus_sq(t, t_min: float = T_MIN):
    """|zeta(1/2 + i t)|^2, computed as Z(t)^2."""
    z = hardy_z(t, t_min)
    return z * z


def zeta_half_line(t, t_min: float = T_MIN):
    """zeta(1/2 + i t) by Euler-Maclaurin summation (any t, cost ~ t)."""
    arr, scalar = _as_array(t)
    _check_domain(arr, t_min)
    out = _zeta_em(arr.ravel()).reshape(arr.shape)
    return complex(out) if scalar else out


@functools.lru_cache(maxsize=4)
def _sieve(limit: int) -> np.ndarray:
    is_prime = np.ones(limit + 1, dtype=bool)
    is_prime[:2] = False
    for p in range(2, math.isqrt(limit) + 1):
        if is_prime[p]:
            is_prime[p * p :: p] = False
    return np.cumsum(is_prime, dtype=np.int64)


def _sieve_size(n: int) -> int:
    # round up so nearby queries share one sieve
    size = 1024
    while size < n:
        size *= 2
    return min(size, SIEVE_LIMIT)


def prime_count(T) -> int:
    """Exact pi(T) by the sieve of Eratosthenes, T <= 1e8."""
    if not math.isfinite(T) or T < 2:
        raise DomainError(f"prime_count needs T >= 2, got {T!r}")
    n = math.floor(T)
    if n > SIEVE_LIMIT:
        raise ResourceError(f"T={T!r} exceeds the sieve limit {SIEVE_LIMIT}")
    return int(_sieve(_sieve_size(n))[n])
