"""Solver for the Jacob's-ladder integral equation and derived quantities.

phi(T) is the unique x with

    int_0^{u*(x)} Z^2(t) exp(-2t/x) dt = int_0^T Z^2(t) dt,

where u*(x) = min(a x ln x, t_trunc(x)).  From it follow phi_1 = phi / 2,
the potential Phi'(phi), omega(t) = 2 Phi'(phi(t)) and the weight
Z~^2(t) = |zeta(1/2+it)|^2 / omega(t) = d phi_1 / dt.
"""
from __future__ import annotations

import functools
import math
import threading
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from . import hlgrid
from .errors import BracketError, ConvergenceError, DomainError, GridRangeError
from .hlgrid import CumulativeZGrid
from .specfun import EULER_C, LN_2PI, T_MIN, _hardy_z_unchecked, zeta_modulus_sq

# Additive constant of F(T) - phi1 ln phi1 - (c - ln 2pi) phi1: least-squares
# fit of c0 + b ln(T)/T over 40 log-spaced T in [1e3, 2e4] with a = 7 and the
# default QuadratureSpec (fitted b = -0.0679).  Regenerate with ``fit_c0``.
C0_ESTIMATE = 3.141624772745352
C0_FIT_RANGE = (1.0e3, 2.0e4)
C0_FIT_POINTS = 40

_STEP_TOL = 1e-14
_BRACKET_CAP = 2.0**10
_PAIR_CACHE = 4096


@dataclass(frozen=True)
class LadderConfig:
    a: float = 7.0
    T0: float = 100.0
    root_rel_tol: float = 1e-10
    bracket_factor: float = 4.0
    max_iter: int = 100

    def __post_init__(self):
        if not 7.0 <= self.a <= 8.0:
            raise ValueError(f"a must lie in [7, 8], got {self.a}")
        if self.T0 < T_MIN:
            raise ValueError(f"T0 must be >= t_min={T_MIN}")
        if not (self.root_rel_tol > 0 and self.bracket_factor > 1):
            raise ValueError("root_rel_tol must be positive and bracket_factor > 1")


def _max_x(grid: CumulativeZGrid) -> float:
    """Largest x whose damped integral fits inside the grid."""
    # keep the last moment block fully inside the grid
    limit = grid.coverage - hlgrid.BLOCK_WIDTH
    lo, hi = math.e * 1.0001, grid.coverage
    f = lambda x: hlgrid.truncation_point(x, grid.spec.abs_tol) - limit
    if f(hi) <= 0:
        return hi
    return brentq(f, lo, hi, xtol=1e-9, rtol=1e-14) * (1 - 1e-12)


class Ladder:
    """phi(T) and friends on a fixed grid, with a memo of solved points."""

    def __init__(self, grid: CumulativeZGrid, config: LadderConfig | None = None):
        self.grid = grid
        self.config = config or LadderConfig()
        self.memo: dict[float, float] = {}
        self._lock = threading.Lock()
        self._x_cap = _max_x(grid)
        # omega reuses the moment pair from the last Newton step
        self._pair = functools.lru_cache(maxsize=_PAIR_CACHE)(self._pair_uncached)

    # -------------------------------------------------------------- primitives

    def F(self, T):
        return hlgrid.hl_integral(T, self.grid)

    def _pair_uncached(self, x: float):
        return hlgrid.damped_moments(x, self.config.a, self.grid)

    def damped(self, x: float) -> float:
        return self._pair(x)[0]

    @property
    def max_T(self) -> float:
        """Rough upper limit of T this grid supports (phi(T) < 2T)."""
        return self._x_cap / 2.0

    # ------------------------------------------------------------------- solve

    def _check_T(self, T: float):
        if not math.isfinite(T) or T < self.config.T0:
            raise DomainError(f"T={T!r} below T0={self.config.T0}")

    def solve_phi(self, T: float) -> float:
        """phi(T) by bracketed Newton iteration on x -> damped(x) - F(T)."""
        T = float(T)
        hit = self.memo.get(T)
        if hit is not None:
            return hit
        self._check_T(T)
        x = self._solve(T, self.F(T))
        with self._lock:
            # first writer wins, so repeated solves agree bitwise
            return self.memo.setdefault(T, x)

    def _solve(self, T: float, target: float) -> float:
        cfg = self.config
        lo = T
        hi = min(cfg.bracket_factor * T, self._x_cap)
        if hi <= lo:
            raise GridRangeError(f"grid too short to bracket phi({T:g}); extend t_max")
        f_lo = self._pair(lo)[0] - target
        if f_lo > 0:
            raise BracketError(f"damped({lo:g}) exceeds F(T) at T={T:g}: monotone bracket violated")
        f_hi = self._pair(hi)[0] - target
        while f_hi < 0:
            if hi >= _BRACKET_CAP * T or hi >= self._x_cap:
                raise BracketError(f"no sign change of damped(x) - F(T) up to x={hi:g} at T={T:g}")
            lo, f_lo = hi, f_hi
            hi = min(hi * cfg.bracket_factor, _BRACKET_CAP * T, self._x_cap)
            f_hi = self._pair(hi)[0] - target

        # phi_1(T) ~ T - (1-c) T / (ln T + 1)
        x = 2.0 * (T - (1.0 - EULER_C) * T / (math.log(T) + 1.0))
        if not lo < x < hi:
            x = 0.5 * (lo + hi)
        f = None
        for _ in range(cfg.max_iter):
            d0, d1 = self._pair(x)
            f = d0 - target
            if f == 0.0:
                break
            if f < 0:
                lo = x
            else:
                hi = x
            step = f / (2.0 * d1 / (x * x))
            x_new = x - step
            if not lo < x_new < hi:
                x_new = 0.5 * (lo + hi)
                step = x - x_new
            x = x_new
            if abs(step) <= _STEP_TOL * x or hi - lo <= _STEP_TOL * x:
                f = self._pair(x)[0] - target
                break
        else:
            raise ConvergenceError(f"phi({T:g}) did not converge in {cfg.max_iter} iterations")
        if abs(f) > cfg.root_rel_tol * target:
            raise ConvergenceError(f"phi({T:g}) residual {f:.3e} exceeds {cfg.root_rel_tol:g} * F(T)")
        return x

    def residual(self, T: float) -> float:
        """damped(phi(T)) - F(T)."""
        return self.damped(self.solve_phi(T)) - self.F(float(T))

    # ------------------------------------------------------------ derived maps

    def phi1(self, T: float) -> float:
        return 0.5 * self.solve_phi(T)

    def phi1_inverse(self, y: float) -> float:
        """T with phi1(T) = y.

        phi1(T) = y is equivalent to F(T) = damped(2y), so this brackets the
        monotone F on [y, bracket_factor * y] using the cumulative table.
        """
        y = float(y)
        self._check_T(y)
        target = self.damped(2.0 * y)
        cum = self.grid.cumulative
        lo_T = y
        hi_T = min(self.config.bracket_factor * y, self.grid.coverage)
        if self.F(lo_T) > target:
            raise BracketError(f"F({y:g}) exceeds damped(2y): phi1 is not below the identity here")
        if self.F(hi_T) < target:
            raise BracketError(f"phi1^-1({y:g}) lies beyond {hi_T:g}")
        j = int(np.searchsorted(cum, target, side="right") - 1)
        e_lo, e_hi = self.grid.edges[j], self.grid.edges[j + 1]
        base = cum[j]

        def g(t):
            if t <= e_lo:
                return base - target
            return base + float(hlgrid._local_integral(np.array([e_lo]), np.array([t]))[0]) - target

        T_hat = brentq(g, e_lo, e_hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=self.config.max_iter)
        back = self.phi1(T_hat)
        if abs(back - y) > self.config.root_rel_tol * y:
            raise ConvergenceError(f"phi1(phi1^-1({y:g})) = {back!r} misses tolerance")
        return T_hat

    def phi_prime_potential(self, phi_val: float) -> float:
        """Phi'(phi) = (2/phi^2) int t e^{-2t/phi} Z^2 + Z^2(mu) e^{-2 mu/phi} mu'(phi)."""
        if not phi_val > math.e:
            raise DomainError(f"phi_prime_potential needs phi > e, got {phi_val!r}")
        first, second = self.potential_terms(phi_val)
        return first + second

    def potential_terms(self, phi_val: float) -> tuple[float, float]:
        """The two summands of Phi'(phi): moment term and boundary term."""
        a = self.config.a
        d1 = self._pair(phi_val)[1]
        first = 2.0 * d1 / (phi_val * phi_val)
        mu = a * phi_val * math.log(phi_val)
        z_mu = float(_hardy_z_unchecked(np.array([mu]))[0])
        # e^{-2 mu / phi} = phi^{-2a}
        second = z_mu * z_mu * math.exp(-2.0 * a * math.log(phi_val)) * a * (math.log(phi_val) + 1.0)
        return first, second

    def omega(self, t: float) -> float:
        return 2.0 * self.phi_prime_potential(self.solve_phi(t))

    def z_tilde_sq(self, t: float) -> float:
        """Z~^2(t) = |zeta(1/2+it)|^2 / omega(t), the derivative of phi1."""
        return float(zeta_modulus_sq(float(t))) / self.omega(t)

    def hl_representation_residual(self, T: float, c0: float | None = None) -> float:
        """F(T) - [phi1 ln phi1 + (c - ln 2pi) phi1 + c0]."""
        c0 = C0_ESTIMATE if c0 is None else c0
        y = self.phi1(T)
        return self.F(float(T)) - (y * math.log(y) + (EULER_C - LN_2PI) * y + c0)

    # --------------------------------------------------------------- batching

    def phi1_many(self, T) -> np.ndarray:
        return np.array([self.phi1(v) for v in np.ravel(T)]).reshape(np.shape(T))

    def z_tilde_sq_many(self, t) -> np.ndarray:
        flat = np.ravel(np.asarray(t, dtype=float))
        z = _hardy_z_unchecked(flat)
        om = np.array([self.omega(v) for v in flat])
        return (z * z / om).reshape(np.shape(t))


def fit_c0(ladder: Ladder, T_values=None) -> tuple[float, float, np.ndarray]:
    """Least-squares fit of c0 + b ln(T)/T to the representation residual.

    Returns (c0, b, fit residuals).  The ln(T)/T column absorbs the decaying
    error term so that c0 estimates the limit rather than a range average.
    """
    if T_values is None:
        T_values = np.geomspace(*C0_FIT_RANGE, C0_FIT_POINTS)
    T_values = np.asarray(T_values, dtype=float)
    raw = np.array([ladder.hl_representation_residual(T, c0=0.0) for T in T_values])
    design = np.column_stack([np.ones_like(T_values), np.log(T_values) / T_values])
    coef, *_ = np.linalg.lstsq(design, raw, rcond=None)
    return float(coef[0]), float(coef[1]), raw - design @ coef


def required_grid_t_max(T_max: float, config: LadderConfig | None = None, spec=None) -> float:
    """Grid coverage that lets the solver bracket phi(T) for every T <= T_max."""
    config = config or LadderConfig()
    return hlgrid.required_t_max(2.0 * T_max * 1.02, spec)
