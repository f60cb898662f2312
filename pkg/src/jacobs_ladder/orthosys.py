"""Orthogonal systems carried through the ladder and their Gram matrices.

Given an L2-orthogonal system {f_n} on [a, a+2l] and a depth p, the
iterated system is

    f_n^p(t) = f_n(phi_1^p(rho) - T + a) prod_{r<p} |Z~(phi_1^r(rho))|,
    rho = (((T+2l)^p - T^p) / 2l) (t - a) + T^p,

where [T^p, (T+2l)^p] is the depth-p reverse segment of [T, T+2l].  The
change of variables rho -> phi_1^p(rho) makes

    int_a^{a+2l} f_m^p f_n^p dt = (2l / ((T+2l)^p - T^p)) int_a^{a+2l} f_m f_n dt.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import AdmissibilityError, DomainError, InvariantError
from .iterations import CLAMP_TOL, ReverseChain, build_chain, forward_orbit, max_segment_length
from .ladder import Ladder
from .quadrature import integrate, oscillation_breakpoints

# deeper stages carry ~1e-11 evaluation noise, so tighter targets stall
GRAM_REL_TOL = 1e-8
BASE_CHECK_TOL = 1e-8


def legendre_eval(n: int, t):
    """P_n(t) by the three-term recurrence."""
    if n < 0:
        raise DomainError(f"degree must be >= 0, got {n}")
    return legendre_all(n + 1, t)[n]


def legendre_all(N: int, t):
    """[P_0(t), ..., P_{N-1}(t)] stacked along the first axis."""
    t = np.asarray(t, dtype=float)
    out = np.empty((N,) + t.shape)
    out[0] = 1.0
    if N > 1:
        out[1] = t
    for n in range(1, N - 1):
        out[n + 1] = ((2 * n + 1) * t * out[n] - n * out[n - 1]) / (n + 1)
    return out


# -------------------------------------------------------------- base systems

@dataclass(frozen=True)
class BaseSystem:
    """An L2-orthogonal system on [a, a+2l].

    ``values(t, N)`` returns the first N members at t.  ``norm_sq(n)`` is
    the exact int f_n^2 where known, otherwise None.
    """

    kind: str
    a: float
    l: float
    values: Callable[[float, int], np.ndarray] = field(repr=False)
    norm_sq: Callable[[int], float] | None = field(default=None, repr=False)

    def __post_init__(self):
        if not self.l > 0:
            raise DomainError(f"half-length l must be positive, got {self.l!r}")

    @property
    def b(self) -> float:
        return self.a + 2.0 * self.l

    def __call__(self, n: int, t: float) -> float:
        return float(self.values(t, n + 1)[n])

    def norms(self, N: int) -> np.ndarray | None:
        if self.norm_sq is None:
            return None
        return np.array([self.norm_sq(n) for n in range(N)])


def legendre_system(a: float = -1.0, l: float = 1.0) -> BaseSystem:
    """P_n((t - a)/l - 1) on [a, a+2l]; the classical case is a = -1, l = 1."""
    return BaseSystem(
        "legendre", a, l,
        values=lambda t, N: legendre_all(N, (t - a) / l - 1.0),
        norm_sq=lambda n: 2.0 * l / (2 * n + 1),
    )


def _trig_values(t: float, N: int, a: float, l: float) -> np.ndarray:
    out = np.empty(N)
    out[0] = 1.0
    x = math.pi * (t - a) / l
    for n in range(1, N):
        m = (n + 1) // 2
        out[n] = math.cos(m * x) if n % 2 else math.sin(m * x)
    return out


def trigonometric_system(a: float = -1.0, l: float = 1.0) -> BaseSystem:
    """1, cos(pi m (t-a)/l), sin(pi m (t-a)/l), m = 1, 2, ... on [a, a+2l]."""
    return BaseSystem(
        "trigonometric", a, l,
        values=lambda t, N: _trig_values(t, N, a, l),
        norm_sq=lambda n: 2.0 * l if n == 0 else l,
    )


def external_system(f: Callable[[int, float], float], a: float, l: float, n_check: int, tol: float = BASE_CHECK_TOL) -> BaseSystem:
    """Wrap a user evaluator f(n, t) after checking orthogonality of its
    first n_check members on [a, a+2l]."""
    system = BaseSystem("external", a, l, values=lambda t, N: np.array([f(n, t) for n in range(N)], dtype=float))
    report = gram_matrix(lambda t: system.values(t, n_check), n_check, (a, a + 2.0 * l))
    if not report.max_offdiag_ratio <= tol:
        raise InvariantError(f"external system is not orthogonal: max off-diagonal ratio {report.max_offdiag_ratio:.3e} > {tol:g}")
    return system


# ----------------------------------------------------------- iterated systems

@dataclass(frozen=True)
class IteratedSystemSpec:
    base: BaseSystem
    p: int
    T: float
    chain: ReverseChain

    def __post_init__(self):
        if self.p < 1:
            raise DomainError(f"depth p must be >= 1, got {self.p}")
        if self.p > self.chain.k_max:
            raise DomainError(f"depth p={self.p} exceeds chain depth {self.chain.k_max}")
        if self.chain.T != self.T or self.chain.U != 2.0 * self.base.l:
            raise DomainError("chain must be built on [T, T + 2l]")

    @property
    def segment(self):
        return self.chain.segments[self.p]

    @property
    def stretch(self) -> float:
        """((T+2l)^p - T^p) / 2l."""
        return self.segment.length / (2.0 * self.base.l)

    @property
    def diag_scale(self) -> float:
        """Predicted ratio of iterated to base Gram diagonals, 2l / ((T+2l)^p - T^p)."""
        return 1.0 / self.stretch


def iterated_spec(base: BaseSystem, p: int, T: float, ladder: Ladder, *, allow_inadmissible: bool = False) -> IteratedSystemSpec:
    """Build the depth-p chain on [T, T+2l] behind an iterated system."""
    U = 2.0 * base.l
    if not allow_inadmissible and U > max_segment_length(T):
        raise AdmissibilityError(f"2l={U:g} exceeds T/(10 ln T) = {max_segment_length(T):g} at T={T:g}")
    chain = build_chain(T, U, p, ladder, allow_inadmissible=allow_inadmissible)
    return IteratedSystemSpec(base, p, float(T), chain)


def affine_to_segment(t: float, spec: IteratedSystemSpec) -> float:
    """rho(t) mapping [a, a+2l] onto [T^p, (T+2l)^p], exact at both ends."""
    a, b = spec.base.a, spec.base.b
    seg = spec.segment
    if not a <= t <= b:
        raise DomainError(f"t={t!r} outside [{a!r}, {b!r}]")
    if t == a:
        return seg.lo
    if t == b:
        return seg.hi
    return min(seg.lo + spec.stretch * (t - a), seg.hi)


def _stage(t: float, spec: IteratedSystemSpec, ladder: Ladder) -> tuple[float, float]:
    """(w(t), prod_{r<p} |Z~(phi_1^r(rho))|) for one ladder stage."""
    base = spec.base
    orbit = forward_orbit(affine_to_segment(t, spec), spec.p, ladder)
    w = orbit[-1] - spec.T + base.a
    if not base.a <= w <= base.b:
        if base.a - CLAMP_TOL * spec.T <= w <= base.b + CLAMP_TOL * spec.T:
            w = min(max(w, base.a), base.b)
        else:
            raise InvariantError(f"phi_1^{spec.p}(rho({t!r})) - T + a = {w!r} leaves [{base.a!r}, {base.b!r}]")
    amp = 1.0
    for x in orbit[:-1]:
        amp *= math.sqrt(ladder.z_tilde_sq(x))
    return w, amp


def automorphism_w(t: float, spec: IteratedSystemSpec, ladder: Ladder) -> float:
    """w(t) = phi_1^p(rho(t)) - T + a, an increasing self-map of [a, a+2l]."""
    return _stage(t, spec, ladder)[0]


def weight_eval(t: float, spec: IteratedSystemSpec, ladder: Ladder) -> float:
    """prod_{r<p} Z~^2(phi_1^r(rho(t))), formed as the square of the amplitude."""
    amp = _stage(t, spec, ladder)[1]
    return amp * amp


def iterated_values(t: float, spec: IteratedSystemSpec, ladder: Ladder, N: int) -> np.ndarray:
    """[f_0^p(t), ..., f_{N-1}^p(t)]."""
    return composed_values(t, [spec], ladder, N)


def iterated_eval(n: int, t: float, spec: IteratedSystemSpec, ladder: Ladder) -> float:
    return float(iterated_values(t, spec, ladder, n + 1)[n])


def composed_values(t: float, specs, ladder: Ladder, N: int) -> np.ndarray:
    """Nested systems f^{p_1, ..., p_j}: specs[-1] acts on t first, each
    stage's w feeds the next stage's affine map, amplitudes multiply."""
    specs = list(specs)
    if not specs:
        raise DomainError("at least one stage is required")
    base = specs[0].base
    for s in specs[1:]:
        if (s.base.a, s.base.l) != (base.a, base.l):
            raise DomainError("all stages must share the interval [a, a+2l]")
    amp = 1.0
    w = float(t)
    for s in reversed(specs):
        w, factor = _stage(w, s, ladder)
        amp *= factor
    return base.values(w, N) * amp


def composed_eval(n: int, t: float, specs, ladder: Ladder) -> float:
    return float(composed_values(t, specs, ladder, n + 1)[n])


# ------------------------------------------------------------------- Gram

@dataclass(frozen=True)
class GramReport:
    size: int
    entries: np.ndarray
    max_offdiag_ratio: float
    diag_scale: float
    n_evals: int = 0

    def norm_transport(self) -> np.ndarray:
        """Diagonal divided by diag_scale, comparable with base norms."""
        return np.diag(self.entries) / self.diag_scale


def offdiag_ratio(G: np.ndarray) -> float:
    d = np.sqrt(np.abs(np.diag(G)))
    R = np.abs(G) / np.outer(d, d)
    np.fill_diagonal(R, 0.0)
    return float(R.max())


def gram_matrix(evaluator, N: int, interval, rel_tol: float = GRAM_REL_TOL, abs_tol: float = 0.0, breakpoints=None, diag_scale: float = 1.0) -> GramReport:
    """G_mn = int f_m f_n over the interval; entries m <= n are integrated
    together and mirrored."""
    if N < 2:
        raise DomainError(f"Gram size must be >= 2, got {N}")
    a, b = map(float, interval)
    iu = np.triu_indices(N)

    def integrand(t):
        v = np.asarray(evaluator(t), dtype=float)[:N]
        return np.outer(v, v)[iu]

    res = integrate(integrand, a, b, rel_tol=rel_tol, abs_tol=abs_tol, breakpoints=breakpoints)
    G = np.zeros((N, N))
    G[iu] = res.value
    G = G + np.triu(G, 1).T
    return GramReport(N, G, offdiag_ratio(G), float(diag_scale), res.n_evals)


def _stage_breakpoints(specs) -> np.ndarray:
    base = specs[0].base
    scale = 1.0
    height = 0.0
    for s in specs:
        scale *= s.stretch * s.p
        height = max(height, s.segment.hi)
    return oscillation_breakpoints(base.a, base.b, height, scale=scale)


def base_gram(base: BaseSystem, N: int, rel_tol: float = GRAM_REL_TOL) -> GramReport:
    return gram_matrix(lambda t: base.values(t, N), N, (base.a, base.b), rel_tol=rel_tol)


def iterated_gram(specs, ladder: Ladder, N: int, rel_tol: float = GRAM_REL_TOL) -> GramReport:
    """Gram matrix of a (possibly nested) iterated system; diag_scale is the
    product of the stages' 2l / ((T+2l)^p - T^p)."""
    if isinstance(specs, IteratedSystemSpec):
        specs = [specs]
    specs = list(specs)
    base = specs[0].base
    scale = math.prod(s.diag_scale for s in specs)
    return gram_matrix(
        lambda t: composed_values(t, specs, ladder, N), N, (base.a, base.b),
        rel_tol=rel_tol, breakpoints=_stage_breakpoints(specs), diag_scale=scale,
    )
