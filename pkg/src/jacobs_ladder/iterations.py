"""Forward and reverse iterations of phi_1, reverse segment chains and the
integral transformation they induce.

For a segment [T, T+U] the reverse chain holds the preimages

    [T^k, (T+U)^k] = phi_1^{-k}([T, T+U]),   k = 0..k_max,

which lie strictly to the right of one another.  On each of them

    int_T^{T+U} g(t) dt = int_{T^k}^{(T+U)^k} g(phi_1^k(t)) prod_{r<k} Z~^2(phi_1^r(t)) dt.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import AdmissibilityError, DomainError, InvariantError, IterationUnderflowError
from .ladder import Ladder
from .quadrature import integrate, oscillation_breakpoints
from .specfun import EULER_C

# default slack for endpoint images, relative to T
IMAGE_TOL = 1e-6
# orbit points this close to a segment end (relative to T) are clamped onto it
CLAMP_TOL = 1e-8
# default relative tolerance of the transform quadratures
TRANSFORM_REL_TOL = 1e-9


def max_segment_length(T: float) -> float:
    """Admissibility gate U <= T / (10 ln T)."""
    return T / (10.0 * math.log(T))


def check_admissible(T: float, U: float, allow_inadmissible: bool = False) -> None:
    if not U > 0:
        raise AdmissibilityError(f"U must be positive, got {U!r}")
    if not allow_inadmissible and U > max_segment_length(T):
        raise AdmissibilityError(
            f"U={U:g} exceeds T/(10 ln T) = {max_segment_length(T):g} at T={T:g}; "
            "pass allow_inadmissible=True to override"
        )


# ---------------------------------------------------------------- pointwise

def forward_orbit(t: float, k: int, ladder: Ladder) -> list[float]:
    """[t, phi_1(t), ..., phi_1^k(t)]; every point fed to phi_1 must be >= T0."""
    if k < 0:
        raise DomainError(f"iteration depth must be >= 0, got {k}")
    orbit = [float(t)]
    for r in range(k):
        x = orbit[-1]
        if not x >= ladder.config.T0:
            raise IterationUnderflowError(f"phi_1^{r}({t:g}) = {x:g} fell below T0={ladder.config.T0:g}")
        orbit.append(ladder.phi1(x))
    return orbit


def forward_iterate(t: float, k: int, ladder: Ladder) -> float:
    """phi_1^k(t) by k-fold composition."""
    return forward_orbit(t, k, ladder)[-1]


def reverse_point(T: float, k: int, ladder: Ladder) -> float:
    """T^k = phi_1^{-k}(T) by k-fold inversion."""
    if k < 0:
        raise DomainError(f"iteration depth must be >= 0, got {k}")
    x = float(T)
    for _ in range(k):
        x = ladder.phi1_inverse(x)
    return x


# ------------------------------------------------------------------- chains

@dataclass(frozen=True)
class IterSegment:
    k: int
    lo: float
    hi: float

    @property
    def length(self) -> float:
        return self.hi - self.lo

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.lo + self.hi)

    def contains(self, t: float) -> bool:
        return self.lo <= t <= self.hi


@dataclass(frozen=True)
class ReverseChain:
    T: float
    U: float
    k_max: int
    segments: tuple[IterSegment, ...]

    def gaps(self) -> np.ndarray:
        """segments[k].lo - segments[k-1].hi for k = 1..k_max."""
        s = self.segments
        return np.array([s[k].lo - s[k - 1].hi for k in range(1, len(s))])

    def gap_ratios(self) -> np.ndarray:
        """Gaps in units of (1 - c) T / ln T."""
        return self.gaps() / ((1.0 - EULER_C) * self.T / math.log(self.T))


@dataclass(frozen=True)
class DeltaSet:
    """Union of the first k+1 segments of a chain."""

    chain: ReverseChain
    k: int

    def __post_init__(self):
        if not 0 <= self.k <= self.chain.k_max:
            raise DomainError(f"k={self.k} outside 0..{self.chain.k_max}")
        if np.any(self.chain.gaps()[: self.k] <= 0):
            raise InvariantError("segments of the set touch or overlap")

    @property
    def components(self) -> tuple[IterSegment, ...]:
        return self.chain.segments[: self.k + 1]

    def contains(self, t: float) -> bool:
        return any(s.contains(t) for s in self.components)

    @property
    def measure(self) -> float:
        return sum(s.length for s in self.components)


def build_chain(T: float, U: float, k_max: int, ladder: Ladder, *, allow_inadmissible: bool = False, image_tol: float = IMAGE_TOL) -> ReverseChain:
    """Reverse segments for k = 0..k_max, checked for ordering and images."""
    T, U = float(T), float(U)
    if T < ladder.config.T0:
        raise DomainError(f"T={T:g} below T0={ladder.config.T0:g}")
    if k_max < 0:
        raise DomainError(f"k_max must be >= 0, got {k_max}")
    check_admissible(T, U, allow_inadmissible)
    segs = [IterSegment(0, T, T + U)]
    for k in range(1, k_max + 1):
        prev = segs[-1]
        segs.append(IterSegment(k, ladder.phi1_inverse(prev.lo), ladder.phi1_inverse(prev.hi)))
    for s in segs:
        if not s.lo < s.hi:
            raise InvariantError(f"segment {s.k} is empty: [{s.lo!r}, {s.hi!r}]")
    for k in range(1, len(segs)):
        prev, cur = segs[k - 1], segs[k]
        if not prev.hi < cur.lo:
            raise InvariantError(f"segments {k - 1} and {k} are not ordered: {prev.hi!r} >= {cur.lo!r}")
        for name, here, there in (("lo", cur.lo, prev.lo), ("hi", cur.hi, prev.hi)):
            err = abs(ladder.phi1(here) - there)
            if err > image_tol * T:
                raise InvariantError(f"phi_1(segment {k}.{name}) misses segment {k - 1}.{name} by {err:.3e}")
    return ReverseChain(T, U, k_max, tuple(segs))


def forward_membership(t: float, chain: ReverseChain, k: int, ladder: Ladder, clamp_tol: float = CLAMP_TOL) -> list[float]:
    """phi_1^r(t) for r = 0..k, each checked to lie in segment k - r."""
    if not 0 <= k <= chain.k_max:
        raise DomainError(f"k={k} outside 0..{chain.k_max}")
    seg = chain.segments[k]
    if not seg.contains(t):
        raise DomainError(f"t={t!r} not in segment {k} = [{seg.lo!r}, {seg.hi!r}]")
    orbit = forward_orbit(t, k, ladder)
    slack = clamp_tol * chain.T
    for r, x in enumerate(orbit):
        target = chain.segments[k - r]
        if target.contains(x):
            continue
        if target.lo - slack <= x <= target.hi + slack:
            orbit[r] = min(max(x, target.lo), target.hi)
        else:
            raise InvariantError(f"phi_1^{r}({t!r}) = {x!r} lies outside segment {k - r} = [{target.lo!r}, {target.hi!r}]")
    return orbit


# ------------------------------------------------------------ forward sets

@dataclass(frozen=True)
class ForwardSet:
    """D(T, U, n): the images [phi_1^k(T), phi_1^k(T+U)] for k = 0..n+1."""

    T: float
    U: float
    n: int
    segments: tuple[IterSegment, ...]

    def separations(self) -> np.ndarray:
        """phi_1^k(T) - phi_1^{k+1}(T+U) for k = 0..n."""
        s = self.segments
        return np.array([s[k].lo - s[k + 1].hi for k in range(len(s) - 1)])


def forward_set(T: float, U: float, n: int, ladder: Ladder) -> ForwardSet:
    """Forward images of [T, T+U]; components must decrease strictly."""
    if n < 0:
        raise DomainError(f"n must be >= 0, got {n}")
    lo = forward_orbit(T, n + 1, ladder)
    hi = forward_orbit(T + U, n + 1, ladder)
    segs = tuple(IterSegment(k, lo[k], hi[k]) for k in range(n + 2))
    out = ForwardSet(float(T), float(U), n, segs)
    bad = np.flatnonzero(out.separations() <= 0)
    if bad.size:
        raise InvariantError(f"forward images {bad[0]} and {bad[0] + 1} overlap")
    return out


# --------------------------------------------------------- transformations

def transform_budget(k: int, T: float, rel_tol: float, root_rel_tol: float) -> float:
    """Relative error budget of the transform: quadrature plus root error
    amplified by the Lipschitz scale ln T of each composed phi_1."""
    return rel_tol + k * root_rel_tol * math.log(T)


@dataclass(frozen=True)
class TransformResult:
    lhs: np.ndarray
    rhs: np.ndarray
    # int_T^{T+U} |g|, the scale of the error budget
    l1: np.ndarray
    budget: float

    @property
    def within_budget(self) -> np.ndarray:
        return np.abs(self.lhs - self.rhs) <= self.budget * self.l1

    @property
    def rel_error(self) -> np.ndarray:
        return np.abs(self.lhs - self.rhs) / np.abs(self.lhs)


def _side(gs, seg: IterSegment, k: int, ladder: Ladder, rel_tol: float, abs_tol: float, scale=1.0) -> np.ndarray:
    # components are divided by ``scale`` so that one error norm fits all
    def integrand(t):
        w = 1.0
        x = t
        for _ in range(k):
            w *= ladder.z_tilde_sq(x)
            x = ladder.phi1(x)
        return np.array([g(x) for g in gs], dtype=float) * w / scale

    bp = oscillation_breakpoints(seg.lo, seg.hi, seg.hi, scale=max(k, 1))
    return integrate(integrand, seg.lo, seg.hi, rel_tol=rel_tol, abs_tol=abs_tol, breakpoints=bp).value * scale


def transform_integrals(gs, T: float, U: float, k: int, ladder: Ladder, *, rel_tol: float = TRANSFORM_REL_TOL, abs_tol: float | None = None, chain: ReverseChain | None = None, allow_inadmissible: bool = False) -> TransformResult:
    """Both sides of the transformation for a list of functions at depth k.

    Each component is normalised by int_T^{T+U} |g| before integration and
    ``abs_tol`` applies to the normalised values.  k = 0 integrates the left
    side twice through the same code path.
    """
    gs = list(gs)
    if chain is None or chain.k_max < k or chain.T != T or chain.U != U:
        chain = build_chain(T, U, k, ladder, allow_inadmissible=allow_inadmissible)
    base = chain.segments[0]
    l1 = _side([lambda t, g=g: abs(g(t)) for g in gs], base, 0, ladder, rel_tol, 0.0)
    scale = np.where(l1 > 0, l1, 1.0)
    if abs_tol is None:
        abs_tol = rel_tol
    lhs = _side(gs, base, 0, ladder, rel_tol, abs_tol, scale)
    rhs = _side(gs, chain.segments[k], k, ladder, rel_tol, abs_tol, scale)
    budget = transform_budget(k, T, rel_tol, ladder.config.root_rel_tol)
    return TransformResult(lhs, rhs, l1, budget)


def transform_integral(g, T: float, U: float, k: int, ladder: Ladder, **kwargs) -> tuple[float, float]:
    """(int_T^{T+U} g, int over segment k of g(phi_1^k) prod Z~^2(phi_1^r))."""
    res = transform_integrals([g], T, U, k, ladder, **kwargs)
    return float(res.lhs[0]), float(res.rhs[0])
