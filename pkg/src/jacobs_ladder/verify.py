"""Named verification suites with measured values and pass/fail verdicts.

Each suite returns a list of :class:`Check`.  The CLI ``verify`` command and
the acceptance tests both run these functions.
"""
from __future__ import annotations

import math
import os
import time
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np
from scipy.optimize import brentq

from . import hlgrid, iterations, orthosys, specfun
from .hlgrid import QuadratureSpec
from .ladder import Ladder, LadderConfig, required_grid_t_max

# largest T the standard suites touch; phi(T) < 2T must stay on the grid
DESK_T = 2.0e4
SLOW_T = 1.0e5
SLOW_ENV = "JACOBS_LADDER_SLOW"
# the T = 1e5 grid holds about 1.6e8 nodes (1.3 GB of samples)
SLOW_NODE_CAP = 200_000_000

TRANSFORM_FUNCTIONS = {
    "1": lambda t: 1.0,
    "t": lambda t: t,
    "t^2": lambda t: t * t,
    "cos t": math.cos,
}


@dataclass(frozen=True)
class Check:
    suite: str
    name: str
    passed: bool
    value: float
    threshold: float
    detail: str = ""


@dataclass
class Context:
    """Lazily built grid and ladder shared by the suites."""

    spec: QuadratureSpec = field(default_factory=QuadratureSpec)
    config: LadderConfig = field(default_factory=LadderConfig)
    cache_path: str | None = None
    T_max: float = DESK_T
    node_cap: int = hlgrid.DEFAULT_NODE_CAP

    @cached_property
    def grid(self):
        t_max = required_grid_t_max(self.T_max, self.config, self.spec)
        return hlgrid.load_or_build(t_max, self.spec, self.cache_path, self.node_cap)

    @cached_property
    def ladder(self) -> Ladder:
        return Ladder(self.grid, self.config)


def _check(suite, name, value, threshold, ok=None, detail=""):
    value = float(value)
    passed = bool(value <= threshold) if ok is None else bool(ok)
    return Check(suite, name, passed, value, float(threshold), detail)


# ------------------------------------------------------------------ suites

def suite_specfun(ctx: Context) -> list[Check]:
    """Z(t) against mpmath at 50 heights and the first three zeros."""
    import mpmath

    ts = np.linspace(10.0, 5000.0, 50)
    with mpmath.workdps(30):
        oracle = np.array([float(mpmath.siegelz(t)) for t in ts])
        zeros = [float(mpmath.zetazero(k).imag) for k in (1, 2, 3)]
    z_err = np.abs(specfun.hardy_z(ts) - oracle).max()
    scan = np.arange(10.0, 26.0, 0.05)
    zs = specfun.hardy_z(scan)
    found = [
        brentq(specfun.hardy_z, scan[i], scan[i + 1], xtol=1e-14, rtol=1e-15)
        for i in np.flatnonzero(np.sign(zs[:-1]) != np.sign(zs[1:]))
    ][:3]
    zero_err = max(abs(a - b) for a, b in zip(found, zeros)) if len(found) == 3 else math.inf
    return [
        _check("specfun", "Z oracle max abs error (50 points in [10, 5000])", z_err, 1e-8),
        _check("specfun", "first three zeros max abs error", zero_err, 1e-6, detail=" ".join(f"{z:.12f}" for z in found)),
    ]


def suite_hl(ctx: Context) -> list[Check]:
    """Remainder of the Hardy-Littlewood integral on a fresh grid to 2e4."""
    grid = hlgrid.build_grid(DESK_T, ctx.spec)
    out = []
    for T in (1e2, 1e3, 1e4):
        r = abs(hlgrid.hl_integral(T, grid) - hlgrid.hl_asymptotic(T)) / (math.sqrt(T) * math.log(T))
        out.append(_check("hl", f"|R(T)| / (sqrt(T) ln T) at T={T:g}", r, 2.0))
    return out


def suite_equation(ctx: Context) -> list[Check]:
    """Solver residual and monotonicity of phi on [1e3, 1e4]."""
    L = ctx.ladder
    Ts = np.geomspace(1e3, 1e4, 10)
    phis = np.array([L.solve_phi(T) for T in Ts])
    rel = max(abs(L.damped(x) - L.F(T)) / L.F(T) for T, x in zip(Ts, phis))
    inc = bool(np.all(np.diff(phis) > 0))
    return [
        _check("equation", "max relative residual (10 log-spaced T)", rel, 1e-9),
        _check("equation", "phi strictly increasing", float(inc), 1.0, ok=inc),
    ]


def derivative_points(n: int = 50, lo: float = 1e3, hi: float = 2e4, z_floor: float = 0.1) -> np.ndarray:
    """n heights in [lo, hi], evenly thinned from those with |Z| > z_floor."""
    cand = np.geomspace(lo, hi, 8 * n) + 0.37
    keep = cand[np.abs(specfun.hardy_z(cand)) > z_floor]
    return keep[np.linspace(0, keep.size - 1, n).round().astype(int)]


def suite_derivative(ctx: Context, h: float = 1e-3) -> list[Check]:
    """Z~^2 against central differences of phi_1."""
    L = ctx.ladder
    errs = []
    for t in derivative_points():
        fd = (L.phi1(t + h) - L.phi1(t - h)) / (2.0 * h)
        errs.append(abs(L.z_tilde_sq(t) - fd) / fd)
    return [_check("derivative", "max relative error (50 points, |Z| > 0.1)", max(errs), 1e-3)]


def complementarity(L: Ladder, T: float) -> float:
    """(phi_1(T) + (1 - c) pi(T)) / T."""
    return (L.phi1(T) + (1.0 - specfun.EULER_C) * specfun.prime_count(T)) / T


def suite_complementarity(ctx: Context, Ts=(1e3, 1e4, 2e4), band_at=1e4) -> list[Check]:
    L = ctx.ladder
    vals = [complementarity(L, T) for T in Ts]
    dev = np.abs(np.array(vals) - 1.0)
    trend = bool(np.all(np.diff(dev) < 0))
    mid = complementarity(L, band_at)
    detail = " ".join(f"T={T:g}:{v:.6f}" for T, v in zip(Ts, vals))
    return [
        _check("complementarity", f"ratio at T={band_at:g} within [0.95, 1.05]", abs(mid - 1.0), 0.05, detail=f"{mid:.6f}"),
        _check("complementarity", "|ratio - 1| decreasing in T", float(trend), 1.0, ok=trend, detail=detail),
    ]


def suite_chain(ctx: Context, T: float = 1e4, k_max: int = 3) -> list[Check]:
    """Reverse-chain ordering, endpoint images and gaps."""
    L = ctx.ladder
    U = T / (20.0 * math.log(T))
    chain = iterations.build_chain(T, U, k_max, L, image_tol=math.inf)
    segs = chain.segments
    ordered = all(segs[k - 1].hi < segs[k].lo for k in range(1, len(segs)))
    img = max(
        max(abs(L.phi1(segs[k].lo) - segs[k - 1].lo), abs(L.phi1(segs[k].hi) - segs[k - 1].hi))
        for k in range(1, len(segs))
    )
    ratios = chain.gap_ratios()
    band = float(np.abs(ratios - 1.0).max())
    return [
        _check("chain", "strict ordering of segments", float(ordered), 1.0, ok=ordered),
        _check("chain", "max endpoint image error / T", img / T, 1e-6),
        _check("chain", "max |gap ratio - 1|", band, 0.25, detail=" ".join(f"{r:.6f}" for r in ratios)),
    ]


def suite_transform(ctx: Context, T: float = 1e4, U: float = 20.0, ks=(1, 2, 3)) -> list[Check]:
    """lhs against rhs of the transformation identity."""
    L = ctx.ladder
    chain = iterations.build_chain(T, U, max(ks), L)
    names = list(TRANSFORM_FUNCTIONS)
    out = []
    for k in ks:
        res = iterations.transform_integrals(TRANSFORM_FUNCTIONS.values(), T, U, k, L, chain=chain)
        for name, lhs, rhs, err in zip(names, res.lhs, res.rhs, res.rel_error):
            out.append(_check("transform", f"g={name} k={k} relative error", err, 1e-5, detail=f"lhs={lhs:.16e} rhs={rhs:.16e}"))
    return out


def suite_gram(ctx: Context, T: float = 1e4, N: int = 6, ps=(1, 2, 3)) -> list[Check]:
    """Orthogonality and norm transport of iterated Legendre and trigonometric systems."""
    L = ctx.ladder
    out = []
    for base in (orthosys.legendre_system(), orthosys.trigonometric_system()):
        for p in ps:
            spec = orthosys.iterated_spec(base, p, T, L)
            rep = orthosys.iterated_gram(spec, L, N)
            transport = float(np.abs(rep.norm_transport() / base.norms(N) - 1.0).max())
            out.append(_check("gram", f"{base.kind} p={p} max off-diagonal ratio", rep.max_offdiag_ratio, 1e-4))
            out.append(_check("gram", f"{base.kind} p={p} norm transport relative error", transport, 1e-3))
    return out


def suite_composition(ctx: Context, T: float = 1e4, N: int = 4) -> list[Check]:
    """Depth-2 nesting with p1 = p2 = 1."""
    L = ctx.ladder
    spec = orthosys.iterated_spec(orthosys.legendre_system(), 1, T, L)
    rep = orthosys.iterated_gram([spec, spec], L, N)
    return [_check("composition", "p1=p2=1 max off-diagonal ratio", rep.max_offdiag_ratio, 1e-3)]


def suite_automorphism(ctx: Context, T: float = 1e4, ps=(1, 2, 3), n_sample: int = 100) -> list[Check]:
    """Endpoints and monotonicity of w(t) = phi_1^p(rho(t)) - T + a."""
    L = ctx.ladder
    base = orthosys.legendre_system()
    out = []
    for p in ps:
        spec = orthosys.iterated_spec(base, p, T, L)
        seg = spec.segment
        # raw images, before the clamp inside automorphism_w
        e_lo = abs(iterations.forward_iterate(seg.lo, p, L) - T)
        e_hi = abs(iterations.forward_iterate(seg.hi, p, L) - (T + 2.0 * base.l))
        w = np.array([orthosys.automorphism_w(t, spec, L) for t in np.linspace(base.a, base.b, n_sample)])
        inc = bool(np.all(np.diff(w) > 0))
        out.append(_check("automorphism", f"p={p} endpoint error / l", max(e_lo, e_hi) / base.l, 1e-6))
        out.append(_check("automorphism", f"p={p} strictly increasing on {n_sample} points", float(inc), 1.0, ok=inc))
    return out


def suite_slow(ctx: Context) -> list[Check]:
    """Checks at T = 1e5; needs a grid to about 6.7e6."""
    L = ctx.ladder
    T = SLOW_T
    out = suite_complementarity(ctx, Ts=(1e3, 1e4, 1e5), band_at=T)
    out += suite_chain(ctx, T=T)
    U = T / (20.0 * math.log(T))
    n = 3
    fs = iterations.forward_set(T, U, n, L)
    lengths = np.array([s.length for s in fs.segments])
    scale = T / math.log(T)
    # phi_1^k(T) > (1 - eps) T holds only once (n+1)(1-c)/ln T < eps, so check
    # the deficit of the deepest image against that rate instead
    deficit = (1.0 - fs.segments[-1].lo / T) / ((n + 1) * (1.0 - specfun.EULER_C) / math.log(T))
    width = float((lengths[1:] * (2 * n + 5) / scale).max())
    sep = float((fs.separations() / scale).min())
    out.append(_check("slow", f"(1 - phi_1^{n + 1}(T)/T) ln T / ((n+1)(1-c)), |x - 1|", abs(deficit - 1.0), 0.25, detail=f"{deficit:.6f}"))
    out.append(_check("slow", "max image length * (2n+5) ln T / T", width, 1.0, ok=width < 1.0))
    out.append(_check("slow", "min separation / (T / ln T) (above 0.18)", sep, 0.18, ok=sep > 0.18))
    return [Check("slow", c.name, c.passed, c.value, c.threshold, c.detail) for c in out]


SUITES = {
    "specfun": (1, suite_specfun),
    "hl": (2, suite_hl),
    "equation": (3, suite_equation),
    "derivative": (4, suite_derivative),
    "complementarity": (5, suite_complementarity),
    "chain": (6, suite_chain),
    "transform": (7, suite_transform),
    "gram": (8, suite_gram),
    "composition": (9, suite_composition),
    "automorphism": (10, suite_automorphism),
}
OPTIONAL_SUITES = {"slow": suite_slow}


def slow_enabled() -> bool:
    return os.environ.get(SLOW_ENV, "") not in ("", "0")


def slow_context(ctx: Context) -> Context:
    """A context for T up to 1.2e5 with its own cache file, so the desk
    cache stays small."""
    base = Path(ctx.cache_path) if ctx.cache_path else hlgrid.default_cache_path(ctx.spec)
    path = base.with_name(base.stem + "-slow" + base.suffix)
    return Context(ctx.spec, ctx.config, str(path), T_max=SLOW_T * 1.2, node_cap=SLOW_NODE_CAP)


def run_suite(name: str, ctx: Context) -> list[Check]:
    if name in SUITES:
        return SUITES[name][1](ctx)
    if name in OPTIONAL_SUITES:
        return OPTIONAL_SUITES[name](slow_context(ctx))
    raise KeyError(name)


def run(names, ctx: Context | None = None) -> tuple[list[Check], dict[str, float]]:
    """Checks of the named suites and wall-clock seconds per suite."""
    ctx = ctx or Context()
    checks, timings = [], {}
    for name in names:
        start = time.perf_counter()
        checks += run_suite(name, ctx)
        timings[name] = time.perf_counter() - start
    return checks, timings
