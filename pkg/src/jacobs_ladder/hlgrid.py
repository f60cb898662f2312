"""Cumulative grid of Z^2(t) and the Z^2-kernel integrals built on it.

The grid is a sequence of Gauss-Legendre panels (order 8) covering
[0, t_max].  Panel widths follow the shortest oscillation period of
Z^2, 2 pi / ln(t / 2 pi), so that neighbouring nodes are never further
apart than that period divided by ``panels_per_oscillation``.  Above
``RS_CROSSOVER`` panels come in chunks of equal width, which lets the
Riemann-Siegel main sum be advanced by phase rotation.

Cache file layout (all integers and floats little-endian)::

    8 bytes   magic  b"JLZGRID\\n"
    8 bytes   uint64 length H of the JSON header
    H bytes   JSON header: format, t_max, spec, n_panels, gl_order
    float64   edges[n_panels + 1]          panel boundaries t_j
    float64   cumulative[n_panels + 1]     F(t_j) = int_0^{t_j} Z^2
    float64   z2[n_panels * gl_order]      Z^2 at the panel nodes, row-major

Node p*gl_order + j sits at t = edges[p] + GL_NODES[j] * (edges[p+1] - edges[p]).
"""
from __future__ import annotations

import hashlib
import json
import logging
import math
import os
import struct
import warnings
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import _kernels
from .errors import DomainError, GridRangeError, ResourceError
from .specfun import EULER_C, LN_2PI, RS_CROSSOVER, T_MIN, _hardy_z_unchecked

log = logging.getLogger(__name__)

FORMAT_VERSION = "jacobs-ladder-zgrid/1"
MAGIC = b"JLZGRID\n"
GL_ORDER = 8
_x, _w = np.polynomial.legendre.leggauss(GL_ORDER)
GL_NODES = (_x + 1.0) / 2.0
GL_WEIGHTS = _w / 2.0
# largest node gap of one panel, including the gap across a panel boundary
MAX_GAP = max(np.diff(GL_NODES).max(), 2.0 * GL_NODES[0])
LOW_PANEL_CAP = 0.5
CHUNK_PANELS = 512
BLOCK_WIDTH = 64.0
N_MOMENTS = 18
# the block-moment expansion of exp(-2t/x) is used for x >= FAST_X_MIN
FAST_X_MIN = 200.0
DEFAULT_NODE_CAP = 60_000_000
CACHE_ENV = "JACOBS_LADDER_CACHE_DIR"


@dataclass(frozen=True)
class QuadratureSpec:
    rel_tol: float = 1e-8
    abs_tol: float = 1e-10
    panels_per_oscillation: int = 8

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ValueError("quadrature tolerances must be positive")
        if int(self.panels_per_oscillation) != self.panels_per_oscillation or self.panels_per_oscillation < 4:
            raise ValueError("panels_per_oscillation must be an integer >= 4")


def oscillation_length(t):
    """Shortest oscillation period of Z^2 near height t."""
    return 2.0 * math.pi / max(math.log(t / (2.0 * math.pi)), 1.0) if t > 0 else 2.0 * math.pi


def _panel_width(t: float, spec: QuadratureSpec) -> float:
    return oscillation_length(t) / (spec.panels_per_oscillation * MAX_GAP)


def _layout(t_max: float, spec: QuadratureSpec):
    """Panel edges for [0, t_max]: a uniform low region, then uniform chunks."""
    low_end = min(RS_CROSSOVER, t_max)
    h_low = min(LOW_PANEL_CAP, _panel_width(RS_CROSSOVER, spec))
    n_low = max(1, math.ceil(low_end / h_low))
    low_edges = np.linspace(0.0, low_end, n_low + 1)
    chunks = []
    t_s = low_end
    while t_s < t_max:
        h0 = _panel_width(t_s, spec)
        h = _panel_width(t_s + CHUNK_PANELS * h0, spec)
        n = min(CHUNK_PANELS, math.ceil((t_max - t_s) / h))
        chunks.append((t_s, h, n))
        t_s = t_s + n * h
    return low_edges, chunks


def _count_panels(t_max: float, spec: QuadratureSpec) -> int:
    low_edges, chunks = _layout(t_max, spec)
    return low_edges.size - 1 + sum(n for _, _, n in chunks)


@dataclass(eq=False)
class CumulativeZGrid:
    """Sampled Z^2 with the running Hardy-Littlewood integral.

    ``edges[0] == 0`` and ``cumulative[0] == 0``; the grid covers
    [0, edges[-1]] with ``edges[-1] >= t_max``.
    """

    t_max: float
    spec: QuadratureSpec
    edges: np.ndarray
    cumulative: np.ndarray
    z2: np.ndarray
    version: str = FORMAT_VERSION
    moments: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.moments = _kernels.block_moments(
            self.edges, self.z2, GL_NODES, GL_WEIGHTS, BLOCK_WIDTH, N_MOMENTS
        )

    @property
    def coverage(self) -> float:
        return float(self.edges[-1])

    @property
    def n_panels(self) -> int:
        return self.z2.shape[0]

    @property
    def node_t(self) -> np.ndarray:
        widths = np.diff(self.edges)
        return (self.edges[:-1, None] + GL_NODES[None, :] * widths[:, None]).ravel()

    @property
    def nodes(self) -> tuple[np.ndarray, np.ndarray]:
        """(t, Z^2(t)) at every quadrature node, increasing in t."""
        return self.node_t, self.z2.ravel()

    def header(self) -> dict:
        return {
            "format": self.version,
            "t_max": float(self.t_max),
            "spec": asdict(self.spec),
            "n_panels": int(self.n_panels),
            "gl_order": GL_ORDER,
        }


def build_grid(t_max: float, spec: QuadratureSpec | None = None, node_cap: int = DEFAULT_NODE_CAP) -> CumulativeZGrid:
    """Sample Z^2 on [0, t_max] and accumulate F(t) = int_0^t Z^2."""
    spec = spec or QuadratureSpec()
    if not t_max > T_MIN:
        raise DomainError(f"t_max must exceed t_min={T_MIN}")
    n_panels = _count_panels(t_max, spec)
    if n_panels * GL_ORDER > node_cap:
        raise ResourceError(f"grid to t_max={t_max:g} needs {n_panels * GL_ORDER} nodes > cap {node_cap}")

    low_edges, chunks = _layout(t_max, spec)
    z_parts = []
    edge_parts = [low_edges]
    widths = np.diff(low_edges)
    t_low = (low_edges[:-1, None] + GL_NODES[None, :] * widths[:, None]).ravel()
    z_parts.append(_hardy_z_unchecked(t_low).reshape(-1, GL_ORDER) ** 2)
    for t_s, h, n in chunks:
        # square chunk by chunk so only one full-size array is ever live
        z_parts.append(np.square(_kernels.rs_z_uniform(t_s, h, n, GL_NODES, _kernels.RS_COEF)))
        edge_parts.append(t_s + h * np.arange(1, n + 1))
    edges = np.concatenate(edge_parts)
    z2 = np.concatenate(z_parts)
    del z_parts
    sums = _kernels.panel_sums(z2, GL_WEIGHTS, np.diff(edges))
    cumulative = _kernels.compensated_cumsum(sums)
    log.info("built Z^2 grid to %.6g: %d panels", edges[-1], z2.shape[0])
    return CumulativeZGrid(float(t_max), spec, edges, cumulative, z2)


# ---------------------------------------------------------------- cache file

def save_grid(grid: CumulativeZGrid, path) -> Path:
    path = Path(path)
    header = json.dumps(grid.header(), sort_keys=True, separators=(",", ":")).encode()
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<Q", len(header)))
        fh.write(header)
        for arr in (grid.edges, grid.cumulative, grid.z2):
            fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())
    os.replace(tmp, path)
    return path


def read_header(path) -> dict:
    with open(path, "rb") as fh:
        if fh.read(len(MAGIC)) != MAGIC:
            raise ValueError(f"{path} is not a Z^2 grid cache file")
        (n,) = struct.unpack("<Q", fh.read(8))
        return json.loads(fh.read(n))


def _read_array(fh, n: int) -> np.ndarray:
    out = np.fromfile(fh, dtype="<f8", count=n)
    if out.size != n:
        raise ValueError("truncated grid cache file")
    return out.astype(float, copy=False)


def load_grid(path) -> CumulativeZGrid:
    path = Path(path)
    with open(path, "rb") as fh:
        if fh.read(len(MAGIC)) != MAGIC:
            raise ValueError(f"{path} is not a Z^2 grid cache file")
        (n,) = struct.unpack("<Q", fh.read(8))
        header = json.loads(fh.read(n))
        if header["format"] != FORMAT_VERSION:
            raise ValueError(f"unsupported grid format {header['format']!r}")
        n_panels = header["n_panels"]
        order = header["gl_order"]
        edges = _read_array(fh, n_panels + 1)
        cumulative = _read_array(fh, n_panels + 1)
        z2 = _read_array(fh, n_panels * order).reshape(n_panels, order)
    spec = QuadratureSpec(**header["spec"])
    return CumulativeZGrid(header["t_max"], spec, edges, cumulative, z2, version=header["format"])


def default_cache_dir() -> Path:
    return Path(os.environ.get(CACHE_ENV) or Path.home() / ".cache" / "jacobs_ladder")


def spec_key(spec: QuadratureSpec) -> str:
    blob = json.dumps({"format": FORMAT_VERSION, "spec": asdict(spec)}, sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def default_cache_path(spec: QuadratureSpec, cache_dir=None) -> Path:
    return Path(cache_dir or default_cache_dir()) / f"zgrid-{spec_key(spec)}.bin"


def load_or_build(t_max: float, spec: QuadratureSpec | None = None, path=None, node_cap: int = DEFAULT_NODE_CAP) -> CumulativeZGrid:
    """Reuse a cached grid when its format and spec match and it reaches t_max."""
    spec = spec or QuadratureSpec()
    path = Path(path) if path else default_cache_path(spec)
    if path.exists():
        try:
            header = read_header(path)
        except (ValueError, OSError, json.JSONDecodeError) as exc:
            warnings.warn(f"unreadable grid cache {path}: {exc}; rebuilding")
        else:
            if header.get("format") != FORMAT_VERSION or header.get("spec") != asdict(spec):
                warnings.warn(f"grid cache {path} was built with a different spec; rebuilding")
            elif header["t_max"] < t_max:
                log.info("grid cache %s reaches %g < %g; rebuilding", path, header["t_max"], t_max)
            else:
                try:
                    return load_grid(path)
                except (ValueError, OSError) as exc:
                    warnings.warn(f"unreadable grid cache {path}: {exc}; rebuilding")
    grid = build_grid(t_max, spec, node_cap)
    path.parent.mkdir(parents=True, exist_ok=True)
    save_grid(grid, path)
    return grid


# ---------------------------------------------------------------- integrals

def _local_integral(lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """int_lo^hi Z^2 by one Gauss-Legendre panel per pair."""
    width = hi - lo
    t = lo[:, None] + GL_NODES[None, :] * width[:, None]
    z = _hardy_z_unchecked(t.ravel()).reshape(t.shape)
    return width * ((z * z) @ GL_WEIGHTS)


def hl_integral(T, grid: CumulativeZGrid):
    """F(T) = int_0^T Z^2(t) dt from the cumulative table plus a local panel."""
    arr = np.asarray(T, dtype=float)
    flat = arr.ravel()
    if flat.size and (flat.min() < T_MIN or flat.max() > grid.coverage or not np.all(np.isfinite(flat))):
        raise GridRangeError(f"T outside [{T_MIN}, {grid.coverage:g}]")
    j = np.clip(np.searchsorted(grid.edges, flat, side="right") - 1, 0, grid.n_panels - 1)
    out = grid.cumulative[j] + _local_integral(grid.edges[j], flat)
    return float(out[0]) if arr.ndim == 0 else out.reshape(arr.shape)


def hl_asymptotic(T):
    """Main terms T ln T + (2c - 1 - ln 2 pi) T of the Hardy-Littlewood integral."""
    if not T > math.e:
        raise DomainError(f"hl_asymptotic needs T > e, got {T!r}")
    return T * math.log(T) + (2.0 * EULER_C - 1.0 - LN_2PI) * T


def mu_a(x: float, a: float) -> float:
    return a * x * math.log(x)


def truncation_point(x: float, abs_tol: float) -> float:
    return _kernels.truncation_point(float(x), float(abs_tol))


def upper_limit(x: float, a: float, spec: QuadratureSpec) -> float:
    """u* = min(mu_a(x), t_trunc(x))."""
    return min(mu_a(x, a), truncation_point(x, spec.abs_tol))


def _check_damped_args(x, a):
    if not x > math.e:
        raise DomainError(f"damped integrals need x > e, got {x!r}")
    if not 7.0 <= a <= 8.0:
        raise DomainError(f"mu-family parameter a must lie in [7, 8], got {a!r}")


def _direct_pair(x: float, upper: float, grid: CumulativeZGrid):
    """Node-by-node sums up to ``upper`` with an exact partial last panel."""
    j = int(np.searchsorted(grid.edges, upper, side="right") - 1)
    j = min(j, grid.n_panels)
    widths = np.diff(grid.edges[: j + 1])
    t = grid.edges[:j, None] + GL_NODES[None, :] * widths[:, None]
    w = GL_WEIGHTS[None, :] * widths[:, None] * grid.z2[:j] * np.exp(-2.0 * t / x)
    d0 = float(np.sum(w))
    d1 = float(np.sum(w * t))
    lo = grid.edges[j]
    if upper > lo:
        tp = lo + GL_NODES * (upper - lo)
        zp = _hardy_z_unchecked(tp)
        wp = GL_WEIGHTS * (upper - lo) * zp * zp * np.exp(-2.0 * tp / x)
        d0 += float(np.sum(wp))
        d1 += float(np.sum(wp * tp))
    return d0, d1


def damped_moments(x: float, a: float, grid: CumulativeZGrid, truncate: bool = True):
    """(int_0^u* Z^2 e^{-2t/x} dt, int_0^u* t Z^2 e^{-2t/x} dt)."""
    _check_damped_args(x, a)
    t_trunc = truncation_point(x, grid.spec.abs_tol)
    mu = mu_a(x, a)
    upper = min(mu, t_trunc) if truncate else mu
    if upper > grid.coverage:
        raise GridRangeError(f"damped integral at x={x:g} needs the grid to t={upper:g} > {grid.coverage:g}")
    if truncate and x >= FAST_X_MIN and t_trunc <= mu:
        n_blocks = min(int(upper / BLOCK_WIDTH) + 1, grid.moments.shape[0])
        return _kernels.damped_pair(float(x), grid.moments, BLOCK_WIDTH, n_blocks)
    return _direct_pair(float(x), upper, grid)


def damped_integral(x: float, a: float, grid: CumulativeZGrid, truncate: bool = True) -> float:
    """int_0^u* Z^2(t) exp(-2t/x) dt with u* = min(mu_a(x), t_trunc(x)).

    Beyond t_trunc the integrand is below abs_tol / (t+2)^2 * Z^2.  With
    ``truncate=False`` the integral runs all the way to mu_a(x).
    """
    return damped_moments(x, a, grid, truncate)[0]


def weighted_first_moment(x: float, grid: CumulativeZGrid, a: float = 7.0, truncate: bool = True) -> float:
    """(2 / x^2) int_0^u* t exp(-2t/x) Z^2(t) dt, i.e. d/dx of the damped integral."""
    return 2.0 / (x * x) * damped_moments(x, a, grid, truncate)[1]


def required_t_max(x_max: float, spec: QuadratureSpec | None = None) -> float:
    """Grid coverage needed to evaluate damped integrals up to x_max."""
    spec = spec or QuadratureSpec()
    return truncation_point(x_max, spec.abs_tol) + BLOCK_WIDTH
