from __future__ import annotations

import math
import warnings

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import quad

from jacobs_ladder import hlgrid, specfun
from jacobs_ladder.errors import DomainError, GridRangeError, ResourceError
from jacobs_ladder.hlgrid import QuadratureSpec


def z2(t):
    z = specfun.hardy_z(t, t_min=0.0)
    return z * z


def quad_F(a: float, b: float) -> float:
    """Adaptive scipy oracle for int_a^b Z^2, split at unit breakpoints."""
    edges = np.linspace(a, b, max(2, int(b - a) + 1))
    return sum(quad(z2, lo, hi, epsabs=1e-13, epsrel=1e-13, limit=200)[0] for lo, hi in zip(edges[:-1], edges[1:]))


def composite_gl(f, a: float, b: float, width: float = 0.2, order: int = 20) -> float:
    """Fixed composite Gauss-Legendre rule on a layout unrelated to the grid."""
    x, w = np.polynomial.legendre.leggauss(order)
    n = math.ceil((b - a) / width)
    edges = np.linspace(a, b, n + 1)
    mid = 0.5 * (edges[:-1] + edges[1:])[:, None]
    half = 0.5 * np.diff(edges)[:, None]
    t = (mid + half * x[None, :]).ravel()
    return float(np.sum((half * w[None, :]).ravel() * f(t)))


# ---------------------------------------------------------- cumulative F

def test_F_low_heights_against_mpmath():
    with mpmath.workdps(20):
        ref = float(mpmath.quad(lambda t: mpmath.siegelz(t) ** 2, np.linspace(0, 30, 31).tolist()))
    grid = hlgrid.build_grid(100.0)
    assert hlgrid.hl_integral(30.0, grid) == pytest.approx(ref, rel=1e-11)


@pytest.mark.parametrize("T", [100.0, 1000.0])
def test_F_against_scipy_quad(small_grid, T):
    assert hlgrid.hl_integral(T, small_grid) == pytest.approx(quad_F(0.0, T), rel=1e-11)


@given(st.floats(1.0, 1999.0), st.floats(0.01, 5.0))
def test_F_increments_against_quad(small_grid, a, h):
    b = min(a + h, small_grid.coverage)
    got = hlgrid.hl_integral(b, small_grid) - hlgrid.hl_integral(a, small_grid)
    ref = quad(z2, a, b, epsabs=1e-13, epsrel=1e-12, limit=200)[0]
    assert got == pytest.approx(ref, rel=1e-9, abs=1e-9)


@given(st.lists(st.floats(1.0, 2000.0), min_size=2, max_size=20))
def test_F_monotone_and_vectorised(small_grid, ts):
    ts = np.sort(np.array(ts))
    vals = hlgrid.hl_integral(ts, small_grid)
    assert np.all(np.diff(vals) >= -1e-9)
    assert np.array_equal(vals, [hlgrid.hl_integral(float(t), small_grid) for t in ts])


def test_F_range_errors(small_grid):
    with pytest.raises(GridRangeError):
        hlgrid.hl_integral(small_grid.coverage + 1.0, small_grid)
    with pytest.raises(GridRangeError):
        hlgrid.hl_integral(0.5, small_grid)
    with pytest.raises(GridRangeError):
        hlgrid.hl_integral(math.nan, small_grid)


@pytest.mark.parametrize("T", [1e2, 1e3])
def test_hl_remainder_small(small_grid, T):
    r = hlgrid.hl_integral(T, small_grid) - hlgrid.hl_asymptotic(T)
    assert abs(r) <= 2.0 * math.sqrt(T) * math.log(T)


def test_hl_asymptotic_domain():
    with pytest.raises(DomainError):
        hlgrid.hl_asymptotic(2.0)
    c = specfun.EULER_C
    assert hlgrid.hl_asymptotic(100.0) == pytest.approx(100 * math.log(100) + (2 * c - 1 - math.log(2 * math.pi)) * 100)


# -------------------------------------------------------------- layout

def test_node_spacing_within_oscillation_budget(small_grid):
    t, _ = small_grid.nodes
    gaps = np.diff(t)
    budget = np.array([hlgrid.oscillation_length(v) for v in t[1:]]) / small_grid.spec.panels_per_oscillation
    assert np.all(gaps <= budget * (1 + 1e-9))
    assert np.all(gaps > 0)


def test_grid_covers_t_max(small_grid):
    assert small_grid.coverage >= small_grid.t_max
    assert small_grid.edges[0] == 0.0 and small_grid.cumulative[0] == 0.0


def test_layout_is_prefix_stable():
    a = hlgrid.build_grid(1500.0)
    b = hlgrid.build_grid(2500.0)
    n = a.n_panels - 1
    assert np.array_equal(a.edges[:n], b.edges[:n])
    assert np.array_equal(a.z2[:n], b.z2[:n])


def test_node_cap():
    with pytest.raises(ResourceError):
        hlgrid.build_grid(1e4, node_cap=1000)


def test_quadrature_spec_validation():
    with pytest.raises(ValueError):
        QuadratureSpec(rel_tol=0.0)
    with pytest.raises(ValueError):
        QuadratureSpec(panels_per_oscillation=2)


# --------------------------------------------------------- damped integrals

@pytest.mark.parametrize("x", [150.0, 300.0])
def test_damped_integral_against_independent_rule(small_grid, x):
    grid = hlgrid.build_grid(hlgrid.required_t_max(x) + 10.0)
    upper = hlgrid.upper_limit(x, 7.0, grid.spec)
    ref = composite_gl(lambda t: z2(t) * np.exp(-2.0 * t / x), 0.0, upper)
    assert hlgrid.damped_integral(x, 7.0, grid) == pytest.approx(ref, rel=1e-11)


@pytest.mark.parametrize("x", [250.0, 2e3, 2e4, 4e4])
def test_fast_and_direct_paths_agree(grid, x):
    fast = hlgrid.damped_moments(x, 7.0, grid)
    upper = hlgrid.upper_limit(x, 7.0, grid.spec)
    direct = hlgrid._direct_pair(x, upper, grid)
    assert fast[0] == pytest.approx(direct[0], rel=1e-12)
    assert fast[1] == pytest.approx(direct[1], rel=1e-12)


@pytest.mark.parametrize("x", [500.0, 5e3, 3e4])
def test_first_moment_is_derivative(grid, x):
    h = 1e-3 * x
    fd = (hlgrid.damped_integral(x + h, 7.0, grid) - hlgrid.damped_integral(x - h, 7.0, grid)) / (2 * h)
    assert hlgrid.weighted_first_moment(x, grid) == pytest.approx(fd, rel=1e-6)


def test_truncation_tail_is_negligible(small_grid):
    x = 60.0
    full = hlgrid.damped_integral(x, 7.0, small_grid, truncate=False)
    cut = hlgrid.damped_integral(x, 7.0, small_grid)
    assert abs(full - cut) <= 1e-9


def test_truncation_point_definition():
    x, tol = 1e3, 1e-10
    t = hlgrid.truncation_point(x, tol)
    assert math.exp(-2 * t / x) * (t + 2) ** 2 == pytest.approx(tol, rel=1e-9)


def test_damped_argument_checks(small_grid):
    with pytest.raises(DomainError):
        hlgrid.damped_integral(2.0, 7.0, small_grid)
    with pytest.raises(DomainError):
        hlgrid.damped_integral(100.0, 6.5, small_grid)
    with pytest.raises(GridRangeError):
        hlgrid.damped_integral(5e3, 7.0, small_grid)


@given(st.floats(200.0, 3e4))
def test_damped_increasing_in_x(grid, x):
    assert hlgrid.damped_integral(x * 1.001, 7.0, grid) > hlgrid.damped_integral(x, 7.0, grid)


# ---------------------------------------------------------------- cache

def test_cache_round_trip(tmp_path, small_grid):
    path = hlgrid.save_grid(small_grid, tmp_path / "g.bin")
    back = hlgrid.load_grid(path)
    assert back.header() == small_grid.header()
    for name in ("edges", "cumulative", "z2"):
        assert np.array_equal(getattr(back, name), getattr(small_grid, name))
    assert hlgrid.read_header(path)["format"] == hlgrid.FORMAT_VERSION


def test_rebuild_is_byte_identical(tmp_path):
    a = hlgrid.save_grid(hlgrid.build_grid(800.0), tmp_path / "a.bin")
    b = hlgrid.save_grid(hlgrid.build_grid(800.0), tmp_path / "b.bin")
    assert a.read_bytes() == b.read_bytes()


def test_spec_mismatch_forces_rebuild(tmp_path):
    path = tmp_path / "g.bin"
    hlgrid.save_grid(hlgrid.build_grid(600.0, QuadratureSpec(panels_per_oscillation=6)), path)
    with pytest.warns(UserWarning, match="different spec"):
        g = hlgrid.load_or_build(600.0, QuadratureSpec(), path)
    assert g.spec == QuadratureSpec()
    assert hlgrid.read_header(path)["spec"]["panels_per_oscillation"] == 8


def test_short_cache_is_extended_and_long_cache_reused(tmp_path):
    path = tmp_path / "g.bin"
    hlgrid.save_grid(hlgrid.build_grid(500.0), path)
    g = hlgrid.load_or_build(900.0, path=path)
    assert g.coverage >= 900.0
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        again = hlgrid.load_or_build(700.0, path=path)
    assert again.t_max == 900.0


def test_corrupt_cache_rebuilds(tmp_path):
    path = tmp_path / "g.bin"
    path.write_bytes(b"not a grid")
    with pytest.warns(UserWarning, match="unreadable"):
        g = hlgrid.load_or_build(400.0, path=path)
    assert g.coverage >= 400.0


def test_truncated_cache_rebuilds(tmp_path):
    path = hlgrid.save_grid(hlgrid.build_grid(400.0), tmp_path / "g.bin")
    path.write_bytes(path.read_bytes()[:-100])
    with pytest.raises(ValueError, match="truncated"):
        hlgrid.load_grid(path)
    with pytest.warns(UserWarning, match="unreadable"):
        g = hlgrid.load_or_build(400.0, path=path)
    assert np.array_equal(g.z2, hlgrid.load_grid(path).z2)


def test_cache_dir_env(monkeypatch, tmp_path):
    monkeypatch.setenv(hlgrid.CACHE_ENV, str(tmp_path))
    p = hlgrid.default_cache_path(QuadratureSpec())
    assert p.parent == tmp_path
    assert hlgrid.spec_key(QuadratureSpec()) in p.name
    assert hlgrid.spec_key(QuadratureSpec(abs_tol=1e-12)) != hlgrid.spec_key(QuadratureSpec())
