from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import brentq

from jacobs_ladder import hlgrid, specfun
from jacobs_ladder.errors import BracketError, DomainError, GridRangeError
from jacobs_ladder.ladder import C0_ESTIMATE, Ladder, LadderConfig, fit_c0, required_grid_t_max

from test_hlgrid import composite_gl


def z2(t):
    z = specfun.hardy_z(t, t_min=0.0)
    return z * z


# ----------------------------------------------------------------- solve

@pytest.mark.parametrize("T", [1e3, 3e3, 1e4, 2e4])
def test_residual_relative(ladder, T):
    assert abs(ladder.residual(T)) <= 1e-9 * ladder.F(T)


def test_root_against_independent_quadrature(ladder):
    T = 1e3
    x = ladder.solve_phi(T)
    upper = hlgrid.upper_limit(x, ladder.config.a, ladder.grid.spec)
    lhs = composite_gl(lambda t: z2(t) * np.exp(-2.0 * t / x), 0.0, upper, width=0.25)
    rhs = composite_gl(z2, 0.0, T)
    assert lhs == pytest.approx(rhs, rel=1e-9)


@given(st.floats(200.0, 2e4), st.floats(1.0001, 1.5))
def test_phi_strictly_increasing(ladder, T, r):
    T2 = min(T * r, 2e4)
    if T2 <= T:
        return
    assert ladder.solve_phi(T2) > ladder.solve_phi(T)


@given(st.floats(200.0, 2e4))
def test_phi1_below_identity(ladder, T):
    assert ladder.phi1(T) < T


@given(st.floats(200.0, 1.5e4))
@settings(max_examples=10)
def test_phi1_inverse_round_trip(ladder, y):
    T = ladder.phi1_inverse(y)
    assert T > y
    assert ladder.phi1(T) == pytest.approx(y, rel=1e-10)


def test_phi1_asymptotic_shape(ladder):
    # T - phi1(T) grows like (1 - c) T / ln T
    for T in (1e3, 1e4, 2e4):
        ratio = (T - ladder.phi1(T)) / ((1 - specfun.EULER_C) * T / math.log(T))
        assert 0.8 < ratio < 1.2


# ------------------------------------------------------------- derivatives

@pytest.mark.parametrize("T", [1e3, 1e4, 2e4])
def test_omega_is_about_ln_T(ladder, T):
    assert 0.8 < ladder.omega(T) / math.log(T) < 1.2


def test_potential_boundary_term_negligible(ladder):
    first, second = ladder.potential_terms(ladder.solve_phi(1e4))
    assert first > 0
    assert abs(second) < 1e-20 * first


@pytest.mark.parametrize("t", [1000.37, 4321.1, 12345.6])
def test_z_tilde_sq_is_derivative_of_phi1(ladder, t):
    if abs(specfun.hardy_z(t)) < 0.1:
        pytest.skip("near a zero")
    # Z~^2 curves sharply where |Z| is small, so keep h short
    h = 1e-4
    fd = (ladder.phi1(t + h) - ladder.phi1(t - h)) / (2 * h)
    assert ladder.z_tilde_sq(t) == pytest.approx(fd, rel=2e-4)


def test_z_tilde_sq_vanishes_at_zero(ladder):
    ts = np.arange(1000.0, 1010.0, 0.05)
    z = specfun.hardy_z(ts)
    i = int(np.flatnonzero(np.sign(z[:-1]) != np.sign(z[1:]))[0])
    g = brentq(specfun.hardy_z, ts[i], ts[i + 1], xtol=1e-14)
    assert ladder.z_tilde_sq(g) < 1e-18


def test_z_tilde_sq_many_matches_scalar(ladder):
    ts = np.array([[1200.5, 3400.25], [5600.125, 7800.0625]])
    many = ladder.z_tilde_sq_many(ts)
    assert many.shape == ts.shape
    ref = [[ladder.z_tilde_sq(v) for v in row] for row in ts]
    assert np.allclose(many, ref, rtol=1e-12, atol=0)


def test_hl_representation_residual_small(ladder):
    for T in (1e3, 1e4, 2e4):
        assert abs(ladder.hl_representation_residual(T)) < 1e-3


def test_fit_c0_reproduces_constant(ladder):
    c0, b, res = fit_c0(ladder)
    assert c0 == pytest.approx(C0_ESTIMATE, abs=1e-9)
    assert b < 0
    assert np.abs(res).max() < 1e-3
    mags = [abs(ladder.hl_representation_residual(T)) for T in (1e3, 1e4, 2e4)]
    assert mags[0] > mags[1] > mags[2]


# -------------------------------------------------------------- determinism

def test_memo_is_bitwise(ladder):
    a = ladder.solve_phi(4567.0)
    fresh = Ladder(ladder.grid, ladder.config)
    assert fresh.solve_phi(4567.0) == a
    assert ladder.solve_phi(4567.0) == a


def test_threaded_matches_serial(grid):
    Ts = np.geomspace(1e3, 1e4, 8).tolist()
    serial = [Ladder(grid).phi1(T) for T in Ts]
    shared = Ladder(grid)
    with ThreadPoolExecutor(2) as ex:
        threaded = list(ex.map(shared.phi1, Ts))
    assert threaded == serial


# ------------------------------------------------------------------ errors

def test_below_T0_raises(ladder):
    with pytest.raises(DomainError):
        ladder.solve_phi(50.0)
    with pytest.raises(DomainError):
        ladder.phi1_inverse(math.nan)


def test_short_grid_raises(small_grid):
    lad = Ladder(small_grid)
    assert lad.max_T < 2e3
    with pytest.raises((GridRangeError, BracketError)):
        lad.solve_phi(1.5e3)


def test_phi_prime_domain(ladder):
    with pytest.raises(DomainError):
        ladder.phi_prime_potential(2.0)


@pytest.mark.parametrize("kwargs", [dict(a=6.0), dict(a=9.0), dict(T0=0.5), dict(root_rel_tol=0.0), dict(bracket_factor=1.0)])
def test_config_validation(kwargs):
    with pytest.raises(ValueError):
        LadderConfig(**kwargs)


def test_required_grid_covers_bracket(desk_t_max, grid):
    assert desk_t_max == required_grid_t_max(2e4)
    assert grid.coverage >= desk_t_max
    assert Ladder(grid).max_T > 2e4
