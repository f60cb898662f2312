from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.optimize import brentq
from scipy.special import eval_legendre

from jacobs_ladder import orthosys as os_
from jacobs_ladder import specfun
from jacobs_ladder.errors import AdmissibilityError, DomainError, InvariantError
from jacobs_ladder.iterations import build_chain

T = 1e4


@pytest.fixture(scope="module")
def leg():
    return os_.legendre_system()


@pytest.fixture(scope="module")
def spec1(ladder, leg):
    return os_.iterated_spec(leg, 1, T, ladder)


@pytest.fixture(scope="module")
def spec3(ladder, leg):
    return os_.iterated_spec(leg, 3, T, ladder)


# ----------------------------------------------------------------- Legendre

def test_legendre_low_degrees():
    assert os_.legendre_eval(0, 0.3) == 1.0
    assert os_.legendre_eval(1, 0.3) == 0.3
    assert os_.legendre_eval(2, 0.5) == pytest.approx(-0.125, abs=1e-16)
    with pytest.raises(DomainError):
        os_.legendre_eval(-1, 0.0)


@given(st.integers(0, 20), st.floats(-1.0, 1.0))
def test_legendre_against_scipy(n, t):
    assert os_.legendre_eval(n, t) == pytest.approx(eval_legendre(n, t), abs=1e-13)


def test_legendre_norms_by_quadrature():
    x, w = np.polynomial.legendre.leggauss(30)
    P = os_.legendre_all(11, x)
    G = (P * w) @ P.T
    assert np.allclose(G, np.diag(2.0 / (2 * np.arange(11) + 1)), atol=1e-14)


@pytest.mark.parametrize("make", [os_.legendre_system, os_.trigonometric_system])
def test_base_gram_is_diagonal(make):
    base = make(a=2.0, l=1.5)
    rep = os_.base_gram(base, 8, rel_tol=1e-12)
    assert rep.max_offdiag_ratio < 1e-10
    assert np.allclose(np.diag(rep.entries), base.norms(8), rtol=1e-10)
    assert rep.diag_scale == 1.0


def test_trig_members():
    base = os_.trigonometric_system(a=0.0, l=1.0)
    v = base.values(0.25, 5)
    assert v == pytest.approx([1.0, math.cos(math.pi / 4), math.sin(math.pi / 4), math.cos(math.pi / 2), math.sin(math.pi / 2)])
    assert base(3, 0.25) == pytest.approx(0.0, abs=1e-15)


def test_base_validation():
    with pytest.raises(DomainError):
        os_.legendre_system(l=0.0)
    with pytest.raises(DomainError):
        os_.gram_matrix(lambda t: [1.0], 1, (0.0, 1.0))


def test_offdiag_ratio():
    G = np.array([[4.0, 1.0], [1.0, 1.0]])
    assert os_.offdiag_ratio(G) == 0.5


# ------------------------------------------------------- external systems

def test_external_system_accepted():
    f = lambda n, t: math.cos(n * t)
    base = os_.external_system(f, 0.0, math.pi, n_check=4)
    assert base.kind == "external"
    assert base.norms(3) is None
    assert base(2, 0.5) == math.cos(1.0)


def test_external_system_rejected():
    with pytest.raises(InvariantError, match="not orthogonal"):
        os_.external_system(lambda n, t: t**n, 0.0, 1.0, n_check=3)


# ------------------------------------------------------- iterated systems

def test_spec_geometry(spec1):
    seg = spec1.segment
    assert seg.k == 1
    assert spec1.stretch == pytest.approx(seg.length / 2.0)
    assert spec1.diag_scale * spec1.stretch == pytest.approx(1.0)


def test_affine_map(spec1):
    seg = spec1.segment
    assert os_.affine_to_segment(-1.0, spec1) == seg.lo
    assert os_.affine_to_segment(1.0, spec1) == seg.hi
    assert os_.affine_to_segment(0.0, spec1) == pytest.approx(seg.midpoint, rel=1e-15)
    with pytest.raises(DomainError):
        os_.affine_to_segment(1.5, spec1)


def test_spec_validation(ladder, leg, spec1):
    with pytest.raises(DomainError):
        os_.IteratedSystemSpec(leg, 0, T, spec1.chain)
    with pytest.raises(DomainError):
        os_.IteratedSystemSpec(leg, 2, T, spec1.chain)
    other = build_chain(T, 4.0, 1, ladder)
    with pytest.raises(DomainError, match="chain"):
        os_.IteratedSystemSpec(leg, 1, T, other)


def test_admissibility_gate(ladder):
    wide = os_.legendre_system(a=0.0, l=60.0)
    with pytest.raises(AdmissibilityError, match="T/\\(10 ln T\\)"):
        os_.iterated_spec(wide, 1, T, ladder)
    assert os_.iterated_spec(wide, 1, T, ladder, allow_inadmissible=True).p == 1


def test_member_zero_is_amplitude(ladder, spec1):
    t = 0.123
    rho = os_.affine_to_segment(t, spec1)
    f0 = os_.iterated_eval(0, t, spec1, ladder)
    assert f0 == pytest.approx(math.sqrt(ladder.z_tilde_sq(rho)), rel=1e-14)
    assert os_.weight_eval(t, spec1, ladder) == f0 * f0


@given(st.floats(-1.0, 1.0))
def test_weight_nonnegative_and_consistent(ladder, spec3, t):
    w = os_.weight_eval(t, spec3, ladder)
    assert w >= 0
    assert w == os_.iterated_eval(0, t, spec3, ladder) ** 2


def test_vanishes_at_zero_of_Z(ladder, spec1):
    seg = spec1.segment
    ts = np.linspace(seg.lo, seg.hi, 400)
    z = specfun.hardy_z(ts)
    i = int(np.flatnonzero(np.sign(z[:-1]) != np.sign(z[1:]))[0])
    gamma = brentq(specfun.hardy_z, ts[i], ts[i + 1], xtol=1e-13)
    t = -1.0 + (gamma - seg.lo) / spec1.stretch
    assert abs(os_.iterated_eval(2, t, spec1, ladder)) < 1e-6


def test_automorphism_endpoints_and_monotone(ladder, spec3):
    assert abs(os_.automorphism_w(-1.0, spec3, ladder) + 1.0) <= 1e-9
    assert abs(os_.automorphism_w(1.0, spec3, ladder) - 1.0) <= 1e-9
    w = [os_.automorphism_w(t, spec3, ladder) for t in np.linspace(-1, 1, 40)]
    assert np.all(np.diff(w) > 0)


def test_single_stage_composition_matches(ladder, spec3):
    for t in (-0.7, 0.1, 0.9):
        assert np.array_equal(os_.composed_values(t, [spec3], ladder, 4), os_.iterated_values(t, spec3, ladder, 4))


def test_composition_validation(ladder, spec1):
    with pytest.raises(DomainError):
        os_.composed_values(0.0, [], ladder, 2)
    other = os_.iterated_spec(os_.legendre_system(a=0.0, l=1.0), 1, T, ladder)
    with pytest.raises(DomainError, match="share"):
        os_.composed_values(0.5, [spec1, other], ladder, 2)


# ------------------------------------------------------------------- Gram

def test_iterated_gram_p1(ladder, spec1, leg):
    rep = os_.iterated_gram(spec1, ladder, 4)
    assert np.array_equal(rep.entries, rep.entries.T)
    assert rep.max_offdiag_ratio < 1e-6
    assert np.allclose(rep.norm_transport(), leg.norms(4), rtol=1e-6)
    assert rep.diag_scale == spec1.diag_scale


def test_tolerance_controls_work(ladder, spec1):
    loose = os_.iterated_gram(spec1, ladder, 4, rel_tol=1e-3)
    tight = os_.iterated_gram(spec1, ladder, 4, rel_tol=1e-8)
    assert tight.n_evals > loose.n_evals
    assert np.allclose(loose.entries, tight.entries, rtol=0, atol=1e-3)
    assert tight.max_offdiag_ratio < 1e-8


def test_trig_gram_p2(ladder):
    base = os_.trigonometric_system()
    spec = os_.iterated_spec(base, 2, T, ladder)
    rep = os_.iterated_gram(spec, ladder, 5)
    assert rep.max_offdiag_ratio < 1e-6
    assert np.allclose(rep.norm_transport(), base.norms(5), rtol=1e-6)
