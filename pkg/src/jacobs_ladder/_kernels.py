"""Compiled inner loops shared by :mod:`specfun` and :mod:`hlgrid`.

Everything here works on plain float64 arrays and runs serially in a fixed
order, so results are bitwise reproducible across runs.
"""
from __future__ import annotations

import math

import numba as nb
import numpy as np

from ._rs_coefficients import RS_COEFFICIENTS

TWO_PI = 2.0 * math.pi

_width = max(len(c) for c in RS_COEFFICIENTS)
RS_COEF = np.zeros((len(RS_COEFFICIENTS), _width))
for _k, _c in enumerate(RS_COEFFICIENTS):
    RS_COEF[_k, : len(_c)] = _c

# Bernoulli numbers B_2 .. B_48 for the Euler-Maclaurin tail
_BERNOULLI = (
    1 / 6, -1 / 30, 1 / 42, -1 / 30, 5 / 66, -691 / 2730, 7 / 6, -3617 / 510,
    43867 / 798, -174611 / 330, 854513 / 138, -236364091 / 2730, 8553103 / 6,
    -23749461029 / 870, 8615841276005 / 14322, -7709321041217 / 510,
    2577687858367 / 6, -26315271553053477373 / 1919190, 2929993913841559 / 6,
    -261082718496449122051 / 13530, 1520097643918070802691 / 1806,
    -27833269579301024235023 / 690, 596451111593912163277961 / 282,
    -5609403368997817686249127547 / 46410,
)
EM_TERMS = len(_BERNOULLI)
EM_COEF = np.array([b / math.factorial(2 * k + 2) for k, b in enumerate(_BERNOULLI)])


@nb.njit(cache=True)
def theta_asymptotic(t):
    it = 1.0 / t
    it2 = it * it
    return (
        0.5 * t * math.log(t / TWO_PI) - 0.5 * t - math.pi / 8.0
        + it * (1.0 / 48.0 + it2 * (7.0 / 5760.0 + it2 * (31.0 / 80640.0 + it2 * 381.0 / 1290240.0)))
    )


@nb.njit(cache=True)
def _rs_remainder(a, coef):
    # a = sqrt(t / 2 pi); returns (-1)^(N-1) a^(-1/2) sum_k C_k(p) a^(-k)
    n = int(a)
    u = a - n - 0.5
    u2 = u * u
    r = 0.0
    ap = 1.0
    for k in range(coef.shape[0]):
        # C_k is even for even k and odd for odd k in u
        q = 0.0
        start = coef.shape[1] - 1
        if (start - k) % 2 == 1:
            start -= 1
        for j in range(start, -1, -2):
            q = q * u2 + coef[k, j]
        if k % 2 == 1:
            q *= u
        r += q * ap
        ap /= a
    if (n - 1) % 2 == 0:
        return r / math.sqrt(a)
    return -r / math.sqrt(a)


@nb.njit(cache=True)
def rs_z(t, coef):
    """Riemann-Siegel Z(t) with corrections C0..C4, pointwise."""
    out = np.empty(t.size)
    for i in range(t.size):
        tt = t[i]
        a = math.sqrt(tt / TWO_PI)
        n_terms = int(a)
        th = theta_asymptotic(tt)
        s = 0.0
        for n in range(1, n_terms + 1):
            s += math.cos(th - tt * math.log(n)) / math.sqrt(n)
        out[i] = 2.0 * s + _rs_remainder(a, coef)
    return out


@nb.njit(cache=True)
def rs_z_uniform(t0, h, n_panels, offsets, coef):
    """Z at t0 + (p + offsets[j]) * h for p < n_panels, via phase rotation.

    The main sum is advanced panel to panel by multiplying each term with
    exp(-i h ln n) instead of re-evaluating a cosine per node.
    """
    J = offsets.size
    sr = np.zeros((n_panels, J))
    si = np.zeros((n_panels, J))
    t_lo = t0 + offsets[0] * h
    t_hi = t0 + (n_panels - 1 + offsets[J - 1]) * h
    n_lo = int(math.sqrt(t_lo / TWO_PI))
    n_hi = int(math.sqrt(t_hi / TWO_PI))
    zr = np.empty(J)
    zi = np.empty(J)
    for n in range(1, n_hi + 1):
        ln = math.log(n)
        w = 1.0 / math.sqrt(n)
        rr = math.cos(h * ln)
        ri = -math.sin(h * ln)
        threshold = TWO_PI * n * n
        for j in range(J):
            ph = (t0 + offsets[j] * h) * ln
            zr[j] = w * math.cos(ph)
            zi[j] = -w * math.sin(ph)
        for p in range(n_panels):
            if n <= n_lo:
                for j in range(J):
                    sr[p, j] += zr[j]
                    si[p, j] += zi[j]
            else:
                for j in range(J):
                    if t0 + (p + offsets[j]) * h >= threshold:
                        sr[p, j] += zr[j]
                        si[p, j] += zi[j]
            for j in range(J):
                x = zr[j] * rr - zi[j] * ri
                zi[j] = zr[j] * ri + zi[j] * rr
                zr[j] = x
    out = np.empty((n_panels, J))
    for p in range(n_panels):
        for j in range(J):
            tt = t0 + (p + offsets[j]) * h
            th = theta_asymptotic(tt)
            main = 2.0 * (math.cos(th) * sr[p, j] - math.sin(th) * si[p, j])
            out[p, j] = main + _rs_remainder(math.sqrt(tt / TWO_PI), coef)
    return out


@nb.njit(cache=True)
def em_zeta(t, em_coef):
    """zeta(1/2 + i t) by Euler-Maclaurin summation."""
    K = em_coef.size
    out = np.empty(t.size, dtype=np.complex128)
    for i in range(t.size):
        s = complex(0.5, t[i])
        big_n = int((abs(t[i]) + 2 * K + 1) / math.pi) + 1
        acc = 0j
        for n in range(1, big_n):
            acc += np.exp(-s * math.log(n))
        ln_n = math.log(big_n)
        n_pow = np.exp(-s * ln_n)
        acc += n_pow * big_n / (s - 1.0) + 0.5 * n_pow
        # running factor s (s+1) ... (s+2k-2) N^(-s-2k+1)
        fac = s * n_pow / big_n
        for k in range(K):
            term = em_coef[k] * fac
            acc += term
            fac *= (s + 2 * k + 1) * (s + 2 * k + 2) / (big_n * big_n)
        out[i] = acc
    return out


@nb.njit(cache=True)
def panel_sums(z2, weights, widths):
    out = np.empty(z2.shape[0])
    for p in range(z2.shape[0]):
        s = 0.0
        for j in range(z2.shape[1]):
            s += weights[j] * z2[p, j]
        out[p] = s * widths[p]
    return out


@nb.njit(cache=True)
def compensated_cumsum(values):
    """Kahan-compensated running sum with a leading zero."""
    out = np.empty(values.size + 1)
    out[0] = 0.0
    s = 0.0
    c = 0.0
    for i in range(values.size):
        y = values[i] - c
        tmp = s + y
        c = (tmp - s) - y
        s = tmp
        out[i + 1] = s
    return out


@nb.njit(cache=True)
def block_moments(edges, z2, offsets, weights, block_width, n_moments):
    """Per-block moments sum_i w_i Z_i^2 s_i^k with s_i = (t_i - c_b) / W.

    Node i is assigned to block floor(t_i / W); c_b is the block centre.
    """
    n_blocks = int(edges[-1] / block_width) + 1
    out = np.zeros((n_blocks, n_moments))
    for p in range(z2.shape[0]):
        lo = edges[p]
        h = edges[p + 1] - lo
        for j in range(z2.shape[1]):
            t = lo + offsets[j] * h
            b = int(t / block_width)
            s = t / block_width - b - 0.5
            v = weights[j] * h * z2[p, j]
            for k in range(n_moments):
                out[b, k] += v
                v *= s
    return out


@nb.njit(cache=True)
def truncation_point(x, abs_tol):
    """Smallest t beyond the peak with exp(-2t/x) (t+2)^2 < abs_tol."""
    log_tol = math.log(abs_tol)
    t = max(x, 1.0)
    for _ in range(200):
        t_new = 0.5 * x * (2.0 * math.log(t + 2.0) - log_tol)
        if abs(t_new - t) <= 1e-12 * t_new:
            t = t_new
            break
        t = t_new
    return t


@nb.njit(cache=True)
def damped_pair(x, moments, block_width, n_blocks):
    """(sum Z^2 e^{-2t/x}, sum t Z^2 e^{-2t/x}) over the first n_blocks blocks.

    The damping factor of each node is expanded about its block centre,
    exp(-2 t/x) = exp(-2 c/x) sum_k (-2 W s / x)^k / k!.
    """
    K = moments.shape[1] - 1
    a = -2.0 * block_width / x
    coef = np.empty(K + 1)
    coef[0] = 1.0
    for k in range(1, K + 1):
        coef[k] = coef[k - 1] * a / k
    d0 = 0.0
    d1 = 0.0
    for b in range(n_blocks):
        c = (b + 0.5) * block_width
        e = math.exp(-2.0 * c / x)
        q0 = 0.0
        q1 = 0.0
        for k in range(K - 1, -1, -1):
            q0 += coef[k] * moments[b, k]
            q1 += coef[k] * moments[b, k + 1]
        d0 += e * q0
        d1 += e * (c * q0 + block_width * q1)
    return d0, d1
