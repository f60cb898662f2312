"""Regenerate the Taylor tables in ``jacobs_ladder/_rs_coefficients.py``.

The Riemann-Siegel correction terms C0..C4 are linear combinations of
derivatives of Psi(p) = cos(2 pi (p^2 - p - 1/16)) / cos(2 pi p).  Psi is
entire and even about p = 1/2, so each C_k is tabulated as a power series
in u = p - 1/2 (only every other power is non-zero).

Usage: python tools/gen_rs_coefficients.py > src/jacobs_ladder/_rs_coefficients.py
"""
import mpmath as mp

mp.mp.dps = 60
DEGREE = 64


def psi(u):
    return -mp.cos(2 * mp.pi * (u * u - mp.mpf(5) / 16)) / mp.cos(2 * mp.pi * u)


def main():
    # Taylor coefficients a_j of Psi(1/2 + u) about u = 0
    a = mp.taylor(psi, mp.mpf(0), DEGREE + 13)

    def deriv(order):
        # coefficients of d^order/du^order Psi as series in u
        return [a[j + order] * mp.fac(j + order) / mp.fac(j) for j in range(DEGREE + 1)]

    pi = mp.pi
    combos = {
        0: [(0, 1)],
        1: [(3, -1 / (96 * pi**2))],
        2: [(2, 1 / (64 * pi**2)), (6, 1 / (18432 * pi**4))],
        3: [(1, -1 / (64 * pi**2)), (5, -1 / (3840 * pi**4)), (9, -1 / (5308416 * pi**6))],
        4: [
            (0, 1 / (128 * pi**2)),
            (4, 19 / (24576 * pi**4)),
            (8, 11 / (5898240 * pi**6)),
            (12, 1 / (2038431744 * pi**8)),
        ],
    }
    print('"""Power series of the Riemann-Siegel corrections C0..C4 in u = p - 1/2.')
    print()
    print("Generated by tools/gen_rs_coefficients.py; do not edit by hand.")
    print('"""')
    print()
    print("RS_COEFFICIENTS = (")
    for k in range(5):
        series = [mp.mpf(0)] * (DEGREE + 1)
        for order, weight in combos[k]:
            d = deriv(order)
            for j in range(DEGREE + 1):
                series[j] += weight * d[j]
        # drop trailing terms that cannot matter for |u| <= 1/2
        last = max(j for j in range(DEGREE + 1) if abs(series[j]) * mp.mpf(0.5) ** j > mp.mpf(10) ** -22)
        print("    (")
        for j in range(last + 1):
            print(f"        {mp.nstr(series[j], 20, min_fixed=-1, max_fixed=-1) if abs(series[j]) > mp.mpf(10) ** -40 else '0.0'},")
        print("    ),")
    print(")")


if __name__ == "__main__":
    main()
