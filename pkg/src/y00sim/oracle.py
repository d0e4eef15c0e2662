"""Arbitrary-precision reference for the repetition-attack curve.

Independent of the float path in ``repetition``: thresholds, binomial
coefficients and tail sums are evaluated exactly in mpmath.
"""

from __future__ import annotations

from mpmath import mp, mpf, binomial, floor, log


def success_probability(p, keyspace_bits: int, N: int, dps: int = 60):
    """Return (n_th, floor(n_th), Pr(Success)) as mpmath numbers."""
    with mp.workdps(dps):
        ps = mpf(p)
        pf = (1 - ps) / (mpf(2) ** keyspace_bits - 1)
        n_th = N * log((1 - pf) / (1 - ps), 2) / log(ps * (1 - pf) / pf / (1 - ps), 2)
        k = int(floor(n_th))
        if k < 0:
            return n_th, k, mpf(1)
        if k >= N:
            return n_th, k, mpf(0)
        fail = mp.fsum(binomial(N, n) * ps**n * (1 - ps) ** (N - n) for n in range(k + 1))
        return n_th, k, 1 - fail


def max_relative_deviation(curve) -> float:
    """Largest |float - exact| / exact of p_success over a computed curve."""
    worst = 0.0
    for pt in curve.points:
        _, _, exact = success_probability(mpf(2) ** mpf(curve.p_log2), int(curve.keyspace_bits), pt.N)
        if exact == 0:
            dev = abs(pt.p_success)
        else:
            dev = float(abs(mpf(pt.p_success) - exact) / exact)
        worst = max(worst, dev)
    return worst
