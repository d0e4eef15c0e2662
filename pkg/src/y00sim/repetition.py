"""Repetition attack over many keystream periods.

Each period Eve repeats the same collective measurement on a fresh known
plaintext, so the count of correct identifications after N periods is
binomial. She decides with a Bayes threshold on that count; the probability
the count stays at or below the threshold is her failure probability.

Confusion probabilities for wrong hypotheses can sit far below the double
range (2^-1024 and lower), so they are carried as base-2 logarithms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import betaln, logsumexp

from .errors import DegenerateModel, RangeError, ShapeError

LN2 = math.log(2.0)


def _log2_mersenne(bits: float) -> float:
    """log2(2^bits - 1)."""
    return bits + math.log1p(-(2.0 ** -bits)) / LN2


@dataclass(frozen=True)
class ConfusionModel:
    ps: float
    log2_pf: float
    keyspace_bits: float
    priors: str | np.ndarray = "uniform"

    @property
    def pf(self) -> float:
        return 2.0**self.log2_pf

    def normalization_error(self) -> float:
        """Relative error of ps + (2^bits - 1) pf = 1, evaluated in log domain."""
        log2_rest = _log2_mersenne(self.keyspace_bits) + self.log2_pf
        return abs(self.ps + 2.0**log2_rest - 1.0)

    def log2_prior(self, index: int) -> float:
        if isinstance(self.priors, str):
            return -float(self.keyspace_bits)
        return math.log2(self.priors[index])


def symmetric_confusion(p: float, keyspace_bits: float) -> ConfusionModel:
    """Correct identification with prob. p, every wrong one equally likely."""
    if not 0 < p < 1:
        raise RangeError(f"p must lie in (0, 1), got {p}")
    if not 1 <= keyspace_bits <= 1024:
        raise RangeError("keyspace_bits must lie in [1, 1024]")
    log2_pf = math.log1p(-p) / LN2 - _log2_mersenne(keyspace_bits)
    return ConfusionModel(p, log2_pf, keyspace_bits)


def max_prior_ratio_log2(cm: ConfusionModel, true_index: int = 0) -> float:
    """max over wrong hypotheses of log2(Pr(wrong) / Pr(true))."""
    if isinstance(cm.priors, str):
        return 0.0
    pr = np.asarray(cm.priors, dtype=float)
    wrong = np.delete(pr, true_index)
    return math.log2(wrong.max() / pr[true_index])


def decision_threshold(N: int, cm: ConfusionModel, prior_ratio_log2: float = 0.0) -> float:
    """Count at which the correct and a wrong hypothesis are equally probable."""
    if N < 1:
        raise RangeError("N must be >= 1")
    ln_ps = math.log(cm.ps)
    ln_pf = cm.log2_pf * LN2
    l1_ps = math.log1p(-cm.ps)
    l1_pf = math.log1p(-cm.pf)
    den = (ln_ps - ln_pf) + (l1_pf - l1_ps)
    if den == 0 or ln_ps == ln_pf:
        raise DegenerateModel("ps == pf: the Bayes boundary is undefined")
    num = N * (l1_pf - l1_ps) + prior_ratio_log2 * LN2
    return num / den


def _log_pmf(N: int, n: np.ndarray, ln_p: float, ln_q: float) -> np.ndarray:
    return -math.log(N + 1) - betaln(N - n + 1, n + 1) + n * ln_p + (N - n) * ln_q


def _log_tail(N: int, start: int, stop: int, step: int, ln_p: float, ln_q: float, chunk: int = 4096) -> float:
    """log of sum of pmf over n = start, start+step, ... (inclusive of stop).

    Terms must be monotonically decreasing along the walk; the walk stops once
    a whole chunk is negligible against the running total.
    """
    total = -math.inf
    n = start
    while (step > 0 and n <= stop) or (step < 0 and n >= stop):
        end = min(n + chunk, stop + 1) if step > 0 else max(n - chunk, stop - 1)
        idx = np.arange(n, end, step, dtype=np.float64)
        terms = _log_pmf(N, idx, ln_p, ln_q)
        total = np.logaddexp(total, logsumexp(terms))
        if terms.max() < total - 60:
            break
        n = end
    return float(total)


def binomial_tails(N: int, ps: float, n_th_floor: int) -> tuple[float, float]:
    """(P[X <= n_th_floor], P[X > n_th_floor]) for X ~ Binomial(N, ps).

    The smaller side is summed in log domain; the other is its complement.
    """
    if N < 1:
        raise RangeError("N must be >= 1")
    k = int(n_th_floor)
    if k < 0:
        return 0.0, 1.0
    if k >= N:
        return 1.0, 0.0
    ln_q = math.log1p(-ps)
    if k == 0:
        log_fail = N * ln_q
        return math.exp(log_fail), -math.expm1(log_fail)
    ln_p = math.log(ps)
    mode = math.floor((N + 1) * ps)
    if k < mode:
        fail = math.exp(_log_tail(N, k, 0, -1, ln_p, ln_q))
        return fail, 1.0 - fail
    success = math.exp(_log_tail(N, k + 1, N, 1, ln_p, ln_q))
    return 1.0 - success, success


def failure_probability(N: int, ps: float, n_th_floor: int) -> float:
    return binomial_tails(N, ps, n_th_floor)[0]


@dataclass(frozen=True)
class CurvePoint:
    N: int
    n_th: float
    n_th_floor: int
    p_fail: float
    p_success: float


@dataclass(frozen=True)
class AttackCurve:
    p: float
    keyspace_bits: float
    points: list[CurvePoint] = field(default_factory=list)

    @property
    def p_log2(self) -> float:
        return math.log2(self.p)

    def rows(self):
        for pt in self.points:
            yield (self.p_log2, self.keyspace_bits, pt.N, pt.n_th, pt.n_th_floor, pt.p_fail, pt.p_success)


CURVE_COLUMNS = ("p_log2", "keyspace_bits", "N", "n_th", "n_th_floor", "p_fail", "p_success")


def success_curve(p: float, keyspace_bits: float, n_grid, cm: ConfusionModel | None = None, true_index: int = 0) -> AttackCurve:
    """Eve's success probability after N periods for every N in ``n_grid``."""
    grid = [int(n) for n in n_grid]
    if not grid:
        raise ValueError("n_grid is empty")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("n_grid must be strictly increasing")
    cm = cm or symmetric_confusion(p, keyspace_bits)
    ratio = max_prior_ratio_log2(cm, true_index)
    points = []
    for N in grid:
        n_th = decision_threshold(N, cm, ratio)
        k = math.floor(n_th)
        fail, success = binomial_tails(N, cm.ps, k)
        points.append(CurvePoint(N, n_th, k, fail, success))
    return AttackCurve(cm.ps, cm.keyspace_bits, points)


def log_grid(lo: int, hi: int, count: int) -> list[int]:
    """``count`` distinct integers spread log-uniformly over [lo, hi]."""
    if count < 1 or lo < 1 or hi < lo:
        raise ValueError("need 1 <= lo <= hi and count >= 1")
    count = min(count, hi - lo + 1)
    samples = count
    while True:
        grid = np.unique(np.floor(np.geomspace(lo, hi, samples) + 1e-9).astype(np.int64))
        if grid.size >= count:
            break
        samples += 1
    if grid.size > count:
        # keep both ends, thin the dense low end
        keep = np.unique(np.round(np.geomspace(1, grid.size, count)).astype(int) - 1)
        grid = grid[keep]
    return grid.tolist()


def confusion_from_measurement(cond_prob: np.ndarray, true_index: int, priors=None) -> ConfusionModel:
    """Fold one row of a confusion matrix into the symmetric (ps, pf) model."""
    cond = np.asarray(cond_prob, dtype=float)
    d = cond.shape[0]
    if d < 2:
        raise ShapeError("need at least two hypotheses")
    ps = float(cond[true_index, true_index])
    pf = max((1.0 - ps) / (d - 1), 0.0)
    log2_pf = math.log2(pf) if pf > 0 else -math.inf
    pri = "uniform" if priors is None else np.asarray(priors, dtype=float)
    return ConfusionModel(ps, log2_pf, math.log2(d), pri)


def empirical_repetition(ens, true_index: int, N: int, seed: int, ms=None) -> tuple[np.ndarray, int]:
    """Simulate N periods of Eve's measurement and her final decision.

    Outcomes are drawn from the square-root-measurement row of the true
    hypothesis. The decision maximises n_h + log(prior_h) / log(ps / pf) using
    the folded symmetric model, which is the Bayes rule for that model; with an
    uninformative measurement (ps <= pf) it is the plain maximum count. Ties go
    to the smallest index.
    """
    from .detection import srm

    if ens.dim > 2**10:
        raise RangeError("ensemble too large for the empirical attack")
    if not 1 <= N <= 10**6:
        raise RangeError("N must lie in [1, 10^6]")
    ms = ms or srm(ens)
    row = np.clip(ms.cond_prob[true_index], 0.0, None)
    rng = np.random.default_rng(seed)
    counts = rng.multinomial(N, row / row.sum())
    return counts, bayes_decision(counts, ms.cond_prob, ens.priors, true_index)


def bayes_decision(counts: np.ndarray, cond_prob: np.ndarray, priors: np.ndarray, true_index: int = 0) -> int:
    cm = confusion_from_measurement(cond_prob, true_index)
    score = np.asarray(counts, dtype=float)
    if cm.ps > cm.pf > 0:
        score = score + np.log(priors) / math.log(cm.ps / cm.pf)
    return int(np.argmax(score))


def fresh_key_posterior(prior, channel) -> np.ndarray:
    """Mix the channel rows Pr(new key | s, dx) with the prior over (s, dx)."""
    prior = np.asarray(prior, dtype=float)
    channel = np.asarray(channel, dtype=float)
    if prior.ndim != 1 or channel.ndim != 2 or channel.shape[0] != prior.size:
        raise ShapeError(f"prior {prior.shape} does not match channel {channel.shape}")
    if abs(prior.sum() - 1) > 1e-12 or np.any(np.abs(channel.sum(axis=1) - 1) > 1e-12):
        raise RangeError("prior and channel rows must each sum to 1")
    return prior @ channel
