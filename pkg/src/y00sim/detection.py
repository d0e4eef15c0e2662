"""Collective-measurement analysis of Eve's stored coherent-state sequences.

Hypotheses are the candidate keystream pairs; each one fixes a sequence of
tapped coherent amplitudes once the plaintext is known. Everything here works
in Gram-matrix coordinates, so the cost depends on the number of hypotheses
and not on the Hilbert-space dimension of the sequences.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import product

import numpy as np

from .errors import DegenerateMeasurement, LengthError, NumericalError, RangeError, ShapeError, TooLarge
from .keystream import chop, lfsr_bits
from .modem import Y00Config, encode_level, level_to_amplitude

HARD_MAX_KEY_BITS = 16
DEFAULT_MAX_KEY_BITS = 10
PSD_TOL = 1e-8  # below -max(PSD_TOL, 1e-10 * dim) the Gram matrix is rejected


def coherent_overlap(a: complex, b: complex) -> complex:
    """<a|b> for coherent states."""
    return complex(np.exp(-(abs(a) ** 2 + abs(b) ** 2) / 2 + np.conj(a) * b))


def log_sequence_overlap(seq_a, seq_b) -> tuple[float, float]:
    """(log|<A|B>|, arg<A|B>) for product coherent states, phase unwrapped."""
    a = np.asarray(seq_a, dtype=complex)
    b = np.asarray(seq_b, dtype=complex)
    if a.shape != b.shape:
        raise LengthError(f"sequence lengths differ: {a.shape} vs {b.shape}")
    log_mag = -0.5 * float(np.sum(np.abs(a - b) ** 2))
    phase = float(np.sum(np.imag(np.conj(a) * b)))
    return log_mag, phase


def sequence_overlap(seq_a, seq_b) -> complex:
    log_mag, phase = log_sequence_overlap(seq_a, seq_b)
    return math.exp(log_mag) * complex(math.cos(phase), math.sin(phase))


def gram_from_amplitudes(amps: np.ndarray) -> np.ndarray:
    """Pairwise sequence overlaps of the rows of ``amps`` (hypotheses x slots)."""
    amps = np.asarray(amps, dtype=complex)
    norms = np.sum(np.abs(amps) ** 2, axis=1)
    cross = amps.conj() @ amps.T
    log_mag = np.minimum(cross.real - 0.5 * (norms[:, None] + norms[None, :]), 0.0)
    gram = np.exp(log_mag) * np.exp(1j * cross.imag)
    np.fill_diagonal(gram, 1.0)
    return gram


@dataclass(frozen=True)
class HypothesisEnsemble:
    hypotheses: list
    priors: np.ndarray
    gram: np.ndarray = field(repr=False)
    amplitude_seqs: np.ndarray | None = field(default=None, repr=False)
    duplicates: list = field(default_factory=list)

    def __post_init__(self):
        p = np.asarray(self.priors, dtype=float)
        g = np.asarray(self.gram, dtype=complex)
        d = len(self.hypotheses)
        if p.shape != (d,) or g.shape != (d, d):
            raise ShapeError(f"{d} hypotheses but priors {p.shape}, gram {g.shape}")
        if np.any(p <= 0) or abs(p.sum() - 1) > 1e-12:
            raise RangeError("priors must be positive and sum to 1")
        if not np.allclose(g, g.conj().T, atol=1e-12) or not np.allclose(np.diag(g), 1, atol=1e-12):
            raise NumericalError("gram must be Hermitian with unit diagonal")
        object.__setattr__(self, "priors", p)
        object.__setattr__(self, "gram", g)

    @property
    def dim(self) -> int:
        return len(self.hypotheses)

    @classmethod
    def from_gram(cls, gram, priors=None, hypotheses=None) -> "HypothesisEnsemble":
        gram = np.asarray(gram, dtype=complex)
        d = gram.shape[0]
        priors = np.full(d, 1.0 / d) if priors is None else np.asarray(priors, dtype=float)
        return cls(list(hypotheses or range(d)), priors, gram, None, _duplicate_groups(gram))

    @classmethod
    def from_amplitudes(cls, amps, priors=None, hypotheses=None) -> "HypothesisEnsemble":
        amps = np.atleast_2d(np.asarray(amps, dtype=complex))
        d = amps.shape[0]
        priors = np.full(d, 1.0 / d) if priors is None else np.asarray(priors, dtype=float)
        return cls(
            list(hypotheses or range(d)), priors, gram_from_amplitudes(amps), amps,
            _exact_duplicates(amps),
        )


def _exact_duplicates(amps: np.ndarray) -> list[tuple[int, ...]]:
    groups: dict[bytes, list[int]] = {}
    for i, row in enumerate(amps):
        groups.setdefault(row.tobytes(), []).append(i)
    return [tuple(g) for g in groups.values() if len(g) > 1]


def _duplicate_groups(gram: np.ndarray, tol: float = 1e-12) -> list[tuple[int, ...]]:
    same = np.abs(gram - 1) <= tol
    seen, out = set(), []
    for i in range(gram.shape[0]):
        if i in seen:
            continue
        g = tuple(int(j) for j in np.flatnonzero(same[i]))
        seen.update(g)
        if len(g) > 1:
            out.append(g)
    return out


def _all_keys(width: int) -> list[str]:
    return ["".join(bits) for bits in product("01", repeat=width)]


def build_ensemble(
    cfg: Y00Config,
    known_plaintext,
    priors=None,
    max_bits: int = DEFAULT_MAX_KEY_BITS,
) -> HypothesisEnsemble:
    """Enumerate every (k, dk) register state and Eve's amplitude sequence for it.

    The all-zero register states are kept as hypotheses (they produce the
    all-zero keystream) so the ensemble has exactly 2^(|K|+|dK|) members.
    """
    bits = cfg.spec_s.width + cfg.spec_dx.width
    if bits > min(max_bits, HARD_MAX_KEY_BITS):
        raise TooLarge(f"|K|+|dK| = {bits} exceeds the cap of {min(max_bits, HARD_MAX_KEY_BITS)} bits")
    x = np.asarray([int(c) for c in known_plaintext] if isinstance(known_plaintext, str) else known_plaintext)
    T = x.size
    if T == 0:
        raise LengthError("known plaintext is empty")
    L = cfg.mapping.bits_per_slot
    ks = _all_keys(cfg.spec_s.width)
    dks = _all_keys(cfg.spec_dx.width)
    basis = np.array([chop(lfsr_bits(cfg.spec_s, k, T * L, allow_zero=True), cfg.mapping) for k in ks])
    dx = np.array([lfsr_bits(cfg.spec_dx, dk, T, allow_zero=True) for dk in dks])
    levels = encode_level(basis[:, None, :], x[None, None, :], dx[None, :, :], cfg.M)
    amps = level_to_amplitude(levels.reshape(-1, T), cfg, tapped=True)
    hyps = [(k, dk) for k in ks for dk in dks]
    return HypothesisEnsemble.from_amplitudes(amps, priors, hyps)


@dataclass(frozen=True)
class MeasurementSet:
    """Rank-one measurement in the span of the hypothesis states.

    ``cond_prob[i, j]`` is Pr(decide j | true i); ``measurement_gram[i, j]``
    is <psi_i|mu_j>. ``state_coords``/``meas_coords`` hold the states and
    measurement vectors in an orthonormal basis of the span (columns).
    """

    cond_prob: np.ndarray = field(repr=False)
    measurement_gram: np.ndarray = field(repr=False)
    state_coords: np.ndarray = field(repr=False)
    meas_coords: np.ndarray = field(repr=False)
    rank: int


def srm(ens: HypothesisEnsemble) -> MeasurementSet:
    """Square-root measurement for the prior-weighted state set."""
    p = ens.priors
    sq = np.sqrt(p)
    weighted = sq[:, None] * ens.gram * sq[None, :]
    weighted = 0.5 * (weighted + weighted.conj().T)
    lam, vec = np.linalg.eigh(weighted)
    if lam[0] < -max(PSD_TOL, 1e-10 * ens.dim):
        raise NumericalError(f"weighted Gram matrix is not PSD (min eigenvalue {lam[0]:.3e})")
    # eigenvalues at roundoff level would leak ~sqrt(eps) into the square root
    lam = np.where(lam > ens.dim * np.finfo(float).eps * lam[-1], lam, 0.0)
    root = (vec * np.sqrt(lam)) @ vec.conj().T
    cond = np.abs(root) ** 2 / p[:, None]
    meas_gram = root / sq[:, None]

    keep = lam > 0
    u = vec[:, keep]
    state_coords = (np.sqrt(lam[keep])[:, None] * u.conj().T) / sq[None, :]
    meas_coords = u.conj().T
    return MeasurementSet(cond, meas_gram, state_coords, meas_coords, int(keep.sum()))


def success_probability(ens: HypothesisEnsemble, ms: MeasurementSet) -> float:
    if ms.cond_prob.shape != (ens.dim, ens.dim):
        raise ShapeError("measurement and ensemble dimensions differ")
    return float(np.dot(ens.priors, np.diag(ms.cond_prob)))


def overlap_bound(ms: MeasurementSet) -> float:
    """sum |<psi_i|mu_i>|^4 / sum |<psi_i|mu_i>|^2."""
    c = np.abs(np.diag(ms.measurement_gram)) ** 2
    den = c.sum()
    if den <= 0:
        raise DegenerateMeasurement("no state has weight on its own measurement vector")
    return float(np.sum(c**2) / den)


def induced_priors(ms: MeasurementSet) -> np.ndarray:
    """Priors for which the overlap bound is attained with this measurement."""
    c = np.abs(np.diag(ms.measurement_gram)) ** 2
    return c / c.sum()


def induced_prior_mismatch(ens: HypothesisEnsemble, ms: MeasurementSet) -> float:
    """Total-variation distance between the ensemble priors and induced_priors."""
    return 0.5 * float(np.sum(np.abs(induced_priors(ms) - ens.priors)))


def optimality_residuals(
    ens: HypothesisEnsemble, ms: MeasurementSet, weighting: str = "induced"
) -> tuple[float, float]:
    """Violation of the minimum-error conditions by a rank-one measurement.

    pairwise: max_ij |w_j <mu_i|psi_j><psi_j|mu_j> - w_i <mu_i|psi_i><psi_i|mu_j>|,
    i.e. E_i (W_j - W_i) E_j = 0 written for E_i = |mu_i><mu_i|. The weights are
    the priors induced by the measurement (``"induced"``) or the ensemble
    priors (``"priors"``).

    psd: max(0, -min_i lambda_min(W_i - Gamma)) on the span of the states, with
    W_i = -p_i |psi_i><psi_i| and Gamma the Hermitian part of sum_j E_j W_j.
    """
    if weighting == "induced":
        w = induced_priors(ms)
    elif weighting == "priors":
        w = ens.priors
    else:
        raise ValueError(f"unknown weighting {weighting!r}")
    m = ms.measurement_gram
    diag = np.diag(m)
    lhs = w[None, :] * m.T.conj() * diag[None, :]
    rhs = w[:, None] * diag.conj()[:, None] * m
    pairwise = float(np.max(np.abs(lhs - rhs))) if ens.dim > 1 else 0.0

    p = ens.priors
    psi, mu = ms.state_coords, ms.meas_coords
    gamma = -(mu * (p * diag.conj())[None, :]) @ psi.conj().T
    gamma = 0.5 * (gamma + gamma.conj().T)
    worst = math.inf
    for i in range(ens.dim):
        v = psi[:, i]
        op = -p[i] * np.outer(v, v.conj()) - gamma
        worst = min(worst, float(np.linalg.eigvalsh(op)[0]))
    return pairwise, max(0.0, -worst)


def helstrom_binary(q0: float, q1: float, overlap_sq: float) -> float:
    """Minimum error probability for two pure states with priors q0, q1."""
    if q0 < 0 or q1 < 0 or abs(q0 + q1 - 1) > 1e-12:
        raise RangeError("priors must be nonnegative and sum to 1")
    if not 0 <= overlap_sq <= 1:
        raise RangeError("overlap_sq must lie in [0, 1]")
    return 0.5 * (1 - math.sqrt(max(0.0, 1 - 4 * q0 * q1 * overlap_sq)))


def detection_report(ens: HypothesisEnsemble, ms: MeasurementSet | None = None, residuals: bool = True) -> dict:
    ms = ms or srm(ens)
    succ = success_probability(ens, ms)
    off = np.abs(ens.gram[~np.eye(ens.dim, dtype=bool)]) if ens.dim > 1 else np.array([0.0])
    report = {
        "dimension": ens.dim,
        "rank": ms.rank,
        "success_probability": succ,
        "failure_probability": 1 - succ,
        "overlap_bound": overlap_bound(ms),
        "guessing_floor": float(np.max(ens.priors)),
        "floor_margin": succ - float(np.max(ens.priors)),
        "min_overlap": float(off.min()),
        "max_overlap": float(off.max()),
        "duplicate_groups": len(ens.duplicates),
        "induced_prior_mismatch": induced_prior_mismatch(ens, ms),
    }
    if residuals:
        pw, psd = optimality_residuals(ens, ms)
        pw_p, _ = optimality_residuals(ens, ms, weighting="priors")
        report.update(pairwise_residual=pw, pairwise_residual_priors=pw_p, psd_deficit=psd)
    return report
