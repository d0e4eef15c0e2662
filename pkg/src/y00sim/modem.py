"""Physical layer: level encoding, PSK constellation, beam-splitter tap,
heterodyne noise, and the legitimate/eavesdropper decisions."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import LengthError, RangeError
from .keystream import KeyPair, LfsrSpec, MappingTable, from_bits, keystreams


@dataclass(frozen=True)
class Y00Config:
    M: int
    alpha0: float
    eta: float
    spec_s: LfsrSpec
    spec_dx: LfsrSpec
    mapping: MappingTable
    het_sigma: float = 1.0

    def __post_init__(self):
        if self.M < 2 or self.M & (self.M - 1):
            raise RangeError(f"M must be a power of two >= 2, got {self.M}")
        if self.mapping.M != self.M:
            raise RangeError(f"mapping is for M={self.mapping.M}, config has M={self.M}")
        if self.alpha0 < 0:
            raise RangeError("alpha0 must be >= 0")
        if not 0 < self.eta <= 1:
            raise RangeError("eta must lie in (0, 1]")
        if self.het_sigma <= 0:
            raise RangeError("het_sigma must be > 0")


@dataclass(frozen=True)
class SignalFrame:
    basis: np.ndarray = field(repr=False)
    dx: np.ndarray = field(repr=False)
    x: np.ndarray = field(repr=False)
    levels: np.ndarray = field(repr=False)
    tx_amplitudes: np.ndarray = field(repr=False)
    eve_amplitudes: np.ndarray = field(repr=False)

    def __len__(self):
        return len(self.levels)


def encode_level(basis, x, dx, M: int):
    """m = basis + M * ((basis + x + dx) mod 2). Works elementwise on arrays."""
    b = np.asarray(basis)
    if np.any((b < 0) | (b >= M)):
        raise RangeError(f"basis index outside [0, {M})")
    m = b + M * ((b + np.asarray(x) + np.asarray(dx)) % 2)
    return int(m) if m.ndim == 0 else m


def level_to_amplitude(m, cfg: Y00Config, tapped: bool = False):
    gain = cfg.eta if tapped else 1.0
    return gain * cfg.alpha0 * np.exp(1j * np.pi * np.asarray(m) / cfg.M)


def transmit(keys: KeyPair, plaintext, cfg: Y00Config) -> SignalFrame:
    """Encode ``plaintext`` (one bit per slot) and split off Eve's branch."""
    x = from_bits(plaintext) if isinstance(plaintext, str) else np.asarray(plaintext, dtype=np.uint8)
    if x.size == 0:
        raise LengthError("empty plaintext")
    ks = keystreams(keys, cfg.spec_s, cfg.spec_dx, cfg.mapping, x.size)
    levels = encode_level(ks.basis_seq, x, ks.dx_seq, cfg.M)
    return SignalFrame(
        basis=ks.basis_seq,
        dx=ks.dx_seq,
        x=x,
        levels=levels,
        tx_amplitudes=level_to_amplitude(levels, cfg),
        eve_amplitudes=level_to_amplitude(levels, cfg, tapped=True),
    )


# Counter-based noise: each (seed, index) pair hashes to its own uniforms, so
# any slot can be regenerated independently of the others.
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)


def _splitmix64(z: np.ndarray) -> np.ndarray:
    z = z + _GOLDEN
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


def _uniform53(seed: int, counter: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore"):
        key = _splitmix64(np.array([seed & 0xFFFFFFFFFFFFFFFF], dtype=np.uint64))[0]
        h = _splitmix64(counter ^ key)
        h = _splitmix64(h + key)
    return (h >> np.uint64(11)).astype(np.float64) * (1.0 / 2**53)


def gaussian_pairs(seed: int, index) -> tuple[np.ndarray, np.ndarray]:
    """Two independent standard normals per index (Box-Muller)."""
    idx = np.asarray(index, dtype=np.uint64)
    with np.errstate(over="ignore"):
        base = idx * np.uint64(2)
        u1 = 1.0 - _uniform53(seed, base)  # (0, 1]
        u2 = _uniform53(seed, base + np.uint64(1))
    r = np.sqrt(-2.0 * np.log(u1))
    return r * np.cos(2 * np.pi * u2), r * np.sin(2 * np.pi * u2)


def heterodyne_sample(amplitude, sigma: float, seed: int, index):
    """amplitude + circular complex Gaussian noise, sigma per quadrature."""
    if sigma <= 0:
        raise RangeError("sigma must be > 0")
    g1, g2 = gaussian_pairs(seed, index)
    out = np.asarray(amplitude) + sigma * (g1 + 1j * g2)
    return complex(out) if out.ndim == 0 else out


def bob_decode(outcome, basis, dx, cfg: Y00Config):
    """Threshold on the axis of the antipodal pair {basis, basis + M}.

    A projection of exactly zero counts as coset 0.
    """
    b = np.asarray(basis)
    if np.any((b < 0) | (b >= cfg.M)):
        raise RangeError(f"basis index outside [0, {cfg.M})")
    proj = np.real(np.asarray(outcome) * np.exp(-1j * np.pi * b / cfg.M))
    coset = (proj < 0).astype(np.int64)
    bit = (coset + b + np.asarray(dx)) % 2
    return int(bit) if bit.ndim == 0 else bit


def eve_level_id(outcome, cfg: Y00Config):
    """Nearest tapped constellation point; ties go to the smallest level."""
    pts = level_to_amplitude(np.arange(2 * cfg.M), cfg, tapped=True)
    out = np.asarray(outcome)
    d = np.abs(out[..., None] - pts)
    m = np.argmin(d, axis=-1)
    return int(m) if m.ndim == 0 else m


def masking_size(cfg: Y00Config, kappa: float = 1.0) -> int:
    """Levels within kappa * sigma of a reference point, the point included."""
    if kappa <= 0:
        raise RangeError("kappa must be > 0")
    amp = cfg.eta * cfg.alpha0
    m = np.arange(2 * cfg.M)
    chord = 2 * amp * np.abs(np.sin(np.pi * m / (2 * cfg.M)))
    radius = kappa * cfg.het_sigma
    return int(np.count_nonzero(chord <= radius * (1 + 1e-12)))


def binomial_stderr(p: float, n: int) -> float:
    return math.sqrt(max(p * (1 - p), 0.0) / n)


# Eve's noise lives in a disjoint counter range from Bob's.
_EVE_COUNTER_OFFSET = 1 << 62


@dataclass(frozen=True)
class LinkRun:
    frame: SignalFrame
    bob_outcomes: np.ndarray = field(repr=False)
    eve_outcomes: np.ndarray = field(repr=False)
    bob_bits: np.ndarray = field(repr=False)
    eve_levels: np.ndarray = field(repr=False)

    @property
    def bob_ber(self) -> float:
        return float(np.mean(self.bob_bits != self.frame.x))

    @property
    def eve_level_error(self) -> float:
        return float(np.mean(self.eve_levels != self.frame.levels))


def simulate_link(keys: KeyPair, plaintext, cfg: Y00Config, seed: int) -> LinkRun:
    frame = transmit(keys, plaintext, cfg)
    t = np.arange(len(frame), dtype=np.uint64)
    bob = heterodyne_sample(frame.tx_amplitudes, cfg.het_sigma, seed, t)
    eve = heterodyne_sample(frame.eve_amplitudes, cfg.het_sigma, seed, t + np.uint64(_EVE_COUNTER_OFFSET))
    return LinkRun(
        frame=frame,
        bob_outcomes=bob,
        eve_outcomes=eve,
        bob_bits=bob_decode(bob, frame.basis, frame.dx, cfg),
        eve_levels=eve_level_id(eve, cfg),
    )


FRAME_COLUMNS = ("t", "basis", "dx", "x", "m", "re_tx", "im_tx", "re_eve_outcome", "im_eve_outcome")


def frame_rows(run: LinkRun):
    f = run.frame
    for t in range(len(f)):
        yield (
            t, int(f.basis[t]), int(f.dx[t]), int(f.x[t]), int(f.levels[t]),
            repr(float(f.tx_amplitudes[t].real)), repr(float(f.tx_amplitudes[t].imag)),
            repr(float(run.eve_outcomes[t].real)), repr(float(run.eve_outcomes[t].imag)),
        )
