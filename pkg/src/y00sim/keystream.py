"""LFSR key expansion, keyed basis mapping and slot-period bookkeeping.

Bit-strings are plain ``str`` objects over ``"01"``; long streams are handled
internally as ``uint8`` numpy arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import DegenerateKey, LengthError, RangeError

# Primitive feedback polynomials for the Fibonacci register below (taps are
# 1-based register cells, the output cell is ``width``).
PRIMITIVE_TAPS = {
    2: (2, 1),
    3: (3, 2),
    4: (4, 3),
    5: (5, 3),
    6: (6, 5),
    7: (7, 6),
    8: (8, 6, 5, 4),
    9: (9, 5),
    10: (10, 7),
    11: (11, 9),
    12: (12, 11, 10, 4),
    13: (13, 12, 11, 8),
    14: (14, 13, 12, 2),
    15: (15, 14),
    16: (16, 15, 13, 4),
}

# State-cycle search is exhaustive below this width; wider registers fall
# back to the primitive-polynomial period 2^w - 1.
_CYCLE_SEARCH_MAX_WIDTH = 24


@dataclass(frozen=True)
class LfsrSpec:
    width: int
    taps: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "taps", tuple(sorted(set(int(t) for t in self.taps), reverse=True)))
        if not 1 <= self.width <= 64:
            raise RangeError(f"LFSR width must be in [1, 64], got {self.width}")
        if not self.taps or any(not 1 <= t <= self.width for t in self.taps):
            raise RangeError(f"taps {self.taps} must be nonempty and within 1..{self.width}")

    @classmethod
    def primitive(cls, width: int) -> "LfsrSpec":
        try:
            return cls(width, PRIMITIVE_TAPS[width])
        except KeyError:
            raise RangeError(f"no built-in primitive taps for width {width}") from None

    @property
    def tap_mask(self) -> int:
        return sum(1 << (self.width - t) for t in self.taps)

    @property
    def nominal_period(self) -> int:
        return 2**self.width - 1

    def to_dict(self) -> dict:
        return {"width": self.width, "taps": list(self.taps)}


@dataclass(frozen=True)
class KeyPair:
    k: str
    dk: str

    def __post_init__(self):
        for name in ("k", "dk"):
            bits = getattr(self, name)
            _check_bits(bits)
            if "1" not in bits:
                raise DegenerateKey(f"{name} is the all-zero LFSR state")


@dataclass(frozen=True)
class MappingTable:
    M: int
    perm: tuple[int, ...]
    seed: int | str = "identity"

    def __post_init__(self):
        if self.M < 2 or self.M & (self.M - 1):
            raise RangeError(f"M must be a power of two >= 2, got {self.M}")
        object.__setattr__(self, "perm", tuple(int(v) for v in self.perm))
        if sorted(self.perm) != list(range(self.M)):
            raise RangeError("perm is not a bijection on {0, ..., M-1}")

    @classmethod
    def identity(cls, M: int) -> "MappingTable":
        return cls(M, tuple(range(M)), "identity")

    @classmethod
    def seeded(cls, M: int, seed: int) -> "MappingTable":
        perm = np.random.default_rng(seed).permutation(M)
        return cls(M, tuple(perm.tolist()), int(seed))

    @property
    def bits_per_slot(self) -> int:
        return self.M.bit_length() - 1

    def to_dict(self) -> dict:
        return {"M": self.M, "seed": self.seed, "perm": list(self.perm)}


@dataclass(frozen=True)
class KeystreamPair:
    basis_seq: np.ndarray = field(repr=False)
    dx_seq: np.ndarray = field(repr=False)
    slot_period_s: int
    slot_period_dx: int
    t_lcm: int


def _check_bits(bits: str) -> None:
    if not bits or set(bits) - {"0", "1"}:
        raise ValueError(f"not a bit-string: {bits!r}")


def to_bits(arr) -> str:
    return "".join("1" if b else "0" for b in arr)


def from_bits(bits: str) -> np.ndarray:
    if set(bits) - {"0", "1"}:
        raise ValueError(f"not a bit-string: {bits!r}")
    return np.frombuffer(bits.encode("ascii"), dtype=np.uint8) - ord("0")


def lfsr_bits(spec: LfsrSpec, key: str, n_bits: int, allow_zero: bool = False) -> np.ndarray:
    """Fibonacci LFSR output as a uint8 array.

    The key loads register cells 1..width left to right; each step emits cell
    ``width`` and shifts the XOR of the tap cells into cell 1. Once the state
    returns to the key the output is tiled instead of stepped.
    """
    _check_bits(key)
    if len(key) != spec.width:
        raise LengthError(f"key has {len(key)} bits, register has {spec.width}")
    state0 = int(key, 2)
    if state0 == 0:
        if not allow_zero:
            raise DegenerateKey("all-zero key is a fixed point of the LFSR")
        return np.zeros(n_bits, dtype=np.uint8)
    if n_bits <= 0:
        return np.zeros(0, dtype=np.uint8)
    mask, top = spec.tap_mask, spec.width - 1
    out = np.empty(n_bits, dtype=np.uint8)
    state = state0
    for i in range(n_bits):
        out[i] = state & 1
        fb = (state & mask).bit_count() & 1
        state = (state >> 1) | (fb << top)
        if state == state0:
            return np.resize(out[: i + 1], n_bits)
    return out


def expand(spec: LfsrSpec, key: str, n_bits: int) -> str:
    """Expand ``key`` into ``n_bits`` keystream bits (deterministic)."""
    return to_bits(lfsr_bits(spec, key, n_bits))


@lru_cache(maxsize=None)
def lfsr_period(spec: LfsrSpec, key: str | None = None) -> int:
    """Bit period of the output sequence started from ``key``.

    Found by stepping the state until it cycles (widths up to 24); wider
    registers are assumed primitive.
    """
    if spec.width > _CYCLE_SEARCH_MAX_WIDTH:
        return spec.nominal_period
    state0 = int(key, 2) if key is not None else 1
    if state0 == 0:
        return 1
    mask, top = spec.tap_mask, spec.width - 1
    seen = {}
    state, i = state0, 0
    while state not in seen:
        seen[state] = i
        fb = (state & mask).bit_count() & 1
        state = (state >> 1) | (fb << top)
        i += 1
    return i - seen[state]


def chop(sbits, mapping: MappingTable) -> np.ndarray:
    """Cut ``sbits`` into log2(M)-bit chunks and send each through ``perm``."""
    arr = from_bits(sbits) if isinstance(sbits, str) else np.asarray(sbits, dtype=np.uint8)
    L = mapping.bits_per_slot
    if arr.size % L:
        raise LengthError(f"{arr.size} bits is not a multiple of log2(M) = {L}")
    chunks = arr.reshape(-1, L).astype(np.int64)
    values = chunks @ (1 << np.arange(L - 1, -1, -1, dtype=np.int64))
    return np.asarray(mapping.perm, dtype=np.int64)[values]


def minimal_period(seq: np.ndarray, upper: int) -> int | None:
    """Smallest d dividing ``upper`` with seq[t] == seq[t + d] over the array."""
    seq = np.asarray(seq)
    for d in sorted(_divisors(upper)):
        if d >= seq.size:
            break
        if np.array_equal(seq[d:], seq[:-d]):
            return d
    return None


def _divisors(n: int) -> set[int]:
    out = set()
    for i in range(1, math.isqrt(n) + 1):
        if n % i == 0:
            out.update((i, n // i))
    return out


def keystreams(
    keys: KeyPair,
    spec_s: LfsrSpec,
    spec_dx: LfsrSpec,
    mapping: MappingTable,
    n_slots: int,
) -> KeystreamPair:
    if n_slots < 1:
        raise RangeError("n_slots must be >= 1")
    L = mapping.bits_per_slot
    basis = chop(lfsr_bits(spec_s, keys.k, n_slots * L), mapping)
    dx = lfsr_bits(spec_dx, keys.dk, n_slots)

    bit_period_s = lfsr_period(spec_s, keys.k)
    p_s = math.lcm(bit_period_s, L) // L
    p_dx = lfsr_period(spec_dx, keys.dk)
    if n_slots >= 2 * math.lcm(p_s, p_dx):
        p_s = minimal_period(basis, p_s) or p_s
        p_dx = minimal_period(dx, p_dx) or p_dx
    return KeystreamPair(basis, dx, p_s, p_dx, math.lcm(p_s, p_dx))
