"""Exhaustive toy-scale secrecy metrics and the stream-cipher known-plaintext
key recovery that quantum noise is meant to defeat.

Probabilities accept ``fractions.Fraction`` as well as floats; with Fraction
priors every result is exact.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import product
from typing import Callable, Mapping

from .errors import AmbiguousKey, InconsistentObservation, LengthError, TooLarge, UnreachableCiphertext
from .keystream import LfsrSpec, lfsr_bits, to_bits

MAX_PAIRS = 2**16


def otp_encrypt(x: str, k: str) -> str:
    if len(x) != len(k):
        raise LengthError(f"plaintext has {len(x)} bits, key has {len(k)}")
    return "".join("1" if a != b else "0" for a, b in zip(x, k))


@dataclass(frozen=True)
class ToyCipherSystem:
    plaintexts: Mapping[str, object]
    keys: Mapping[str, object]
    encrypt: Callable[[str, str], str]

    def __post_init__(self):
        for name, dist in (("plaintext", self.plaintexts), ("key", self.keys)):
            total = sum(dist.values())
            if abs(total - 1) > 1e-12:
                raise ValueError(f"{name} priors sum to {total}, not 1")
        if len({len(x) for x in self.plaintexts}) > 1:
            raise LengthError("plaintexts have unequal lengths")

    @classmethod
    def one_time_pad(cls, n_bits: int, plaintext_priors: Mapping[str, object] | None = None, one=None):
        """Uniform independent n-bit key.

        ``one`` fixes the number type (pass ``Fraction(1)`` for exact results);
        by default it follows the type of the plaintext priors.
        """
        words = ["".join(w) for w in product("01", repeat=n_bits)]
        if one is None:
            one = next(iter(plaintext_priors.values())) * 0 + 1 if plaintext_priors else 1
        px = plaintext_priors or {w: one / len(words) for w in words}
        return cls(dict(px), {w: one / len(words) for w in words}, otp_encrypt)

    def joint(self) -> dict[str, dict[str, object]]:
        """c -> {x: Pr(x, c)}, keeping only positive-probability pairs."""
        if len(self.plaintexts) * len(self.keys) > MAX_PAIRS:
            raise TooLarge(f"{len(self.plaintexts) * len(self.keys)} pairs exceed {MAX_PAIRS}")
        out: dict[str, dict[str, object]] = {}
        c_len = None
        for x, px in self.plaintexts.items():
            for k, pk in self.keys.items():
                c = self.encrypt(x, k)
                if c_len is None:
                    c_len = len(c)
                elif len(c) != c_len:
                    raise LengthError("ciphertexts have unequal lengths")
                w = px * pk
                if w:
                    row = out.setdefault(c, {})
                    row[x] = row.get(x, 0) + w
        return out


def posterior_distribution(sys: ToyCipherSystem, c: str) -> dict[str, object]:
    row = sys.joint().get(c)
    if not row:
        raise UnreachableCiphertext(f"ciphertext {c!r} has zero probability")
    pc = sum(row.values())
    return {x: row.get(x, 0) / pc for x in sys.plaintexts}


def guessing_secrecy(sys: ToyCipherSystem) -> tuple[object, object, object]:
    """(average, worst-case, prior max) guessing probabilities of the plaintext."""
    joint = sys.joint()
    average = sum(max(row.values()) for row in joint.values())
    worst = max(max(row.values()) / sum(row.values()) for row in joint.values())
    return average, worst, max(sys.plaintexts.values())


@lru_cache(maxsize=32)
def _keystream_table(spec: LfsrSpec, n_bits: int) -> dict[str, tuple[str, ...]]:
    table: dict[str, list[str]] = {}
    for bits in product("01", repeat=spec.width):
        key = "".join(bits)
        if "1" not in key:
            continue
        table.setdefault(to_bits(lfsr_bits(spec, key, n_bits)), []).append(key)
    return {s: tuple(ks) for s, ks in table.items()}


def stream_kpa_recover(spec: LfsrSpec, c: str, x: str) -> str:
    """Recover the LFSR key from a ciphertext/plaintext pair.

    The keystream is c XOR x; the key is looked up in the full k -> s table.
    Windows shorter than the register can match several keys, which is
    reported as AmbiguousKey rather than guessed.
    """
    s = otp_encrypt(c, x)
    if len(s) < spec.width:
        # short window: filter the table on the prefix
        full = _keystream_table(spec, spec.width)
        keys = [k for stream, ks in full.items() if stream.startswith(s) for k in ks]
    else:
        keys = list(_keystream_table(spec, len(s)).get(s, ()))
    if not keys:
        raise InconsistentObservation("no key reproduces the observed keystream")
    if len(keys) > 1:
        raise AmbiguousKey(sorted(keys))
    return keys[0]
