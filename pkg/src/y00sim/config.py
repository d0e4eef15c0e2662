"""JSON run configuration.

Every section is optional; missing fields take the defaults below. Unknown
keys are rejected so typos surface as config errors.
"""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass
from pathlib import Path

from .errors import ConfigError, Y00Error
from .keystream import LfsrSpec, MappingTable
from .modem import Y00Config

DEFAULTS: dict = {
    "seed": 20200101,
    "y00": {"M": 16, "alpha0": 3.0, "eta": 1.0, "het_sigma": 1.0},
    "lfsr_s": {"width": 16, "taps": [16, 15, 13, 4]},
    "lfsr_dx": {"width": 15, "taps": [15, 14]},
    "mapping": {"seed": "identity", "perm": None},
    "keys": {"k": None, "dk": None},
    "transmit": {"n_slots": 100000, "plaintext": "random", "kappa": 1.0},
    "detect": {
        "M": 4,
        "alpha0": 1.0,
        "eta": 1.0,
        "lfsr_s": {"width": 3, "taps": [3, 2]},
        "lfsr_dx": {"width": 2, "taps": [2, 1]},
        "mapping": {"seed": "identity", "perm": None},
        "plaintext_slots": 8,
        "max_keyspace_bits": 10,
    },
    "secrecy": {"otp_bits": 3, "lfsr_width": 8},
    "attack": {
        "p_exponents": [8, 16, 32, 64],
        "keyspace_bits": 256,
        "n_grid": {"min": 1, "max": 1000000, "count": 60},
    },
    "output": {"dir": "out", "format": "csv"},
}


def _merge(base: dict, override: dict, path: str = "") -> dict:
    out = copy.deepcopy(base)
    for key, val in override.items():
        where = f"{path}{key}"
        if key not in base:
            raise ConfigError(f"unknown config key '{where}'")
        if isinstance(base[key], dict) and base[key] and not isinstance(val, dict):
            raise ConfigError(f"'{where}' must be an object")
        if isinstance(base[key], dict) and base[key]:
            out[key] = _merge(base[key], val, where + ".")
        else:
            out[key] = val
    return out


def load_config(path: str | Path | None = None, overrides: dict | None = None) -> dict:
    raw: dict = {}
    if path is not None:
        try:
            raw = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(raw, dict):
            raise ConfigError("config root must be a JSON object")
    cfg = _merge(DEFAULTS, raw)
    if overrides:
        cfg = _merge(cfg, overrides)
    validate(cfg)
    return cfg


def lfsr_from(section: dict) -> LfsrSpec:
    # taps: null selects the tabulated primitive polynomial for the width
    if section.get("taps") is None:
        return LfsrSpec.primitive(int(section["width"]))
    return LfsrSpec(int(section["width"]), tuple(section["taps"]))


def mapping_from(section: dict, M: int) -> MappingTable:
    if section.get("perm") is not None:
        return MappingTable(M, tuple(section["perm"]), section.get("seed", "custom"))
    seed = section.get("seed", "identity")
    if seed == "identity":
        return MappingTable.identity(M)
    return MappingTable.seeded(M, int(seed))


def y00_from(cfg: dict) -> Y00Config:
    y = cfg["y00"]
    M = int(y["M"])
    return Y00Config(
        M=M, alpha0=float(y["alpha0"]), eta=float(y["eta"]), het_sigma=float(y["het_sigma"]),
        spec_s=lfsr_from(cfg["lfsr_s"]), spec_dx=lfsr_from(cfg["lfsr_dx"]),
        mapping=mapping_from(cfg["mapping"], M),
    )


def detect_y00_from(cfg: dict) -> Y00Config:
    d = cfg["detect"]
    M = int(d["M"])
    return Y00Config(
        M=M, alpha0=float(d["alpha0"]), eta=float(d["eta"]),
        spec_s=lfsr_from(d["lfsr_s"]), spec_dx=lfsr_from(d["lfsr_dx"]),
        mapping=mapping_from(d["mapping"], M),
    )


@dataclass(frozen=True)
class GridSpec:
    lo: int
    hi: int
    count: int


def grid_from(cfg: dict) -> GridSpec:
    g = cfg["attack"]["n_grid"]
    return GridSpec(int(g["min"]), int(float(g["max"])), int(g["count"]))


def validate(cfg: dict) -> None:
    try:
        y00_from(cfg)
        detect_y00_from(cfg)
        g = grid_from(cfg)
        if not (1 <= g.lo <= g.hi and g.count >= 1):
            raise ConfigError("attack.n_grid needs 1 <= min <= max and count >= 1")
        exps = cfg["attack"]["p_exponents"]
        if not exps or any(float(b) <= 0 for b in exps):
            raise ConfigError("attack.p_exponents must be positive numbers")
        if not 1 <= float(cfg["attack"]["keyspace_bits"]) <= 1024:
            raise ConfigError("attack.keyspace_bits must lie in [1, 1024]")
        if cfg["output"]["format"] not in ("csv", "json"):
            raise ConfigError("output.format must be csv or json")
        if int(cfg["transmit"]["n_slots"]) < 1 or int(cfg["detect"]["plaintext_slots"]) < 1:
            raise ConfigError("slot counts must be >= 1")
        if cfg["transmit"]["plaintext"] not in ("random", "zeros", "ones"):
            raise ConfigError("transmit.plaintext must be random, zeros or ones")
        int(cfg["seed"])
    except ConfigError:
        raise
    except (Y00Error, KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid config: {exc}") from exc
