"""Simulator and security evaluator for the Y00 (alpha-eta) quantum stream cipher."""

from .errors import (
    AmbiguousKey,
    ConfigError,
    DegenerateKey,
    DegenerateMeasurement,
    DegenerateModel,
    InconsistentObservation,
    LengthError,
    NumericalError,
    RangeError,
    ShapeError,
    TooLarge,
    UnreachableCiphertext,
    Y00Error,
)

__version__ = "0.1.0"
