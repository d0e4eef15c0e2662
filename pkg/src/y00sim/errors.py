"""Exception types shared across the simulator."""


class Y00Error(Exception):
    """Base class for all simulator errors."""


class LengthError(Y00Error, ValueError):
    pass


class RangeError(Y00Error, ValueError):
    pass


class ShapeError(Y00Error, ValueError):
    pass


class TooLarge(Y00Error):
    """Raised when an exhaustive enumeration would exceed its cap."""


class DegenerateKey(Y00Error, ValueError):
    pass


class UnreachableCiphertext(Y00Error, ValueError):
    pass


class InconsistentObservation(Y00Error):
    pass


class AmbiguousKey(Y00Error):
    """Several keys explain the observation; all of them are in ``keys``."""

    def __init__(self, keys):
        self.keys = list(keys)
        super().__init__(f"{len(self.keys)} keys are consistent with the observation")


class NumericalError(Y00Error, ArithmeticError):
    pass


class DegenerateMeasurement(Y00Error, ArithmeticError):
    pass


class DegenerateModel(Y00Error, ValueError):
    pass


class ConfigError(Y00Error, ValueError):
    pass
