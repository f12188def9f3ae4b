"""Exception types shared across the package."""


class TwinWorldError(Exception):
    """Base class for all twinworld errors."""


class DegenerateStateError(TwinWorldError):
    """Raised when an operation needs a nonzero amplitude/mass and finds none.

    Typical causes: refreshing a distribution whose extracted amplitudes
    vanish everywhere, or a coincidence run that accepts zero sample pairs.
    """


class InvalidGateError(TwinWorldError):
    """Raised for malformed gates: non-unitary input, bad targets, wrong dims."""


class InvalidPotentialError(TwinWorldError):
    """Raised when a potential field contains non-finite values."""


class StepTooLargeError(TwinWorldError):
    """Raised when a time step would push stochastic-matrix entries below zero.

    Carries ``max_dt``, the largest admissible step for the given generator.
    """

    def __init__(self, dt: float, max_dt: float):
        self.dt = dt
        self.max_dt = max_dt
        super().__init__(
            f"time step {dt:g} exceeds the admissible maximum {max_dt:g}"
        )


class ConfigError(TwinWorldError):
    """Raised for invalid experiment configuration (bad keys, ranges, types)."""
