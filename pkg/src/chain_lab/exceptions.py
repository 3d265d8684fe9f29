class ChainLabError(Exception):
    """Base class for errors raised by chain_lab."""


class InvalidParameterError(ChainLabError, ValueError):
    pass


class DimensionError(ChainLabError, ValueError):
    pass


class EigensolverError(ChainLabError):
    pass


class SpectrumGapError(ChainLabError):
    """Eigenvalues too close to certify a simple spectrum."""


class StepSizeError(ChainLabError, ValueError):
    """Time step violates the RK4 stability guard."""

    def __init__(self, dt, dt_max):
        super().__init__(f"dt={dt!r} exceeds the stability guard; use dt <= {dt_max!r}")
        self.dt = dt
        self.dt_max = dt_max


class IntegrationError(ChainLabError):
    pass


class DegenerateFitError(ChainLabError):
    pass


class VerificationError(ChainLabError):
    """An internal cross-check disagreed; indicates a bug, not bad input."""
