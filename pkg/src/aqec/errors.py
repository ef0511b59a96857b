"""Exception types shared across the package."""


class AqecError(Exception):
    """Base class for package errors."""


class CutoffError(AqecError):
    """Fock cutoff invalid or too small for the requested state."""


class NumericError(AqecError):
    """Non-finite data or a failed numerical guarantee."""


class CompileError(AqecError):
    """A dissipator factor could not be expanded into Gaussian gates."""


class IntegrationError(AqecError):
    """Time integration failed (trace drift, step underflow)."""


class SteadyStateError(AqecError):
    """Steady-state solve is degenerate or ill-posed."""


class ConfigError(AqecError):
    """Scenario configuration is invalid; message carries file location."""
