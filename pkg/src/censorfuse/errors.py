"""Exception taxonomy shared across the package.

Configuration problems and numerical failures are kept on separate branches so
the command line layer can map them to distinct exit codes.
"""


class CensorfuseError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(CensorfuseError):
    """Invalid scenario configuration or malformed input file."""


class DomainError(CensorfuseError):
    """Argument outside the mathematical domain of an operation."""


class ParameterError(DomainError):
    """Copula parameter outside the family's admissible range."""


class NumericalError(CensorfuseError):
    """A numerical routine could not produce a trustworthy result."""


class IntegrationError(NumericalError):
    """Quadrature failed, typically a non-finite integrand value."""


class ResolutionError(NumericalError):
    """A grid is too coarse for the quantity being computed."""


class FitError(NumericalError):
    """Maximum-likelihood fitting failed or the data are degenerate."""


class CalibrationError(NumericalError):
    """Not enough samples to calibrate a threshold at the requested rate."""
