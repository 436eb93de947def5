"""Exception hierarchy shared by all modules."""


class SectorHeatError(Exception):
    """Base class for package errors."""


class DomainError(SectorHeatError, ValueError):
    """Invalid geometry, axis index or point outside the sector."""


class GridCoverageError(SectorHeatError):
    """Requested evaluation points are not covered by the grid."""


class NumericalError(SectorHeatError, ArithmeticError):
    """Quadrature tail overflow, non-finite values or non-convergence."""


class RegimeError(SectorHeatError, ValueError):
    """Operation called in the wrong asymptotic regime."""


class ConfigError(SectorHeatError, ValueError):
    """Malformed or inconsistent run configuration."""
