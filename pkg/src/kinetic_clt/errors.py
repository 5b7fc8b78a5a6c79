"""Exception and warning types raised across the package."""


class KineticError(Exception):
    """Base class for package errors."""


class NoRoot(KineticError):
    """S(s) has no sign change on (0, 2]."""


class InvalidS(KineticError):
    """The moment function is <= -1 where a Gamma-ratio needs it > -1."""


class AlphaMismatch(KineticError):
    """An operation specific to one value of alpha was given another kernel."""


class GridTooSmall(KineticError):
    """The frequency grid cannot hold the arguments an operation needs."""


class GridMismatch(KineticError):
    """Two frequency grids that should coincide do not."""


class DegenerateFit(KineticError):
    """Too few usable points for a decay fit."""


class ConfigError(KineticError):
    """A kernel, law or experiment specification could not be parsed."""


class PoorDecay(UserWarning):
    """A characteristic function does not decay at the grid boundary."""
