"""Exception hierarchy.

The three subclasses map one-to-one onto the CLI exit codes:
ValidationError -> 2, NumericalError -> 3, StatisticalError -> 4.
"""


class QgalvError(Exception):
    """Base class for all package errors."""


class ValidationError(QgalvError):
    """Bad inputs: configs, grids, units, preconditions."""


class NumericalError(QgalvError):
    """Quadrature non-convergence, solver breakdown, sign violations."""


class StatisticalError(QgalvError):
    """A statistical test (oracle z-score, discrepancy target) failed."""


class QgalvWarning(UserWarning):
    """Non-fatal advisories: soft geometry bounds, RWA range, edge shells."""
