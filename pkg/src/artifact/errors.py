"""Exception types shared by all modules.

The command line front end maps these onto exit codes, so library code
raises them instead of bare ``ValueError`` or ``RuntimeError``.
"""

from __future__ import annotations


class DomainError(ValueError):
    """An argument lies outside the domain of the requested operation."""


class NumericalError(ArithmeticError):
    """A numerical procedure failed to reach its tolerance.

    Parameters
    ----------
    message : str
        Human readable diagnostic.
    value : float, optional
        Best available value when the failure happened.
    err_est : float, optional
        Error estimate attached to ``value``.
    """

    def __init__(self, message: str, value: float | None = None,
                 err_est: float | None = None):
        super().__init__(message)
        self.value = value
        self.err_est = err_est


class UnsupportedRegime(NumericalError):
    """The requested evaluation needs a regularization the engine lacks."""
