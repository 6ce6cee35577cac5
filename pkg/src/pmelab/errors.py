"""Exception hierarchy shared by all modules."""

from __future__ import annotations


class PmelabError(Exception):
    """Base class for all package errors."""


class ConfigError(PmelabError):
    """Invalid configuration file or parameter set."""


class NoAdvancingWaveError(PmelabError):
    """The reaction integral is non-positive, so no advancing limit wave exists."""


class NoSolutionRegimeError(PmelabError):
    """The reaction integral is non-positive, so the boundary-value problem is empty."""


class NoBoundedSolutionError(PmelabError):
    """The limit-front ODE has no bounded solution for this reaction term."""


class SingularTimeMapError(PmelabError):
    """The time-map quadrature cannot be regularized (vanishing slope at the peak)."""


class BracketError(PmelabError):
    """A sign change required for bisection was not found on the scanned interval."""


class StiffFailureError(PmelabError):
    """Adaptive step size underflowed during phase-plane integration."""

    def __init__(self, message: str, trace=None):
        super().__init__(message)
        self.trace = trace


class NoProfileError(PmelabError):
    """Requested wave profile does not exist (shooting hit an interior zero)."""


class NumericalBlowupError(PmelabError):
    """NaN or runaway values appeared during time stepping."""


class SupportBoundaryError(PmelabError):
    """The density support reached the edge of the computational domain."""


class LevelNotFoundError(PmelabError):
    """Requested level is never attained by the field."""


class RegimeViolationError(PmelabError):
    """A computed quantity contradicts the regime the experiment assumes."""
