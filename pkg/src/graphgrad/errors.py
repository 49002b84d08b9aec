"""Exception types raised across the package."""

from __future__ import annotations


class GraphGradError(Exception):
    """Base class for all package errors."""


class InvalidGraph(GraphGradError, ValueError):
    """Graph input breaks a structural rule (self-loop, duplicate, weight)."""


class SingularStructure(GraphGradError):
    """The zero eigenvalue of a Laplacian is not simple."""


class DetailedBalanceViolation(GraphGradError):
    """Weights are not reversible with respect to the stationary vector."""

    def __init__(self, message: str, pairs=()):
        super().__init__(message)
        self.pairs = list(pairs)


class DomainViolation(GraphGradError, ValueError):
    """An argument left the declared domain of a coupling or energy."""


class NonFiniteRatio(GraphGradError, ArithmeticError):
    """phi / (h(a) - h(b)) degenerates even after the secant fallback."""


class SparsityMismatch(GraphGradError):
    """A metric matrix has couplings outside the incidence edge set."""


class WrongEnergyKind(GraphGradError):
    """The operation needs a quadratic energy."""


class StepDomainViolation(GraphGradError):
    """An integrator stage left the domain at time ``t``."""

    def __init__(self, message: str, t: float):
        super().__init__(message)
        self.t = t


class ScenarioError(GraphGradError, ValueError):
    """Malformed scenario document."""


class WrapHazard(UserWarning):
    """Oscillator spread exceeded pi while integrating on the real line."""


class NotStronglyConnected(GraphGradError):
    """The graph has more than one recurrent class."""
