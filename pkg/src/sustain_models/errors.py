"""Exception types shared across the toolkit."""

from __future__ import annotations


class SustainModelsError(Exception):
    """Base class for every error raised by the toolkit."""


class ModelError(SustainModelsError):
    """A model failed at runtime (maps to CLI exit status 2)."""


class IntegrationError(ModelError):
    """A right-hand side produced a non-finite value during integration."""

    def __init__(self, message, t=None, state=None):
        super().__init__(message)
        self.t = t
        self.state = state

    def __str__(self):
        base = super().__str__()
        if self.t is None:
            return base
        return f"{base} (t={self.t!r}, state={self.state!r})"


class CFLViolationError(ModelError):
    """Explicit time step exceeds the stability bound."""

    def __init__(self, message, max_dt, binding):
        super().__init__(message)
        self.max_dt = max_dt
        self.binding = binding


class InfeasibleProblemError(ModelError):
    """The emission cap cannot be met even at maximum abatement."""

    def __init__(self, message, min_total_emission):
        super().__init__(message)
        self.min_total_emission = min_total_emission


class DegenerateModelError(ModelError):
    """The requested quantity does not exist for these parameters."""
