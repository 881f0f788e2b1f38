"""Exception types shared across the package."""


class UsageError(ValueError):
    """A caller violated a documented precondition (bad labels, shapes, modes)."""


class CutoffTooSmallError(UsageError):
    """Fock truncation leaves too much thermal tail mass.

    Carries the smallest cutoff that would satisfy the configured tail bound.
    """

    def __init__(self, msg, required_n_max):
        super().__init__(msg)
        self.required_n_max = required_n_max


class IntegrationError(RuntimeError):
    """Master-equation integration failed (step underflow, non-finite state)."""

    def __init__(self, msg, diagnostics=None):
        super().__init__(msg)
        self.diagnostics = diagnostics or {}


class UndefinedGainError(ValueError):
    """Gain is undefined because the classical reference charge is <= 0."""


class UndefinedEfficiencyError(ValueError):
    """Efficiency is undefined because the injected work is <= 0."""
