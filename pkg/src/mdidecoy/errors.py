"""Exception types raised when a bound cannot be certified."""

from __future__ import annotations


class GateError(ValueError):
    """A precondition of a bound formula is violated.

    Attributes
    ----------
    inequality : str
        Human-readable form of the inequality that failed, e.g.
        ``"sigma_A^z + sigma_B^z < 1"``.
    """

    def __init__(self, inequality: str, detail: str = "") -> None:
        self.inequality = inequality
        self.detail = detail
        msg = f"violated: {inequality}"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)


class ConditionError(GateError):
    """Source coefficient intervals fail a ratio condition."""


class SigmaGateError(GateError):
    """sigma_A + sigma_B >= 1: fluctuation too large for this bound."""


class DenominatorError(GateError):
    """Non-positive denominator: decoy/signal intensities too close or fluctuation too large."""


class NoKeyError(ArithmeticError):
    """The single-photon yield lower bound vanished, so no key can be certified."""
