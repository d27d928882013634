"""Exception hierarchy shared by all modules.

Each error carries an ``exit_code`` used by the command line runner:
1 for a failed invariant, 2 for bad configuration, 3 for numeric breakdown.
"""

from __future__ import annotations


class HoloqError(Exception):
    exit_code = 1


class DimensionMismatch(HoloqError, ValueError):
    exit_code = 2


class ParamDomain(HoloqError, ValueError):
    exit_code = 2


class ConfigInvalid(HoloqError, ValueError):
    exit_code = 2


class LoopNotClosed(HoloqError, ValueError):
    exit_code = 2


class LevelNotFound(HoloqError, LookupError):
    exit_code = 2


class NotPseudoUnitary(HoloqError, ValueError):
    exit_code = 1


class NumericBreakdown(HoloqError, ArithmeticError):
    exit_code = 3


class NonDiagonalizable(NumericBreakdown):
    """Eigenvector matrix is (numerically) singular: an exceptional point."""


class InvalidMetric(NumericBreakdown):
    """Metric candidate is not Hermitian positive-definite."""


class NotPositiveDefinite(InvalidMetric):
    pass


class GapClosure(NumericBreakdown):
    """The tracked level touched another part of the spectrum."""


class PairingAmbiguity(NumericBreakdown):
    pass


class StepTooLarge(NumericBreakdown):
    """Finite-difference derivative failed its Richardson cross-check."""


class NonFiniteState(NumericBreakdown):
    pass


class ExcessLeakage(NumericBreakdown):
    """Final state left the dark subspace: evolution was not adiabatic."""
