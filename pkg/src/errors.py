#!/usr/bin/env python3
"""
Exception hierarchy for switching-stability analysis.

Errors are grouped by the CLI exit code they map to:
InputError -> 2, NumericalFailure -> 3, PreconditionRefused -> 4.
"""


class SwitchingError(Exception):
    """Base class for all analysis errors"""

    exit_code = 1


# ---------------------------------------------------------------- bad input

class InputError(SwitchingError):
    """Malformed input data"""

    exit_code = 2


class ScenarioError(InputError):
    """Scenario file could not be read or validated"""


class SymbolOutOfRange(InputError):
    """A symbol outside {1, ..., N} was supplied"""


class PrefixExhausted(InputError):
    """A finite symbol prefix is shorter than the requested horizon"""


# -------------------------------------------------------- numerical failure

class NumericalFailure(SwitchingError):
    """A numerical kernel failed to produce a trustworthy result"""

    exit_code = 3


class SingularInput(NumericalFailure):
    """Matrix is singular at rank tolerance"""


class NoConvergence(NumericalFailure):
    """Iterative eigenvalue solver hit its iteration cap"""


class NumericalBreakdown(NumericalFailure):
    """Triangularization lost its common eigenvector at tolerance"""


class NonFinite(NumericalFailure):
    """Integration produced NaN or Inf"""


class NotTriangular(NumericalFailure):
    """Coefficient matrix has sub-diagonal mass above tolerance"""


# ----------------------------------------------------- precondition refused

class PreconditionRefused(SwitchingError):
    """The requested analysis is vacuous or undefined for this input"""

    exit_code = 4


class NotSolvable(PreconditionRefused):
    """The family generates a non-solvable Lie algebra"""


class MeanNotHurwitz(PreconditionRefused):
    """The alpha-weighted mean matrix is not Hurwitz"""


class GrowthBoundViolated(PreconditionRefused):
    """Sampled |B(x)|/|x| exceeded the declared bound"""


class HorizonTooShort(PreconditionRefused):
    """Trajectory horizon too short for a verdict"""


class InsufficientSeries(PreconditionRefused):
    """Interval series does not cover the requested windows"""
