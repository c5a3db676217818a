"""
Exception hierarchy for madsopt.

Problem and parameter errors also derive from ValueError so callers that only
care about bad input can catch the builtin.
"""

from pathlib import Path
from typing import Optional


class MadsError(Exception):
    """Base class for every error raised by madsopt."""


class ProblemError(MadsError, ValueError):
    """Invalid problem definition or parameters."""


class DimensionMismatch(ProblemError):
    """A point or bound vector does not have the problem dimension."""


class BoundViolation(ProblemError):
    """A starting point lies outside the variable bounds, or lower > upper."""


class NoObjective(ProblemError):
    """The output kinds do not contain exactly one objective."""


class NonPositiveFrame(ProblemError):
    """A frame size parameter is not strictly positive."""


class IncompatibleParams(ProblemError):
    """A restart changed the dimension or the output kinds of the problem."""


class NoEvaluableStart(MadsError):
    """No starting point produced a usable evaluation."""


class SingularFit(MadsError):
    """The quadratic model normal equations could not be solved."""


class DegenerateSimplex(MadsError):
    """The simplex vertices do not span the variable space."""


class ParamFileError(MadsError):
    """Base class for parameter file errors."""
    
    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class MissingKey(ParamFileError):
    """A mandatory key is absent from the parameter file."""


class UnknownKey(ParamFileError):
    """The parameter file contains a key that is not recognized."""


class ParamParseError(ParamFileError):
    """A parameter value could not be parsed."""


class ImmutableParamChanged(ParamFileError):
    """A hot restart tried to change a parameter that is fixed for the run."""


class OutputError(MadsError):
    """Writing or reading a run file failed."""
    
    def __init__(self, path: Path | str, reason: str):
        self.path = Path(path)
        super().__init__(f"{self.path}: {reason}")


class BlackboxSpawnError(MadsError):
    """The blackbox executable cannot be launched."""
