"""
Pydantic schemas for optimization problems.
"""

from enum import Enum
from typing import Any, Callable, Optional, Sequence, Tuple

from pydantic import BaseModel, Field

from madsopt.schemas.evaluation import Point

# A blackbox receives a point and returns its raw outputs, one value per entry
# of Problem.output_kinds and in that order.
Blackbox = Callable[[Point], Sequence[float]]


class OutputKind(str, Enum):
    """Role of one blackbox output."""
    OBJ = "OBJ"
    PB = "PB"  # constraint handled by the progressive barrier
    EB = "EB"  # constraint handled by the extreme barrier


class Problem(BaseModel):
    """Blackbox optimization problem: min f(x) subject to c(x) <= 0 and bounds."""
    
    name: str = Field(default="problem", min_length=1)
    n: int = Field(..., ge=1)
    output_kinds: Tuple[OutputKind, ...] = Field(..., min_length=1)
    lower: Optional[Tuple[float, ...]] = None
    upper: Optional[Tuple[float, ...]] = None
    x0: Tuple[Point, ...] = Field(..., min_length=1)
    evaluator: Optional[Callable[..., Any]] = Field(default=None, exclude=True, repr=False)
    
    model_config = {
        "frozen": True,
        "arbitrary_types_allowed": True,
    }
    
    @property
    def m(self) -> int:
        """Number of constraints."""
        return len(self.output_kinds) - 1
    
    @property
    def constraint_kinds(self) -> Tuple[OutputKind, ...]:
        """Kinds of the constraint outputs, in blackbox output order."""
        return tuple(kind for kind in self.output_kinds if kind != OutputKind.OBJ)
    
    @property
    def objective_index(self) -> int:
        """Position of the objective among the blackbox outputs."""
        return self.output_kinds.index(OutputKind.OBJ)
    
    @property
    def has_pb_constraints(self) -> bool:
        """True when at least one constraint uses the progressive barrier."""
        return OutputKind.PB in self.output_kinds


class ValidatedProblem(Problem):
    """Problem whose invariants were checked; bounds are always present."""
    
    lower: Tuple[float, ...]
    upper: Tuple[float, ...]
    
    @property
    def has_finite_bounds(self) -> bool:
        """True when every coordinate has finite lower and upper bounds."""
        return all(abs(v) != float("inf") for v in self.lower + self.upper)
