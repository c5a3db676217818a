"""
Pydantic schemas for points and blackbox evaluations.
"""

import math
from enum import Enum
from typing import Iterable, Tuple

from pydantic import BaseModel, Field, model_validator

# Coordinates of a point in R^n. Tuples are hashable, which makes exact
# coordinate sequences usable as cache keys.
Point = Tuple[float, ...]


def as_point(values: Iterable[float]) -> Point:
    """
    Convert a coordinate sequence to a Point.
    
    Args:
        values: Coordinates (any iterable of numbers, numpy arrays included)
        
    Returns:
        Point: Tuple of floats
        
    Raises:
        ValueError: If a coordinate is infinite or NaN
    """
    point = tuple(float(v) for v in values)
    if not all(math.isfinite(v) for v in point):
        raise ValueError(f"Point coordinates must be finite: {point}")
    return point


class EvalStatus(str, Enum):
    """Outcome of a blackbox call."""
    OK = "ok"
    FAILED = "failed"


class Evaluation(BaseModel):
    """Objective and constraint values returned for one point."""
    
    f: float
    c: Tuple[float, ...] = Field(default_factory=tuple)
    status: EvalStatus = EvalStatus.OK
    
    model_config = {
        "frozen": True
    }
    
    @model_validator(mode='after')
    def validate_failed_values(self):
        """A failed evaluation carries +inf everywhere."""
        if self.status == EvalStatus.FAILED:
            if self.f != math.inf or any(v != math.inf for v in self.c):
                raise ValueError("FAILED evaluations must have f = +inf and all c = +inf")
        return self
    
    @classmethod
    def failed(cls, m: int) -> "Evaluation":
        """Build the FAILED evaluation of a problem with m constraints."""
        return cls(f=math.inf, c=(math.inf,) * m, status=EvalStatus.FAILED)
    
    @property
    def is_ok(self) -> bool:
        """True when the blackbox returned usable output."""
        return self.status == EvalStatus.OK
