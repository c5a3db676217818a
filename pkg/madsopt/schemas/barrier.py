"""
Pydantic schemas for constraint handling state.
"""

import math
from typing import Optional

from pydantic import BaseModel, Field, model_validator

from madsopt.schemas.evaluation import Evaluation, Point
from madsopt.schemas.params import BarrierKind


class Incumbent(BaseModel):
    """Best known point of a barrier category."""
    
    point: Point
    evaluation: Evaluation
    h: float = Field(..., ge=0)
    
    model_config = {
        "frozen": True
    }
    
    @property
    def f(self) -> float:
        """Objective value of the incumbent."""
        return self.evaluation.f


class BarrierState(BaseModel):
    """Feasible and least-infeasible incumbents plus the violation threshold."""
    
    kind: BarrierKind
    best_feasible: Optional[Incumbent] = None
    best_infeasible: Optional[Incumbent] = None
    h_max: float = Field(default=math.inf, ge=0)
    
    model_config = {
        "frozen": True
    }
    
    @model_validator(mode='after')
    def validate_incumbents(self):
        """Check the h ranges of both incumbents."""
        if self.best_feasible is not None and self.best_feasible.h != 0:
            raise ValueError("best_feasible must have h = 0")
        if self.best_infeasible is not None:
            if self.kind == BarrierKind.EXTREME:
                raise ValueError("The extreme barrier keeps no infeasible incumbent")
            if not 0 < self.best_infeasible.h <= self.h_max:
                raise ValueError("best_infeasible must satisfy 0 < h <= h_max")
        return self
    
    @property
    def frame_center(self) -> Optional[Incumbent]:
        """Poll center: the feasible incumbent when it exists."""
        return self.best_feasible or self.best_infeasible
