"""
Pydantic schemas for evaluation and run results.
"""

from enum import Enum
from typing import List, Optional, Tuple

from pydantic import BaseModel, Field

from madsopt.schemas.barrier import Incumbent
from madsopt.schemas.evaluation import Evaluation, Point
from madsopt.schemas.trial import TrialPoint


class SuccessKind(str, Enum):
    """Classification of a trial point against the incumbents."""
    FULL_SUCCESS = "full_success"
    PARTIAL_SUCCESS = "partial_success"
    FAILURE = "failure"


# Higher rank wins when several results are merged
SUCCESS_RANK = {
    SuccessKind.FAILURE: 0,
    SuccessKind.PARTIAL_SUCCESS: 1,
    SuccessKind.FULL_SUCCESS: 2,
}


def best_success(*kinds: SuccessKind) -> SuccessKind:
    """Return the strongest success kind among the arguments."""
    return max(kinds, key=SUCCESS_RANK.__getitem__, default=SuccessKind.FAILURE)


class StopReason(str, Enum):
    """Why a dispatch round or a run stopped."""
    OPPORTUNISTIC_SUCCESS = "opportunistic_success"
    BUDGET_EXHAUSTED = "budget_exhausted"
    QUEUE_EMPTY = "queue_empty"
    USER_INTERRUPT = "user_interrupt"
    MESH_TOLERANCE = "mesh_tolerance"
    MAX_ITERATIONS = "max_iterations"


class EvalRecord(BaseModel):
    """One completed blackbox evaluation, in completion order."""
    
    eval_index: int = Field(..., ge=1)
    trial: TrialPoint
    evaluation: Evaluation
    h: float
    success: SuccessKind
    wall_time: float = Field(default=0.0, ge=0)
    lane: int = 0
    
    model_config = {
        "frozen": True
    }
    
    @property
    def point(self) -> Point:
        """Coordinates of the evaluated point."""
        return self.trial.point


class IterationRecord(BaseModel):
    """Mesh and incumbent state at the end of one Mads iteration."""
    
    k: int
    Delta: float
    delta: float
    success: SuccessKind
    frame_center: Point
    n_evaluated: int
    candidates: Tuple[Point, ...] = ()
    
    model_config = {
        "frozen": True
    }


class MadsResult(BaseModel):
    """Incumbents and histories returned by a run."""
    
    best_feasible: Optional[Incumbent] = None
    best_infeasible: Optional[Incumbent] = None
    history: List[EvalRecord] = Field(default_factory=list)
    iterations: List[IterationRecord] = Field(default_factory=list)
    stop_reason: Optional[StopReason] = None
    eval_count: int = 0
    
    @property
    def best(self) -> Optional[Incumbent]:
        """Feasible incumbent, else the least infeasible one."""
        return self.best_feasible or self.best_infeasible
