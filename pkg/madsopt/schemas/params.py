"""
Pydantic schemas for algorithmic parameters.
"""

from enum import Enum
from typing import FrozenSet, Optional

from pydantic import BaseModel, Field, model_validator


class OrderingStrategy(str, Enum):
    """Order in which queued trial points are evaluated."""
    LAST_SUCCESS_DIRECTION = "last_success_direction"
    GENERATION_ORDER = "generation_order"
    LEXICOGRAPHIC = "lexicographic"
    RANDOM = "random"


class BarrierKind(str, Enum):
    """Constraint handling strategy."""
    EXTREME = "extreme"
    PROGRESSIVE = "progressive"


class SearchKind(str, Enum):
    """Built-in search methods, listed in execution order."""
    SPECULATIVE = "speculative"
    LH = "lh"
    NM = "nm"
    QUAD = "quad"


SEARCH_ORDER = (SearchKind.SPECULATIVE, SearchKind.LH, SearchKind.NM, SearchKind.QUAD)


class Params(BaseModel):
    """Algorithmic parameters of a Mads run."""
    
    # Mesh
    delta0: float = Field(..., gt=0, description="Initial frame size")
    tau: float = Field(default=0.5, gt=0, lt=1, description="Mesh adjustment parameter")
    eps_stop: float = Field(default=1e-13, ge=0, description="Stop when the frame size drops below")
    
    # Termination
    max_bb_eval: int = Field(..., ge=0, description="Blackbox evaluation budget")
    max_iterations: Optional[int] = Field(default=None, ge=0)
    
    seed: int = 0
    
    # Evaluation queue
    opportunism: bool = True
    ordering: OrderingStrategy = OrderingStrategy.LAST_SUCCESS_DIRECTION
    n_workers: int = Field(default=1, ge=1)
    group_max_size: int = Field(default=1, ge=1)
    
    # Search and poll
    searches_enabled: FrozenSet[SearchKind] = Field(default_factory=frozenset)
    mega_search_poll: bool = False
    speculative_count: int = Field(default=1, ge=1)
    nm_max_trials: int = Field(default=4, ge=1, le=4)
    lh_count: Optional[int] = Field(default=None, ge=1)
    quad_max_evals: int = Field(default=80, ge=1)
    
    barrier_kind: BarrierKind = BarrierKind.EXTREME
    
    # Parallel space decomposition
    psd_enabled: bool = False
    psd_ns: int = Field(default=2, ge=1)
    psd_nmt: int = Field(default=4, ge=2)
    psd_worker_budget: int = Field(default=40, ge=1)
    psd_coverage_threshold: Optional[int] = Field(default=None, ge=1)
    
    model_config = {
        "frozen": True
    }
    
    @model_validator(mode='after')
    def validate_psd_threads(self):
        """PSD main lanes cannot outnumber the available threads."""
        if self.psd_enabled and self.n_workers < self.psd_nmt:
            raise ValueError(
                f"PSD needs n_workers >= psd_nmt (got {self.n_workers} < {self.psd_nmt})"
            )
        return self
