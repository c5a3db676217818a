"""
Pydantic schema for trial points.
"""

from enum import Enum
from typing import Optional

from pydantic import BaseModel

from madsopt.schemas.evaluation import Point
from madsopt.schemas.mesh import MeshState


class GeneratorTag(str, Enum):
    """Step that produced a trial point."""
    INITIAL = "initial"
    POLL = "poll"
    SPECULATIVE_SEARCH = "speculative-search"
    LH_SEARCH = "lh-search"
    NM_SEARCH = "nm-search"
    QUAD_SEARCH = "quad-search"
    USER_SEARCH = "user-search"
    PSD_POLLSTER = "psd-pollster"
    PSD_WORKER = "psd-worker"
    LH = "lh"
    NM = "nm"


# Tags whose points must lie on the mesh of their snapshot
MESH_GENERATORS = frozenset({
    GeneratorTag.POLL,
    GeneratorTag.SPECULATIVE_SEARCH,
    GeneratorTag.LH_SEARCH,
    GeneratorTag.NM_SEARCH,
    GeneratorTag.QUAD_SEARCH,
    GeneratorTag.USER_SEARCH,
    GeneratorTag.PSD_POLLSTER,
    GeneratorTag.PSD_WORKER,
})


class TrialPoint(BaseModel):
    """Candidate point waiting for evaluation."""
    
    point: Point
    generator: GeneratorTag
    gen_direction: Optional[Point] = None
    mesh_snapshot: Optional[MeshState] = None
    
    model_config = {
        "frozen": True
    }
