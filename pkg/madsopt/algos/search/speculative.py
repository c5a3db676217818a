"""
Speculative search: a short line search along the last success direction.
"""

from typing import List

import numpy as np

from madsopt.algos.search.base import SearchMethod
from madsopt.algos.state import MadsState
from madsopt.schemas.params import SearchKind
from madsopt.schemas.trial import GeneratorTag, TrialPoint


def speculative_search_points(state: MadsState, count: int) -> List[TrialPoint]:
    """
    Points x + 2^(i-1) d for i = 1..count along the last success direction d.
    
    Args:
        state: Run state (frame center and last success direction)
        count: Number of points
        
    Returns:
        List[TrialPoint]: Mesh points inside the bounds; empty when no success
        happened yet
    """
    d = state.last_success_direction
    if d is None or not np.any(d):
        return []
    center = np.asarray(state.mesh.center, dtype=float)
    trials = []
    for i in range(count):
        t = state.make_trial(center + (2.0 ** i) * d, GeneratorTag.SPECULATIVE_SEARCH)
        if t is not None:
            trials.append(t)
    return trials


class SpeculativeSearch(SearchMethod):
    name = "SpeculativeSearch"
    kind = SearchKind.SPECULATIVE
    generator = GeneratorTag.SPECULATIVE_SEARCH
    
    def generate(self, state: MadsState) -> List[TrialPoint]:
        return speculative_search_points(state, state.params.speculative_count)
