"""
Poll step and MegaSearchPoll.
"""

import logging
from typing import List, Optional, Sequence

import numpy as np

from madsopt.algos.directions import ortho_2n_directions
from madsopt.algos.search.base import SearchMethod
from madsopt.algos.state import MadsState
from madsopt.algos.step import Step
from madsopt.eval.engine import QueueRun
from madsopt.schemas.results import SuccessKind
from madsopt.schemas.trial import TrialPoint

logger = logging.getLogger(__name__)


def poll_directions(state: MadsState) -> List[np.ndarray]:
    """
    Ortho 2n directions of the run, embedded in the full space for subspace runs.
    
    Exactly one unit vector is drawn from state.rng per call.
    """
    if state.free_indices is None:
        return ortho_2n_directions(state.problem.n, state.rng, state.mesh)
    free = list(state.free_indices)
    directions = []
    for d in ortho_2n_directions(len(free), state.rng, state.mesh):
        full = np.zeros(state.problem.n)
        full[free] = d
        directions.append(full)
    return directions


def poll_points(state: MadsState) -> List[TrialPoint]:
    """
    Poll set around the frame center.
    
    Args:
        state: Run state with a mesh centered on the frame center
        
    Returns:
        List[TrialPoint]: center + delta * d for the ortho 2n directions d,
        snapped into the bounds when needed
    """
    center = np.asarray(state.mesh.center, dtype=float)
    trials = []
    for d in poll_directions(state):
        t = state.make_trial(center + state.mesh.delta * d, state.poll_generator)
        if t is not None:
            trials.append(t)
    return trials


class Poll(Step):
    """Poll component: start generates the poll set, run evaluates it."""
    
    name = "Poll"
    
    def __init__(self, state: MadsState, parent: Optional[Step] = None):
        super().__init__(parent)
        self.state = state
        self.trials: List[TrialPoint] = []
        self.outcome: Optional[QueueRun] = None
    
    @property
    def success(self) -> SuccessKind:
        return self.outcome.success if self.outcome is not None else SuccessKind.FAILURE
    
    def start(self) -> None:
        self.trials = poll_points(self.state)
    
    def run(self) -> None:
        if self.trials:
            self.outcome = self.state.evaluate(self.trials)
    
    def end(self) -> None:
        logger.debug("%s: %d candidates, %s", self.path, len(self.trials), self.success.value)


def mega_search_poll_points(state: MadsState, searches: Sequence[SearchMethod]) -> List[TrialPoint]:
    """
    Every search candidate followed by the poll set, duplicates removed.
    
    Args:
        state: Run state
        searches: Enabled search methods, in execution order
        
    Returns:
        List[TrialPoint]: Candidates in generation order, first occurrence kept
    """
    trials: List[TrialPoint] = []
    seen = set()
    for search in searches:
        for t in search.generate(state):
            if t.point not in seen:
                seen.add(t.point)
                trials.append(t)
    for t in poll_points(state):
        if t.point not in seen:
            seen.add(t.point)
            trials.append(t)
    return trials


class MegaSearchPoll(Step):
    """
    Generates all search and poll points before evaluating them as one burst.
    
    Only the start hook of the nested searches and poll is used.
    """
    
    name = "MegaSearchPoll"
    
    def __init__(self, state: MadsState, searches: Sequence[SearchMethod], parent: Optional[Step] = None):
        super().__init__(parent)
        self.state = state
        self.searches = list(searches)
        self.trials: List[TrialPoint] = []
        self.outcome: Optional[QueueRun] = None
    
    @property
    def success(self) -> SuccessKind:
        return self.outcome.success if self.outcome is not None else SuccessKind.FAILURE
    
    def start(self) -> None:
        for search in self.searches:
            search.bind(self.state, parent=self)
        self.trials = mega_search_poll_points(self.state, self.searches)
    
    def run(self) -> None:
        if self.trials:
            self.outcome = self.state.evaluate(self.trials)
    
    def end(self) -> None:
        logger.debug("%s: %d candidates, %s", self.path, len(self.trials), self.success.value)
