"""
Base class of search methods.
"""

import logging
from typing import List, Optional

from madsopt.algos.state import MadsState
from madsopt.algos.step import Step
from madsopt.eval.engine import QueueRun
from madsopt.schemas.results import SuccessKind
from madsopt.schemas.trial import GeneratorTag, TrialPoint

logger = logging.getLogger(__name__)


class SearchMethod(Step):
    """
    Search component: start generates mesh trial points, run evaluates them.
    
    Subclasses implement generate(). User-defined searches subclass this and
    are passed to Mads; they run after the built-in searches.
    """
    
    name = "Search"
    generator = GeneratorTag.USER_SEARCH
    
    def __init__(self, parent: Optional[Step] = None):
        super().__init__(parent)
        self.state: Optional[MadsState] = None
        self.trials: List[TrialPoint] = []
        self.outcome: Optional[QueueRun] = None
    
    def bind(self, state: MadsState, parent: Optional[Step] = None) -> "SearchMethod":
        """Attach the search to a run state before executing it."""
        self.state = state
        if parent is not None:
            self.parent = parent
        self.trials = []
        self.outcome = None
        return self
    
    def enabled(self, state: MadsState) -> bool:
        """Whether the search applies to this state (user searches always do)."""
        return True
    
    def generate(self, state: MadsState) -> List[TrialPoint]:
        """Candidate mesh points of the current iteration."""
        raise NotImplementedError
    
    @property
    def success(self) -> SuccessKind:
        """Strongest success of the last evaluation round."""
        return self.outcome.success if self.outcome is not None else SuccessKind.FAILURE
    
    def start(self) -> None:
        self.trials = self.generate(self.state)
    
    def run(self) -> None:
        if self.trials:
            self.outcome = self.state.evaluate(self.trials)
    
    def end(self) -> None:
        logger.debug(
            "%s: %d candidates, %s",
            self.path,
            len(self.trials),
            self.success.value,
        )
