"""
Mesh adaptive direct search.

Mads is a Step made of an Initialization followed by Iterations. Each
Iteration recenters the mesh (Update), runs the enabled searches and, unless
one of them found a full success, the poll. The frame is enlarged after a
full success, kept after a partial success and refined otherwise.
"""

import logging
import threading
from typing import Callable, List, Optional, Sequence

import numpy as np

from madsopt.algos.barrier import classify_trial, h_values
from madsopt.algos.mesh import enlarge, initial_mesh, recenter, refine
from madsopt.algos.poll import MegaSearchPoll, Poll
from madsopt.algos.search import (
    LatinHypercubeSearch,
    NelderMeadSearch,
    QuadModelSearch,
    SearchMethod,
    SpeculativeSearch,
)
from madsopt.algos.state import MadsState, new_state
from madsopt.algos.step import Step, run_step
from madsopt.errors import NoEvaluableStart
from madsopt.eval.budget import EvalBudget
from madsopt.eval.cache import EvalCache
from madsopt.eval.engine import EvalLog
from madsopt.schemas.params import SEARCH_ORDER, Params, SearchKind
from madsopt.schemas.problem import Problem, ValidatedProblem
from madsopt.schemas.results import IterationRecord, MadsResult, StopReason, SuccessKind, best_success
from madsopt.schemas.trial import GeneratorTag, TrialPoint
from madsopt.validators.problem import validate_problem

logger = logging.getLogger(__name__)

BUILTIN_SEARCHES = {
    SearchKind.SPECULATIVE: SpeculativeSearch,
    SearchKind.LH: LatinHypercubeSearch,
    SearchKind.NM: NelderMeadSearch,
    SearchKind.QUAD: QuadModelSearch,
}

IterationCallback = Callable[["Mads"], None]


def check_termination(state: MadsState) -> Optional[StopReason]:
    """
    Stop criterion of the run, checked between iterations.
    
    Args:
        state: Run state
        
    Returns:
        Optional[StopReason]: MESH_TOLERANCE when Delta < eps_stop,
        BUDGET_EXHAUSTED when no evaluation is left, USER_INTERRUPT when the
        interrupt flag is set, MAX_ITERATIONS at the iteration cap, else None
    """
    if state.mesh is not None and state.mesh.Delta < state.params.eps_stop:
        return StopReason.MESH_TOLERANCE
    if state.budget.exhausted:
        return StopReason.BUDGET_EXHAUSTED
    if state.stop_event.is_set():
        return StopReason.USER_INTERRUPT
    if state.params.max_iterations is not None and state.k >= state.params.max_iterations:
        return StopReason.MAX_ITERATIONS
    return None


def replay_cache(state: MadsState) -> None:
    """Rebuild the incumbents from the cached evaluations, in insertion order."""
    entries = state.cache.items()
    if not entries:
        return
    
    def cached_h():
        _, _, c, ok = state.cache.arrays()
        return h_values(c, ok, state.problem)
    
    barrier = state.barrier
    for x, e in entries:
        _, barrier = classify_trial(barrier, x, e, state.problem, cached_h=cached_h)
    state.barrier = barrier
    logger.info("Replayed %d cached evaluations", len(entries))


class Initialization(Step):
    """Evaluates the starting points and builds the initial mesh."""
    
    name = "Initialization"
    
    def __init__(self, state: MadsState, parent: Optional[Step] = None):
        super().__init__(parent)
        self.state = state
    
    def start(self) -> None:
        replay_cache(self.state)
    
    def run(self) -> None:
        trials = [TrialPoint(point=x, generator=GeneratorTag.INITIAL) for x in self.state.problem.x0]
        self.state.evaluate(trials, opportunism=False)
    
    def end(self) -> None:
        state = self.state
        center = state.barrier.frame_center
        if center is None:
            if not state.history and state.budget.exhausted:
                state.stop = StopReason.BUDGET_EXHAUSTED
                return
            raise NoEvaluableStart(
                f"No starting point of '{state.problem.name}' has a usable evaluation "
                f"under the {state.params.barrier_kind.value} barrier"
            )
        state.mesh = initial_mesh(center.point, state.params.delta0, state.params.tau)


class Iteration(Step):
    """One Mads iteration: Update, searches, Poll, mesh update."""
    
    name = "Iteration"
    
    def __init__(self, state: MadsState, searches: Sequence[SearchMethod], parent: Optional[Step] = None):
        super().__init__(parent)
        self.state = state
        self.searches = list(searches)
        self.success = SuccessKind.FAILURE
        self.candidates: List[TrialPoint] = []
        self.n_evaluated = 0
    
    def start(self) -> None:
        # Update
        self.state.recenter_mesh()
        self.mesh = self.state.mesh
        self.center = self.state.barrier.frame_center
    
    def _absorb(self, component) -> None:
        self.candidates.extend(component.trials)
        if component.outcome is not None:
            self.n_evaluated += len(component.outcome.records)
        self.success = best_success(self.success, component.success)
    
    def run(self) -> None:
        state = self.state
        searches = [s for s in self.searches if s.enabled(state)]
        if state.params.mega_search_poll:
            mega = MegaSearchPoll(state, searches, parent=self)
            run_step(mega)
            self._absorb(mega)
            return
        for search in searches:
            run_step(search.bind(state, parent=self))
            self._absorb(search)
            if self.success == SuccessKind.FULL_SUCCESS:
                return
        poll = Poll(state, parent=self)
        run_step(poll)
        self._absorb(poll)
    
    def end(self) -> None:
        state = self.state
        if self.success == SuccessKind.FULL_SUCCESS:
            state.mesh = enlarge(self.mesh, state.max_Delta)
            new_center = state.barrier.frame_center
            direction = np.asarray(new_center.point) - np.asarray(self.center.point)
            if np.any(direction):
                state.last_success_direction = direction
            log = logger.info if state.depth == 0 and state.free_indices is None else logger.debug
            log("Iteration %d: new incumbent f=%s h=%s", state.k, new_center.f, new_center.h)
        elif self.success == SuccessKind.FAILURE:
            state.mesh = refine(self.mesh)
        state.mesh = recenter(state.mesh, state.barrier.frame_center.point)
        
        state.iterations.append(IterationRecord(
            k=state.k,
            Delta=self.mesh.Delta,
            delta=self.mesh.delta,
            success=self.success,
            frame_center=self.center.point,
            n_evaluated=self.n_evaluated,
            candidates=tuple(t.point for t in self.candidates),
        ))
        logger.debug(
            "Iteration %d: %s, Delta %s -> %s, %d evaluations",
            state.k, self.success.value, self.mesh.Delta, state.mesh.Delta, self.n_evaluated,
        )
        state.k += 1


class Mads(Step):
    """Mesh adaptive direct search run on a validated problem."""
    
    name = "Mads"
    
    def __init__(
        self,
        problem: Problem,
        params: Params,
        *,
        state: Optional[MadsState] = None,
        cache: Optional[EvalCache] = None,
        budget: Optional[EvalBudget] = None,
        log: Optional[EvalLog] = None,
        user_searches: Sequence[SearchMethod] = (),
        on_iteration: Optional[IterationCallback] = None,
        stop_event: Optional[threading.Event] = None,
        depth: int = 0,
        parent: Optional[Step] = None,
    ):
        """
        Initialize a run.
        
        Args:
            problem: Problem (validated here when needed)
            params: Run parameters
            state: Existing state to continue (warm restart, PSD lanes); the
                Initialization is skipped when it already has a mesh
            cache: Shared evaluation cache; cached points are never re-evaluated
            budget: Shared evaluation budget
            log: Shared evaluation log (indices and output stream)
            user_searches: Extra search methods run after the built-in ones
            on_iteration: Called after every iteration (checkpoints, hot restart)
            stop_event: User interrupt flag
            depth: Nesting depth
            parent: Enclosing component
        """
        super().__init__(parent)
        self.problem: ValidatedProblem = validate_problem(problem)
        if state is None:
            state = new_state(
                self.problem,
                params,
                cache=cache,
                budget=budget,
                log=log,
                stop_event=stop_event,
                depth=depth,
            )
        self.state = state
        self.user_searches = list(user_searches)
        self.on_iteration = on_iteration
    
    @property
    def params(self) -> Params:
        return self.state.params
    
    @property
    def searches(self) -> List[SearchMethod]:
        """Enabled built-in searches in execution order, then the user searches."""
        enabled = self.state.params.searches_enabled
        builtin = [BUILTIN_SEARCHES[kind]() for kind in SEARCH_ORDER if kind in enabled]
        return builtin + self.user_searches
    
    def apply_params(self, params: Params) -> None:
        """
        Replace the mutable parameters of a run in progress.
        
        Budget, tolerance, searches, ordering and opportunism take effect at
        the next iteration.
        """
        self.state.params = params
        self.state.budget.extend(params.max_bb_eval)
        self.state.queue.strategy = params.ordering
        logger.info("Parameters updated: budget %d, eps_stop %s", params.max_bb_eval, params.eps_stop)
    
    @property
    def top_level(self) -> bool:
        """False for nested model runs and PSD worker sessions."""
        return self.state.depth == 0 and self.state.free_indices is None
    
    def start(self) -> None:
        if self.top_level:
            logger.info(
                "Mads on '%s' (n=%d, m=%d), budget %d",
                self.problem.name, self.problem.n, self.problem.m, self.state.params.max_bb_eval,
            )
        if self.state.mesh is None:
            run_step(Initialization(self.state, parent=self))
    
    def run(self) -> None:
        state = self.state
        while state.stop is None:
            state.stop = check_termination(state)
            if state.stop is not None:
                break
            run_step(Iteration(state, self.searches, parent=self))
            if self.on_iteration is not None:
                self.on_iteration(self)
    
    def end(self) -> None:
        state = self.state
        best = state.barrier.frame_center
        log = logger.info if self.top_level else logger.debug
        log(
            "Mads stopped (%s) after %d iterations and %d evaluations, best f=%s h=%s",
            state.stop.value if state.stop else None,
            state.k,
            state.eval_count,
            best.f if best else None,
            best.h if best else None,
        )
    
    def solve(self) -> MadsResult:
        """Execute the run and return its result."""
        try:
            run_step(self)
        finally:
            self.state.engine.close()
        return self.state.result()


def mads_run(problem: Problem, params: Params, **kwargs) -> MadsResult:
    """
    Run Mads on a problem.
    
    Args:
        problem: Problem with an evaluator
        params: Run parameters
        **kwargs: Forwarded to Mads (cache, log, user_searches, on_iteration, ...)
        
    Returns:
        MadsResult: Incumbents, evaluation history, iteration records, stop reason
        
    Raises:
        NoEvaluableStart: If no starting point has a usable evaluation
    """
    return Mads(problem, params, **kwargs).solve()


def initialization_run(state: MadsState) -> MadsState:
    """Evaluate the starting points of a fresh state and build its mesh."""
    run_step(Initialization(state))
    return state


def iteration_run(state: MadsState, user_searches: Sequence[SearchMethod] = ()) -> MadsState:
    """Run one iteration on an initialized state."""
    enabled = state.params.searches_enabled
    searches = [BUILTIN_SEARCHES[kind]() for kind in SEARCH_ORDER if kind in enabled]
    run_step(Iteration(state, searches + list(user_searches)))
    return state
