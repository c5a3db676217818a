"""
Mutable state of a Mads run.
"""

import threading
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from madsopt.algos.barrier import new_barrier
from madsopt.algos.mesh import clip_to_bounds, recenter, with_frame
from madsopt.eval.budget import EvalBudget
from madsopt.eval.cache import EvalCache
from madsopt.eval.engine import EvalLog, EvaluationEngine, QueueRun
from madsopt.eval.queue import EvalQueue
from madsopt.schemas.barrier import BarrierState
from madsopt.schemas.evaluation import Point
from madsopt.schemas.mesh import MeshState
from madsopt.schemas.params import Params
from madsopt.schemas.problem import ValidatedProblem
from madsopt.schemas.results import EvalRecord, IterationRecord, MadsResult, StopReason
from madsopt.schemas.trial import GeneratorTag, TrialPoint


@dataclass
class MadsState:
    """Iteration counter, mesh, incumbents and the evaluation handles of a run."""
    
    problem: ValidatedProblem
    params: Params
    cache: EvalCache
    queue: EvalQueue
    engine: EvaluationEngine
    budget: EvalBudget
    barrier: BarrierState
    rng: np.random.Generator
    search_rng: np.random.Generator
    k: int = 0
    mesh: Optional[MeshState] = None
    stop: Optional[StopReason] = None
    last_success_direction: Optional[np.ndarray] = None
    history: List[EvalRecord] = field(default_factory=list)
    iterations: List[IterationRecord] = field(default_factory=list)
    # Poll directions live in these coordinates only (PSD workers)
    free_indices: Optional[Tuple[int, ...]] = None
    # Frame size cap (PSD master mesh)
    max_Delta: Optional[float] = None
    # Nesting depth (quad model search runs a nested Mads)
    depth: int = 0
    poll_generator: GeneratorTag = GeneratorTag.POLL
    
    @property
    def eval_count(self) -> int:
        """Evaluations charged to this run's budget."""
        return self.budget.used
    
    @property
    def stop_event(self) -> threading.Event:
        """Flag set by a user interrupt."""
        return self.engine.stop_event
    
    def recenter_mesh(self) -> MeshState:
        """Move the mesh onto the frame center and recompute delta from Delta."""
        center = self.barrier.frame_center
        self.mesh = with_frame(recenter(self.mesh, center.point), self.mesh.Delta)
        return self.mesh
    
    def make_trial(
        self,
        x: Sequence[float],
        generator: GeneratorTag,
    ) -> Optional[TrialPoint]:
        """
        Turn a raw candidate into a mesh trial point inside the bounds.
        
        Args:
            x: Candidate coordinates
            generator: Step that produced the candidate
            
        Returns:
            Optional[TrialPoint]: Trial point with its generating direction,
            or None when no mesh point inside the bounds is available or the
            candidate is the frame center itself
        """
        x = np.asarray(x, dtype=float)
        if not np.all(np.isfinite(x)):
            return None
        point = clip_to_bounds(x, self.mesh, self.problem.lower, self.problem.upper)
        if point is None or point == self.mesh.center:
            return None
        direction = tuple(float(v) for v in np.asarray(point) - np.asarray(self.mesh.center))
        return TrialPoint(point=point, generator=generator, gen_direction=direction, mesh_snapshot=self.mesh)
    
    def evaluate(self, trials: Sequence[TrialPoint], opportunism: Optional[bool] = None) -> QueueRun:
        """
        Enqueue trial points and run one dispatch round.
        
        Args:
            trials: Trial points (cached or duplicate points are skipped)
            opportunism: Overrides params.opportunism when given
            
        Returns:
            QueueRun: Records of the round; the barrier and history are updated
        """
        for t in trials:
            self.queue.push(t, self.cache)
        if self.last_success_direction is not None:
            self.queue.last_success_direction = tuple(float(v) for v in self.last_success_direction)
        self.queue.sort()
        if opportunism is None:
            opportunism = self.params.opportunism
        outcome = self.engine.run_queue(self.queue, self.barrier, self.budget, opportunism)
        self.barrier = outcome.barrier
        self.history.extend(outcome.records)
        return outcome
    
    def result(self) -> MadsResult:
        """Incumbents and histories of the run so far."""
        return MadsResult(
            best_feasible=self.barrier.best_feasible,
            best_infeasible=self.barrier.best_infeasible,
            history=list(self.history),
            iterations=list(self.iterations),
            stop_reason=self.stop,
            eval_count=self.eval_count,
        )


def new_state(
    problem: ValidatedProblem,
    params: Params,
    *,
    cache: Optional[EvalCache] = None,
    budget: Optional[EvalBudget] = None,
    log: Optional[EvalLog] = None,
    barrier: Optional[BarrierState] = None,
    engine: Optional[EvaluationEngine] = None,
    stop_event: Optional[threading.Event] = None,
    lane: int = 0,
    depth: int = 0,
) -> MadsState:
    """
    Fresh state for a run.
    
    Three generators are derived from params.seed: one for poll directions,
    one for search sampling and one for the RANDOM queue ordering, so
    enabling a search never shifts the poll direction stream.
    
    Args:
        problem: Validated problem
        params: Run parameters
        cache: Shared cache (a new one when omitted)
        budget: Shared budget (max_bb_eval, minus cached points, when omitted)
        log: Shared evaluation log
        barrier: Starting barrier state
        engine: Evaluation engine (built from params when omitted)
        stop_event: User interrupt flag
        lane: Lane identifier
        depth: Nesting depth
        
    Returns:
        MadsState: State at k = 0 with no mesh yet
    """
    cache = cache if cache is not None else EvalCache(problem.m)
    if budget is None:
        budget = EvalBudget(params.max_bb_eval, used=min(len(cache), params.max_bb_eval))
    if engine is None:
        engine = EvaluationEngine(
            problem,
            cache,
            n_workers=params.n_workers,
            group_max_size=params.group_max_size,
            log=log if log is not None else EvalLog(start=len(cache)),
            lane=lane,
            stop_event=stop_event,
        )
    queue = EvalQueue(params.ordering, np.random.default_rng([params.seed, 1]))
    return MadsState(
        problem=problem,
        params=params,
        cache=cache,
        queue=queue,
        engine=engine,
        budget=budget,
        barrier=barrier if barrier is not None else new_barrier(params.barrier_kind),
        rng=np.random.default_rng(params.seed),
        search_rng=np.random.default_rng([params.seed, 2]),
        depth=depth,
    )
