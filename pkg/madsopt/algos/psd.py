"""
Parallel space decomposition (PSD-MADS).

Lane 0 is the pollster: each session evaluates a single full-space poll
point. The other main lanes are workers: each session runs Mads on a random
subspace of n_s variables, the other variables fixed at the incumbent. The
coordinating thread merges session results into the global incumbents and
updates the master mesh once enough variables have been explored. Lanes
share one cache and one evaluation budget.
"""

import logging
import threading
from concurrent.futures import FIRST_COMPLETED, Executor, Future, ThreadPoolExecutor, wait
from dataclasses import dataclass, field, replace
from typing import Dict, FrozenSet, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, Field, model_validator

from madsopt.algos.barrier import classify_trial, h_values
from madsopt.algos.mads import Initialization, Mads
from madsopt.algos.mesh import enlarge, initial_mesh, recenter, refine
from madsopt.algos.poll import poll_points
from madsopt.algos.state import MadsState, new_state
from madsopt.algos.step import run_step
from madsopt.eval.budget import EvalBudget
from madsopt.eval.cache import EvalCache
from madsopt.eval.engine import EvalLog, EvaluationEngine
from madsopt.schemas.barrier import BarrierState
from madsopt.schemas.evaluation import Point
from madsopt.schemas.mesh import MeshState
from madsopt.schemas.params import Params, SearchKind
from madsopt.schemas.problem import Problem, ValidatedProblem
from madsopt.schemas.results import (
    EvalRecord,
    IterationRecord,
    MadsResult,
    StopReason,
    SuccessKind,
    best_success,
)
from madsopt.schemas.trial import GeneratorTag
from madsopt.validators.problem import validate_problem

logger = logging.getLogger(__name__)

POLLSTER_LANE = 0


class SubspaceAssignment(BaseModel):
    """Variables a worker session may move; the others stay at fixed_values."""
    
    indices: Tuple[int, ...] = Field(..., min_length=1)
    fixed_values: Point
    
    model_config = {
        "frozen": True
    }
    
    @model_validator(mode='after')
    def validate_indices(self):
        """Indices are distinct and inside the dimension."""
        n = len(self.fixed_values)
        if len(set(self.indices)) != len(self.indices):
            raise ValueError("Subspace indices must be distinct")
        if any(not 0 <= i < n for i in self.indices):
            raise ValueError(f"Subspace indices must lie in [0, {n})")
        return self


class MasterMesh(BaseModel):
    """Full-space mesh bounding every lane mesh, updated on coverage."""
    
    mesh: MeshState
    coverage: FrozenSet[int] = Field(default_factory=frozenset)
    coverage_threshold: int = Field(..., ge=1)
    max_Delta: Optional[float] = Field(default=None, gt=0)
    success: bool = False
    updates: int = 0
    
    model_config = {
        "frozen": True
    }


@dataclass
class SessionResult:
    """Outcome of one pollster or worker session."""
    
    lane: int
    success: SuccessKind
    barrier: BarrierState
    records: List[EvalRecord] = field(default_factory=list)
    indices: Optional[Tuple[int, ...]] = None
    stop_reason: Optional[StopReason] = None


def select_subspace(rng: np.random.Generator, n: int, n_s: int, incumbent: Sequence[float]) -> SubspaceAssignment:
    """
    Draw n_s distinct variables uniformly without replacement.
    
    Args:
        rng: Coordinator generator
        n: Dimension
        n_s: Subspace dimension
        incumbent: Values of the fixed variables
        
    Returns:
        SubspaceAssignment: Sorted indices and the incumbent as fixed values
        
    Raises:
        ValueError: If n_s is not in [1, n]
    """
    if not 1 <= n_s <= n:
        raise ValueError(f"Subspace dimension must be in [1, {n}], got {n_s}")
    indices = tuple(sorted(int(i) for i in rng.choice(n, size=n_s, replace=False)))
    return SubspaceAssignment(indices=indices, fixed_values=tuple(float(v) for v in incumbent))


def _lane_state(
    problem: ValidatedProblem,
    params: Params,
    barrier: BarrierState,
    cache: EvalCache,
    budget: EvalBudget,
    log: EvalLog,
    lane: int,
    executor: Optional[Executor],
    n_secondary: int,
    stop_event: Optional[threading.Event],
) -> MadsState:
    engine = EvaluationEngine(
        problem,
        cache,
        n_workers=max(1, n_secondary),
        group_max_size=params.group_max_size,
        executor=executor,
        log=log,
        lane=lane,
        stop_event=stop_event,
    )
    return new_state(problem, params, cache=cache, budget=budget, barrier=barrier, engine=engine, lane=lane)


def pollster_run(
    problem: ValidatedProblem,
    params: Params,
    master: MasterMesh,
    barrier: BarrierState,
    cache: EvalCache,
    budget: EvalBudget,
    log: EvalLog,
    seed: int,
    *,
    lane: int = POLLSTER_LANE,
    executor: Optional[Executor] = None,
    n_secondary: int = 0,
    stop_event: Optional[threading.Event] = None,
) -> SessionResult:
    """
    Evaluate the first poll point, in queue order, of the master frame.
    
    Args:
        problem: Validated problem
        params: Run parameters (ordering)
        master: Master mesh
        barrier: Global incumbents at session start
        cache: Shared cache
        budget: Global budget (one evaluation is charged at most)
        log: Shared evaluation log
        seed: Seed of the poll direction
        
    Returns:
        SessionResult: Success kind and lane incumbents
    """
    lane_params = params.model_copy(update={"seed": seed, "n_workers": 1})
    state = _lane_state(
        problem, lane_params, barrier, cache, budget.child(1), log, lane, executor, n_secondary, stop_event
    )
    state.poll_generator = GeneratorTag.PSD_POLLSTER
    state.mesh = recenter(master.mesh, barrier.frame_center.point)
    try:
        outcome = state.evaluate(poll_points(state))
    finally:
        state.engine.close()
    return SessionResult(
        lane=lane,
        success=outcome.success,
        barrier=state.barrier,
        records=outcome.records,
        stop_reason=outcome.stop_reason,
    )


def worker_run(
    problem: ValidatedProblem,
    params: Params,
    assignment: SubspaceAssignment,
    master: MasterMesh,
    barrier: BarrierState,
    cache: EvalCache,
    budget: EvalBudget,
    log: EvalLog,
    seed: int,
    *,
    lane: int = 1,
    executor: Optional[Executor] = None,
    n_secondary: int = 0,
    stop_event: Optional[threading.Event] = None,
) -> SessionResult:
    """
    Mads session on a subspace, bounded by the master mesh.
    
    The session starts at the master frame size, never enlarges past it,
    and may refine below it. It stops when params.psd_worker_budget
    evaluations are spent or its frame drops below params.eps_stop. Only
    the poll and the speculative search run.
    
    Args:
        problem: Validated problem
        params: Run parameters
        assignment: Free variables of the session
        master: Master mesh
        barrier: Global incumbents at session start
        cache: Shared cache
        budget: Global budget
        log: Shared evaluation log
        seed: Seed of the session's poll directions
        
    Returns:
        SessionResult: Strongest success of the session and lane incumbents
    """
    lane_params = params.model_copy(update={
        "seed": seed,
        "delta0": master.mesh.Delta,
        "max_bb_eval": params.psd_worker_budget,
        "max_iterations": None,
        "searches_enabled": params.searches_enabled & {SearchKind.SPECULATIVE},
        "mega_search_poll": False,
        "n_workers": 1,
        "psd_enabled": False,
    })
    session_budget = budget.child(params.psd_worker_budget)
    state = _lane_state(
        problem, lane_params, barrier, cache, session_budget, log, lane, executor, n_secondary, stop_event
    )
    state.free_indices = assignment.indices
    state.max_Delta = master.mesh.Delta
    state.poll_generator = GeneratorTag.PSD_WORKER
    state.mesh = initial_mesh(barrier.frame_center.point, master.mesh.Delta, master.mesh.tau)
    result = Mads(problem, lane_params, state=state).solve()
    success = best_success(*(it.success for it in result.iterations))
    return SessionResult(
        lane=lane,
        success=success,
        barrier=state.barrier,
        records=result.history,
        indices=assignment.indices,
        stop_reason=result.stop_reason,
    )


def master_update(
    master: MasterMesh,
    session_results: Sequence[SessionResult],
    center: Optional[Point] = None,
) -> MasterMesh:
    """
    Accumulate coverage and update the master mesh at the threshold.
    
    Args:
        master: Current master mesh
        session_results: Completed sessions
        center: New master center (global frame center)
        
    Returns:
        MasterMesh: Enlarged (up to max_Delta) after a full success since the
        last update, refined otherwise, once coverage reaches the threshold;
        unchanged sizes before
    """
    coverage = set(master.coverage)
    success = master.success
    for result in session_results:
        if result.indices is not None:
            coverage.update(result.indices)
        success = success or result.success == SuccessKind.FULL_SUCCESS
    mesh = master.mesh if center is None else recenter(master.mesh, center)
    
    if len(coverage) < master.coverage_threshold:
        return master.model_copy(update={"mesh": mesh, "coverage": frozenset(coverage), "success": success})
    
    mesh = enlarge(mesh, master.max_Delta) if success else refine(mesh)
    logger.info(
        "Master mesh %s: Delta %s -> %s",
        "enlarged" if mesh.Delta > master.mesh.Delta else "refined", master.mesh.Delta, mesh.Delta,
    )
    return master.model_copy(update={
        "mesh": mesh,
        "coverage": frozenset(),
        "success": False,
        "updates": master.updates + 1,
    })


def improves_incumbents(before: BarrierState, after: BarrierState) -> bool:
    """True when a merge replaced the best feasible point, or the best infeasible one while none is feasible."""
    if after.best_feasible != before.best_feasible:
        return True
    return after.best_feasible is None and after.best_infeasible != before.best_infeasible


def merge_barrier(
    global_barrier: BarrierState,
    lane_barrier: BarrierState,
    problem: ValidatedProblem,
    cache: EvalCache,
) -> BarrierState:
    """Fold a lane's incumbents into the global incumbents."""
    def cached_h():
        _, _, c, ok = cache.arrays()
        return h_values(c, ok, problem)
    
    merged = global_barrier
    for incumbent in (lane_barrier.best_feasible, lane_barrier.best_infeasible):
        if incumbent is None:
            continue
        _, merged = classify_trial(merged, incumbent.point, incumbent.evaluation, problem, cached_h=cached_h)
    return merged


def psd_run(
    problem: Problem,
    params: Params,
    n_mt: Optional[int] = None,
    n_s: Optional[int] = None,
    *,
    cache: Optional[EvalCache] = None,
    log: Optional[EvalLog] = None,
    stop_event: Optional[threading.Event] = None,
) -> MadsResult:
    """
    Run PSD-MADS.
    
    Args:
        problem: Problem with an evaluator
        params: Run parameters (max_bb_eval is the global budget)
        n_mt: Main lanes: one pollster and n_mt - 1 workers (params.psd_nmt by default)
        n_s: Worker subspace dimension (params.psd_ns by default)
        cache: Shared cache
        log: Shared evaluation log
        stop_event: User interrupt flag
        
    Returns:
        MadsResult: Global incumbents, merged history in evaluation order and
        one iteration record per master mesh update
        
    Raises:
        ValueError: If n_mt < 2
    """
    problem = validate_problem(problem)
    n_mt = n_mt if n_mt is not None else params.psd_nmt
    n_s = min(n_s if n_s is not None else params.psd_ns, problem.n)
    if n_mt < 2:
        raise ValueError(f"PSD needs at least 2 main lanes, got {n_mt}")
    n_t = max(params.n_workers, n_mt)
    n_secondary = n_t - n_mt
    
    cache = cache if cache is not None else EvalCache(problem.m)
    budget = EvalBudget(params.max_bb_eval, used=min(len(cache), params.max_bb_eval))
    log = log if log is not None else EvalLog(start=len(cache))
    stop_event = stop_event if stop_event is not None else threading.Event()
    
    init_state = new_state(
        problem,
        params.model_copy(update={"n_workers": 1}),
        cache=cache,
        budget=budget,
        log=log,
        stop_event=stop_event,
    )
    run_step(Initialization(init_state))
    history: List[EvalRecord] = list(init_state.history)
    if init_state.stop is not None:
        return init_state.result()
    
    barrier = init_state.barrier
    master = MasterMesh(
        mesh=initial_mesh(barrier.frame_center.point, params.delta0, params.tau),
        coverage_threshold=params.psd_coverage_threshold or problem.n,
        max_Delta=params.delta0,
    )
    rng = np.random.default_rng(params.seed)
    iterations: List[IterationRecord] = []
    evaluated_since_update = 0
    logger.info(
        "PSD-MADS on '%s' (n=%d): 1 pollster, %d workers on %d variables, %d secondary threads",
        problem.name, problem.n, n_mt - 1, n_s, n_secondary,
    )
    
    def stop_reason() -> Optional[StopReason]:
        if budget.exhausted:
            return StopReason.BUDGET_EXHAUSTED
        if master.mesh.Delta < params.eps_stop:
            return StopReason.MESH_TOLERANCE
        if stop_event.is_set():
            return StopReason.USER_INTERRUPT
        if params.max_iterations is not None and master.updates >= params.max_iterations:
            return StopReason.MAX_ITERATIONS
        return None
    
    secondary = ThreadPoolExecutor(n_secondary, thread_name_prefix="madsopt-secondary") if n_secondary else None
    shared = dict(cache=cache, budget=budget, log=log, executor=secondary,
                  n_secondary=n_secondary, stop_event=stop_event)
    
    def launch(pool: ThreadPoolExecutor, lane: int) -> Future:
        seed = int(rng.integers(2 ** 32))
        if lane == POLLSTER_LANE:
            return pool.submit(pollster_run, problem, params, master, barrier, seed=seed, lane=lane, **shared)
        assignment = select_subspace(rng, problem.n, n_s, barrier.frame_center.point)
        return pool.submit(worker_run, problem, params, assignment, master, barrier, seed=seed, lane=lane, **shared)
    
    try:
        with ThreadPoolExecutor(n_mt, thread_name_prefix="madsopt-lane") as lanes:
            running: Dict[Future, int] = {launch(lanes, lane): lane for lane in range(n_mt)}
            while running:
                finished, _ = wait(list(running), return_when=FIRST_COMPLETED)
                for future in finished:
                    lane = running.pop(future)
                    result = future.result()
                    history.extend(result.records)
                    evaluated_since_update += len(result.records)
                    merged = merge_barrier(barrier, result.barrier, problem, cache)
                    if not improves_incumbents(barrier, merged):
                        # Lane successes over stale incumbents do not count for the master
                        result = replace(result, success=SuccessKind.FAILURE)
                    barrier = merged
                    previous = master
                    master = master_update(master, [result], center=barrier.frame_center.point)
                    if master.updates != previous.updates:
                        enlarged = master.mesh.Delta >= previous.mesh.Delta
                        iterations.append(IterationRecord(
                            k=previous.updates,
                            Delta=previous.mesh.Delta,
                            delta=previous.mesh.delta,
                            success=SuccessKind.FULL_SUCCESS if enlarged else SuccessKind.FAILURE,
                            frame_center=barrier.frame_center.point,
                            n_evaluated=evaluated_since_update,
                        ))
                        evaluated_since_update = 0
                    if stop_reason() is None:
                        running[launch(lanes, lane)] = lane
    finally:
        if secondary is not None:
            secondary.shutdown(wait=True)
    
    reason = stop_reason() or StopReason.QUEUE_EMPTY
    best = barrier.frame_center
    logger.info(
        "PSD-MADS stopped (%s) after %d evaluations and %d master updates, best f=%s h=%s",
        reason.value, budget.used, master.updates, best.f, best.h,
    )
    return MadsResult(
        best_feasible=barrier.best_feasible,
        best_infeasible=barrier.best_infeasible,
        history=sorted(history, key=lambda r: r.eval_index),
        iterations=iterations,
        stop_reason=reason,
        eval_count=budget.used,
    )
