"""
Run snapshots, warm restarts and resumption from a cache file.

A snapshot is persisted as the cache file plus a JSON sidecar
(`<cache file>.state.json`) holding the mesh, the incumbents, the iteration
counter and the generator states.
"""

import json
import logging
import threading
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, Field

from madsopt.algos.barrier import new_barrier
from madsopt.algos.mads import Mads, replay_cache
from madsopt.algos.mesh import with_frame
from madsopt.algos.state import MadsState, new_state
from madsopt.cli.cache_file import atomic_write_text, read_cache_file, write_cache_file
from madsopt.errors import IncompatibleParams, OutputError
from madsopt.eval.budget import EvalBudget
from madsopt.eval.cache import EvalCache
from madsopt.eval.engine import EvalLog
from madsopt.schemas.barrier import BarrierState
from madsopt.schemas.evaluation import Evaluation, Point
from madsopt.schemas.mesh import MeshState
from madsopt.schemas.params import Params
from madsopt.schemas.problem import OutputKind, Problem
from madsopt.schemas.results import MadsResult, StopReason
from madsopt.validators.problem import validate_problem

logger = logging.getLogger(__name__)

STATE_SUFFIX = ".state.json"


class RestartSnapshot(BaseModel):
    """Serializable state of a Mads run."""
    
    problem_name: str
    n: int
    output_kinds: Tuple[OutputKind, ...]
    params: Params
    k: int
    mesh: Optional[MeshState] = None
    barrier: BarrierState
    last_success_direction: Optional[Point] = None
    rng_state: Dict[str, Any]
    search_rng_state: Dict[str, Any]
    queue_rng_state: Dict[str, Any]
    stop_reason: Optional[StopReason] = None
    eval_count: int = 0
    cache: List[Tuple[Point, Evaluation]] = Field(default_factory=list)


def snapshot(state: MadsState) -> RestartSnapshot:
    """Capture a run state between iterations."""
    direction = state.last_success_direction
    return RestartSnapshot(
        problem_name=state.problem.name,
        n=state.problem.n,
        output_kinds=state.problem.output_kinds,
        params=state.params,
        k=state.k,
        mesh=state.mesh,
        barrier=state.barrier,
        last_success_direction=None if direction is None else tuple(float(v) for v in direction),
        rng_state=state.rng.bit_generator.state,
        search_rng_state=state.search_rng.bit_generator.state,
        queue_rng_state=state.queue.rng.bit_generator.state,
        stop_reason=state.stop,
        eval_count=state.eval_count,
        cache=state.cache.items(),
    )


def state_path(cache_path: Path | str) -> Path:
    """Sidecar path of a cache file."""
    cache_path = Path(cache_path)
    return cache_path.with_name(cache_path.name + STATE_SUFFIX)


def _json_default(value):
    if isinstance(value, (set, frozenset)):
        return sorted(value)
    raise TypeError(f"Object of type {type(value).__name__} is not JSON serializable")


def save_snapshot(snap: RestartSnapshot, cache_path: Path | str) -> None:
    """
    Write a snapshot as a cache file and its JSON sidecar.
    
    Raises:
        OutputError: If either file cannot be written
    """
    write_cache_file(cache_path, snap.cache)
    # json (not model_dump_json) keeps infinite h_max as Infinity
    payload = json.dumps(snap.model_dump(exclude={"cache"}), default=_json_default, indent=2)
    atomic_write_text(state_path(cache_path), payload)


def load_snapshot(cache_path: Path | str) -> RestartSnapshot:
    """
    Read a snapshot written by save_snapshot.
    
    Raises:
        OutputError: If the sidecar is missing or unreadable
    """
    sidecar = state_path(cache_path)
    try:
        payload = json.loads(sidecar.read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        raise OutputError(sidecar, str(exc)) from exc
    snap = RestartSnapshot.model_validate(payload)
    return snap.model_copy(update={"cache": read_cache_file(cache_path, snap.n, len(snap.output_kinds) - 1)})


def _check_compatible(snap: RestartSnapshot, problem: Problem) -> None:
    if problem.n != snap.n:
        raise IncompatibleParams(f"Dimension changed from {snap.n} to {problem.n}")
    if tuple(problem.output_kinds) != tuple(snap.output_kinds):
        raise IncompatibleParams("Output kinds changed")


def warm_restart(
    snap: RestartSnapshot,
    new_params: Params,
    problem: Problem,
    log: Optional[EvalLog] = None,
    stop_event: Optional[threading.Event] = None,
) -> MadsState:
    """
    Rebuild a run state from a snapshot with new parameters.
    
    The cache is restored intact and the stop reason cleared. When the
    snapshot stopped on the mesh tolerance, Delta is reset to
    max(Delta, delta0 / 10) so that progress can resume.
    
    Args:
        snap: Snapshot of a stopped (or checkpointed) run
        new_params: Parameters of the continuation
        problem: Problem of the run (its evaluator is used)
        log: Evaluation log (continues the snapshot numbering when omitted)
        stop_event: User interrupt flag
        
    Returns:
        MadsState: State to pass to Mads(..., state=...)
        
    Raises:
        IncompatibleParams: If the dimension or the output kinds changed
    """
    _check_compatible(snap, problem)
    problem = validate_problem(problem)
    cache = EvalCache(problem.m)
    for x, e in snap.cache:
        cache.insert(x, e)
    
    state = new_state(
        problem,
        new_params,
        cache=cache,
        budget=EvalBudget(new_params.max_bb_eval, used=snap.eval_count),
        log=log if log is not None else EvalLog(start=snap.eval_count),
        barrier=snap.barrier,
        stop_event=stop_event,
    )
    if new_params.barrier_kind != snap.barrier.kind:
        state.barrier = new_barrier(new_params.barrier_kind)
        replay_cache(state)
    
    state.rng.bit_generator.state = snap.rng_state
    state.search_rng.bit_generator.state = snap.search_rng_state
    state.queue.rng.bit_generator.state = snap.queue_rng_state
    state.k = snap.k
    state.mesh = snap.mesh
    if snap.last_success_direction is not None:
        state.last_success_direction = np.asarray(snap.last_success_direction, dtype=float)
    
    if state.mesh is not None and snap.stop_reason == StopReason.MESH_TOLERANCE:
        state.mesh = with_frame(state.mesh, max(state.mesh.Delta, new_params.delta0 / 10))
    logger.info(
        "Warm restart of '%s' at iteration %d with %d cached evaluations",
        problem.name, state.k, len(cache),
    )
    return state


def resume_from_cache(problem: Problem, params: Params, cache: EvalCache, **kwargs) -> MadsResult:
    """
    Warm start from a cache alone (the run was killed before a snapshot).
    
    The incumbents are rebuilt by replaying the cache; cached evaluations
    count toward params.max_bb_eval.
    
    Args:
        problem: Problem with an evaluator
        params: Run parameters
        cache: Cache of the interrupted run
        **kwargs: Forwarded to Mads
        
    Returns:
        MadsResult: Result of the continued run
    """
    return Mads(problem, params, cache=cache, **kwargs).solve()


def restart_run(
    snap: RestartSnapshot,
    new_params: Params,
    problem: Problem,
    log: Optional[EvalLog] = None,
    stop_event: Optional[threading.Event] = None,
    **kwargs,
) -> MadsResult:
    """Warm restart a snapshot and run it to completion."""
    state = warm_restart(snap, new_params, problem, log=log, stop_event=stop_event)
    return Mads(state.problem, new_params, state=state, **kwargs).solve()
