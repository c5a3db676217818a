"""
Constraint handling: extreme barrier, violation measure and incumbent updates.

The progressive barrier keeps two incumbents (best feasible, least infeasible)
and a threshold h_max above which infeasible points are rejected. The update
rules are a simplified variant of the full progressive barrier: the frame
center is the feasible incumbent when one exists, else the infeasible one.
"""

import itertools
import math
from typing import Callable, Iterable, Optional, Sequence, Tuple, Union

import numpy as np

from madsopt.schemas.barrier import BarrierState, Incumbent
from madsopt.schemas.evaluation import Evaluation, Point
from madsopt.schemas.params import BarrierKind
from madsopt.schemas.problem import OutputKind, Problem
from madsopt.schemas.results import SuccessKind
from madsopt.schemas.trial import TrialPoint


def extreme_barrier(e: Evaluation, problem: Problem) -> float:
    """
    Objective under the extreme barrier.
    
    Args:
        e: Evaluation of a point of the problem
        problem: Problem the evaluation belongs to
        
    Returns:
        float: f when the evaluation succeeded and every constraint is <= 0, else +inf
    """
    if not e.is_ok or any(cj > 0 for cj in e.c):
        return math.inf
    return e.f


def h_measure(e: Evaluation, problem: Problem) -> float:
    """
    Aggregated constraint violation.
    
    Args:
        e: Evaluation of a point of the problem
        problem: Problem the evaluation belongs to
        
    Returns:
        float: Sum of squared PB violations; +inf on failure or on any EB violation
    """
    if not e.is_ok:
        return math.inf
    h = 0.0
    for kind, cj in zip(problem.constraint_kinds, e.c):
        if cj <= 0:
            continue
        if kind == OutputKind.EB:
            return math.inf
        h += cj * cj
    return h


def h_values(c: np.ndarray, ok: np.ndarray, problem: Problem) -> np.ndarray:
    """
    Vectorized h_measure over a batch of evaluations.
    
    Args:
        c: (N, m) constraint values
        ok: (N,) boolean mask of successful evaluations
        problem: Problem the evaluations belong to
        
    Returns:
        np.ndarray: (N,) violation measures
    """
    h = np.zeros(len(ok))
    if problem.m > 0 and len(ok) > 0:
        kinds = np.array([kind == OutputKind.EB for kind in problem.constraint_kinds])
        violation = np.maximum(c, 0.0)
        h = np.sum(violation[:, ~kinds] ** 2, axis=1)
        if kinds.any():
            h[np.any(violation[:, kinds] > 0, axis=1)] = math.inf
    h[~ok] = math.inf
    return h


def new_barrier(kind: BarrierKind) -> BarrierState:
    """Barrier with no incumbent and h_max = +inf."""
    return BarrierState(kind=kind)


def update_hmax(
    b: BarrierState,
    kind: SuccessKind,
    previous_h: Optional[float] = None,
    cached_h: Iterable[float] = (),
) -> BarrierState:
    """
    Update the violation threshold after an infeasible incumbent change.
    
    Args:
        b: Barrier state holding the new incumbents
        kind: Success kind of the trial that produced them
        previous_h: h of the infeasible incumbent before the trial (+inf when
            there was none); None when the trial was feasible
        cached_h: h values of every cached point
        
    Returns:
        BarrierState: State with the updated h_max
    """
    if b.kind == BarrierKind.EXTREME or previous_h is None or b.best_infeasible is None:
        return b
    
    if kind == SuccessKind.FULL_SUCCESS:
        return b.model_copy(update={"h_max": b.best_infeasible.h})
    
    if kind == SuccessKind.PARTIAL_SUCCESS:
        below = [h for h in cached_h if 0 < h < previous_h]
        h_max = max(below, default=b.best_infeasible.h)
        return b.model_copy(update={"h_max": max(h_max, b.best_infeasible.h)})
    
    return b


def _classify_extreme(b: BarrierState, point: Point, e: Evaluation, problem: Problem):
    f_omega = extreme_barrier(e, problem)
    incumbent_f = b.best_feasible.f if b.best_feasible is not None else math.inf
    if f_omega < incumbent_f:
        incumbent = Incumbent(point=point, evaluation=e, h=0.0)
        return SuccessKind.FULL_SUCCESS, b.model_copy(update={"best_feasible": incumbent})
    return SuccessKind.FAILURE, b


def classify_trial(
    b: BarrierState,
    t: TrialPoint | Sequence[float],
    e: Evaluation,
    problem: Problem,
    cached_h: Union[Iterable[float], Callable[[], Iterable[float]]] = (),
) -> Tuple[SuccessKind, BarrierState]:
    """
    Classify an evaluated trial point and update the incumbents.
    
    Under the extreme barrier this is exactly f_Omega(t) < f_Omega(incumbent).
    Under the progressive barrier a feasible point succeeds when it improves
    the feasible incumbent; an infeasible point with h <= h_max is a full
    success when it improves both h and f of the infeasible incumbent and a
    partial success when it only improves h.
    
    Args:
        b: Current barrier state
        t: Trial point (or bare coordinates)
        e: Its evaluation
        problem: Problem the evaluation belongs to
        cached_h: h values of the cached points (or a callable returning them),
            only read when a partial success lowers h_max
        
    Returns:
        Tuple[SuccessKind, BarrierState]: Classification and updated state
    """
    point = t.point if isinstance(t, TrialPoint) else tuple(t)
    
    if b.kind == BarrierKind.EXTREME:
        return _classify_extreme(b, point, e, problem)
    
    h = h_measure(e, problem)
    if h == math.inf:
        return SuccessKind.FAILURE, b
    
    if h == 0:
        if b.best_feasible is None or e.f < b.best_feasible.f:
            incumbent = Incumbent(point=point, evaluation=e, h=0.0)
            return SuccessKind.FULL_SUCCESS, b.model_copy(update={"best_feasible": incumbent})
        return SuccessKind.FAILURE, b
    
    if h > b.h_max:
        return SuccessKind.FAILURE, b
    
    current = b.best_infeasible
    if current is None:
        kind = SuccessKind.FULL_SUCCESS if b.best_feasible is None else SuccessKind.PARTIAL_SUCCESS
        previous_h = math.inf
    elif h < current.h and e.f < current.f:
        kind = SuccessKind.FULL_SUCCESS
        previous_h = current.h
    elif h < current.h:
        kind = SuccessKind.PARTIAL_SUCCESS
        previous_h = current.h
    else:
        return SuccessKind.FAILURE, b
    
    incumbent = Incumbent(point=point, evaluation=e, h=h)
    updated = b.model_copy(update={"best_infeasible": incumbent})
    if kind == SuccessKind.PARTIAL_SUCCESS:
        cached = cached_h() if callable(cached_h) else cached_h
        return kind, update_hmax(updated, kind, previous_h, itertools.chain(cached, [h]))
    return kind, update_hmax(updated, kind, previous_h)
