"""
Standalone algorithm components: Latin hypercube sampling and Nelder-Mead.

Both evaluate through the same engine, cache and barrier bookkeeping as Mads
but use no mesh.
"""

import logging
import math
from typing import List, Optional, Tuple

import numpy as np

from madsopt.algos.barrier import h_measure
from madsopt.algos.search.lh import lh_search_points
from madsopt.algos.state import MadsState, new_state
from madsopt.algos.step import Step, run_step
from madsopt.eval.engine import EvalLog
from madsopt.schemas.evaluation import Evaluation, Point
from madsopt.schemas.params import Params
from madsopt.schemas.problem import Problem, ValidatedProblem
from madsopt.schemas.results import MadsResult, StopReason
from madsopt.schemas.trial import GeneratorTag, TrialPoint
from madsopt.validators.params import default_params
from madsopt.validators.problem import validate_problem

logger = logging.getLogger(__name__)

# Reflection, expansion, contraction and shrink coefficients
NM_ALPHA = 1.0
NM_GAMMA = 2.0
NM_BETA = 0.5
NM_SHRINK = 0.5

Score = Tuple[int, float]


class BudgetSpent(Exception):
    """Raised internally when a standalone run has no evaluation left."""


def score(e: Evaluation, problem: ValidatedProblem) -> Score:
    """Order key: feasible points by f, then infeasible ones by h, failed last."""
    h = h_measure(e, problem)
    if h == 0 and math.isfinite(e.f):
        return (0, e.f)
    if math.isfinite(h):
        return (1, h)
    return (2, 0.0)


class LatinHypercube(Step):
    """LH component: start generates the sample, run evaluates it."""
    
    name = "LH"
    
    def __init__(self, state: MadsState, count: int, parent: Optional[Step] = None):
        super().__init__(parent)
        self.state = state
        self.count = count
        self.trials: List[TrialPoint] = []
    
    def start(self) -> None:
        self.trials = lh_search_points(
            self.state.problem, self.count, self.state.search_rng, delta0=self.state.params.delta0
        )
    
    def run(self) -> None:
        outcome = self.state.evaluate(self.trials, opportunism=False)
        self.state.stop = outcome.stop_reason
    
    def end(self) -> None:
        best = self.state.barrier.frame_center
        logger.info(
            "LH: %d points evaluated, best f=%s",
            len(self.state.history),
            best.f if best else None,
        )


def lh_run(
    problem: Problem,
    count: int,
    seed: int = 0,
    params: Optional[Params] = None,
    log: Optional[EvalLog] = None,
) -> MadsResult:
    """
    Evaluate a Latin hypercube sample of the problem.
    
    Args:
        problem: Problem with an evaluator
        count: Sample size (also the evaluation budget)
        seed: Generator seed
        params: Optional parameters (delta0 sizes the box of unbounded coordinates)
        log: Shared evaluation log
        
    Returns:
        MadsResult: Incumbents and evaluation history
    """
    problem = validate_problem(problem)
    if params is None:
        params = default_params(problem, seed=seed, max_bb_eval=count)
    state = new_state(problem, params, log=log)
    try:
        run_step(LatinHypercube(state, count))
    finally:
        state.engine.close()
    return state.result()


class NelderMead(Step):
    """Nelder-Mead simplex algorithm evaluated through the engine."""
    
    name = "NM"
    
    def __init__(self, state: MadsState, parent: Optional[Step] = None):
        super().__init__(parent)
        self.state = state
        self.simplex: List[Tuple[np.ndarray, Score]] = []
    
    def evaluate(self, x: np.ndarray) -> Tuple[np.ndarray, Score]:
        problem = self.state.problem
        x = np.clip(x, problem.lower, problem.upper)
        point: Point = tuple(float(v) for v in x)
        e = self.state.cache.lookup(point)
        if e is None:
            if self.state.budget.exhausted:
                raise BudgetSpent()
            self.state.evaluate([TrialPoint(point=point, generator=GeneratorTag.NM)], opportunism=False)
            e = self.state.cache.lookup(point)
            if e is None:
                raise BudgetSpent()
        return np.asarray(point), score(e, problem)
    
    def start(self) -> None:
        problem = self.state.problem
        step = self.state.params.delta0
        x0 = np.asarray(problem.x0[0], dtype=float)
        self.simplex = [self.evaluate(x0)]
        for i in range(problem.n):
            x = x0.copy()
            x[i] = x[i] + step if x[i] + step <= problem.upper[i] else x[i] - step
            self.simplex.append(self.evaluate(x))
    
    def run(self) -> None:
        state = self.state
        tolerance = max(state.params.eps_stop, 1e-12)
        while True:
            self.simplex.sort(key=lambda vertex: vertex[1])
            best = self.simplex[0][0]
            if max(np.max(np.abs(x - best)) for x, _ in self.simplex) < tolerance:
                state.stop = StopReason.MESH_TOLERANCE
                return
            if state.params.max_iterations is not None and state.k >= state.params.max_iterations:
                state.stop = StopReason.MAX_ITERATIONS
                return
            state.k += 1
            
            worst, worst_score = self.simplex[-1]
            centroid = np.mean([x for x, _ in self.simplex[:-1]], axis=0)
            
            xr, r_score = self.evaluate(centroid + NM_ALPHA * (centroid - worst))
            if self.simplex[0][1] <= r_score < self.simplex[-2][1]:
                self.simplex[-1] = (xr, r_score)
                continue
            if r_score < self.simplex[0][1]:
                xe, e_score = self.evaluate(centroid + NM_GAMMA * (centroid - worst))
                self.simplex[-1] = (xe, e_score) if e_score < r_score else (xr, r_score)
                continue
            xc, c_score = self.evaluate(centroid + NM_BETA * (centroid - worst))
            if c_score < worst_score:
                self.simplex[-1] = (xc, c_score)
                continue
            
            # Shrink toward the best vertex
            x1 = self.simplex[0][0]
            self.simplex = [self.simplex[0]] + [
                self.evaluate(x1 + NM_SHRINK * (x - x1)) for x, _ in self.simplex[1:]
            ]
    
    def end(self) -> None:
        best = self.state.barrier.frame_center
        logger.info(
            "NM stopped (%s) after %d evaluations, best f=%s",
            self.state.stop.value if self.state.stop else None,
            self.state.eval_count,
            best.f if best else None,
        )


def nelder_mead_run(problem: Problem, params: Params, log: Optional[EvalLog] = None) -> MadsResult:
    """
    Standalone Nelder-Mead run.
    
    The initial simplex is x0 plus delta0 along each coordinate. The run
    stops when the simplex diameter drops below eps_stop or the budget is
    spent.
    
    Args:
        problem: Problem with an evaluator
        params: Run parameters (delta0, eps_stop, max_bb_eval, max_iterations)
        log: Shared evaluation log
        
    Returns:
        MadsResult: Incumbents and evaluation history
    """
    problem = validate_problem(problem)
    state = new_state(problem, params, log=log)
    step = NelderMead(state)
    try:
        run_step(step)
    except BudgetSpent:
        state.stop = StopReason.BUDGET_EXHAUSTED
        step.end()
    finally:
        state.engine.close()
    return state.result()
