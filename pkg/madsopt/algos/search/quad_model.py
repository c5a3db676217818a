"""
Quadratic model search.

A least-squares quadratic model of the objective and of every constraint is
fitted on the cached points near the frame center, then minimized by a
nested Mads run on the model. The nested run has the quadratic model search
disabled, so nesting depth never exceeds two.
"""

import logging
from typing import List, Sequence

import numpy as np

from madsopt.algos.search.base import SearchMethod
from madsopt.algos.state import MadsState
from madsopt.errors import MadsError, SingularFit
from madsopt.schemas.params import BarrierKind, OrderingStrategy, Params, SearchKind
from madsopt.schemas.problem import OutputKind, Problem
from madsopt.schemas.trial import GeneratorTag, TrialPoint
from madsopt.validators.problem import validate_problem

logger = logging.getLogger(__name__)

RIDGE = 1e-10


def n_quadratic_terms(n: int) -> int:
    """Size of the full quadratic basis: (n+1)(n+2)/2."""
    return (n + 1) * (n + 2) // 2


def quad_basis(S: np.ndarray, full: bool = True) -> np.ndarray:
    """
    Monomial basis evaluated at scaled points.
    
    Args:
        S: (N, n) scaled points
        full: Full quadratic basis, else constant + linear + squares
        
    Returns:
        np.ndarray: (N, terms) design matrix
    """
    S = np.atleast_2d(S)
    columns = [np.ones(len(S)), *S.T, *(0.5 * S.T ** 2)]
    if full:
        n = S.shape[1]
        columns.extend(S[:, i] * S[:, j] for i in range(n) for j in range(i + 1, n))
    return np.column_stack(columns)


class QuadraticModel:
    """Quadratic models of several outputs sharing one basis."""
    
    def __init__(self, center: np.ndarray, radius: float, coefficients: np.ndarray, full: bool):
        self.center = np.asarray(center, dtype=float)
        self.radius = radius
        self.coefficients = coefficients
        self.full = full
    
    def predict(self, X: np.ndarray) -> np.ndarray:
        """(N, k) model values at (N, n) points."""
        S = (np.atleast_2d(np.asarray(X, dtype=float)) - self.center) / self.radius
        return quad_basis(S, self.full) @ self.coefficients
    
    def __call__(self, x: Sequence[float]) -> List[float]:
        return [float(v) for v in self.predict(x)[0]]


def fit_quadratic_model(
    X: np.ndarray,
    Y: np.ndarray,
    center: Sequence[float],
    radius: float,
    full: bool = True,
    ridge: float = RIDGE,
) -> QuadraticModel:
    """
    Least-squares fit with ridge damping on the normal equations.
    
    Args:
        X: (N, n) sample points
        Y: (N, k) outputs at the samples
        center: Scaling center
        radius: Scaling radius
        full: Full quadratic basis, else constant + linear + squares
        ridge: Damping added to the diagonal of the normal matrix
        
    Returns:
        QuadraticModel: Fitted model
        
    Raises:
        SingularFit: If the normal equations cannot be solved
    """
    center = np.asarray(center, dtype=float)
    A = quad_basis((np.asarray(X, dtype=float) - center) / radius, full)
    Y = np.asarray(Y, dtype=float).reshape(len(A), -1)
    normal = A.T @ A + ridge * np.eye(A.shape[1])
    try:
        coefficients = np.linalg.solve(normal, A.T @ Y)
    except np.linalg.LinAlgError as exc:
        raise SingularFit(str(exc)) from exc
    if not np.all(np.isfinite(coefficients)):
        raise SingularFit("Model coefficients are not finite")
    return QuadraticModel(center, radius, coefficients, full)


def select_model_samples(state: MadsState):
    """
    Cached points usable for the model fit.
    
    Returns:
        Tuple of (X, Y, full) or None when there are fewer than n+2 samples
    """
    n = state.problem.n
    points, f, c, ok = state.cache.arrays()
    if len(f) == 0:
        return None
    center = np.asarray(state.mesh.center, dtype=float)
    radius = 2.0 * state.mesh.Delta
    Y = np.column_stack([f, c])
    usable = ok & np.all(np.isfinite(Y), axis=1)
    usable &= np.max(np.abs(points - center), axis=1) <= radius
    count = int(usable.sum())
    if count >= n_quadratic_terms(n):
        full = True
    elif count >= n + 2:
        full = False
    else:
        return None
    return points[usable], Y[usable], full


def quad_model_search_points(state: MadsState) -> List[TrialPoint]:
    """
    Minimize a quadratic model of the problem with a nested Mads run.
    
    Args:
        state: Run state
        
    Returns:
        List[TrialPoint]: Nested incumbents projected on the outer mesh; empty
        when there are too few samples or the fit is singular
    """
    from madsopt.algos.mads import Mads
    
    samples = select_model_samples(state)
    if samples is None:
        return []
    X, Y, full = samples
    center = np.asarray(state.mesh.center, dtype=float)
    radius = 2.0 * state.mesh.Delta
    try:
        model = fit_quadratic_model(X, Y, center, radius, full)
    except SingularFit as exc:
        logger.debug("Quadratic model search skipped: %s", exc)
        return []
    
    problem = state.problem
    lower = np.maximum(np.asarray(problem.lower, dtype=float), center - radius)
    upper = np.minimum(np.asarray(problem.upper, dtype=float), center + radius)
    model_problem = validate_problem(Problem(
        name=f"{problem.name}-model",
        n=problem.n,
        output_kinds=(OutputKind.OBJ,) + (OutputKind.PB,) * problem.m,
        lower=tuple(float(v) for v in lower),
        upper=tuple(float(v) for v in upper),
        x0=(state.mesh.center,),
        evaluator=model,
    ))
    model_params = Params(
        delta0=state.mesh.Delta,
        tau=state.params.tau,
        eps_stop=state.mesh.delta,
        max_bb_eval=state.params.quad_max_evals,
        seed=state.params.seed + state.k,
        ordering=OrderingStrategy.LAST_SUCCESS_DIRECTION,
        searches_enabled=frozenset({SearchKind.SPECULATIVE}),
        barrier_kind=BarrierKind.PROGRESSIVE if problem.m > 0 else BarrierKind.EXTREME,
    )
    try:
        result = Mads(model_problem, model_params, depth=state.depth + 1).solve()
    except MadsError as exc:
        logger.debug("Quadratic model search skipped: %s", exc)
        return []
    
    trials = []
    for incumbent in (result.best_feasible, result.best_infeasible):
        if incumbent is None:
            continue
        t = state.make_trial(incumbent.point, GeneratorTag.QUAD_SEARCH)
        if t is not None and all(t.point != other.point for other in trials):
            trials.append(t)
    return trials


class QuadModelSearch(SearchMethod):
    name = "QuadModelSearch"
    kind = SearchKind.QUAD
    generator = GeneratorTag.QUAD_SEARCH
    
    def enabled(self, state: MadsState) -> bool:
        return state.depth == 0 and state.free_indices is None
    
    def generate(self, state: MadsState) -> List[TrialPoint]:
        return quad_model_search_points(state)
