"""
Nelder-Mead search step.

The simplex is made of the n+1 best cached points. One pass produces the
reflection, expansion and both contractions of the worst vertex; these are
projected on the mesh and evaluated like any other search points.
"""

import logging
from typing import List, Optional

import numpy as np

from madsopt.algos.barrier import h_values
from madsopt.algos.search.base import SearchMethod
from madsopt.algos.state import MadsState
from madsopt.errors import DegenerateSimplex
from madsopt.eval.cache import EvalCache
from madsopt.schemas.params import SearchKind
from madsopt.schemas.problem import Problem
from madsopt.schemas.trial import GeneratorTag, TrialPoint

logger = logging.getLogger(__name__)

# Reflection, expansion, outside contraction, inside contraction
NM_COEFFICIENTS = (1.0, 2.0, 0.5, -0.5)


def rank_cached_points(cache: EvalCache, problem: Problem) -> np.ndarray:
    """
    Cached points ordered best first.
    
    Feasible points come first by increasing f, then infeasible points with
    a finite violation by increasing h. Failed points are left out.
    
    Returns:
        np.ndarray: (N, n) ranked points
    """
    points, f, c, ok = cache.arrays()
    if len(f) == 0:
        return points
    h = h_values(c, ok, problem)
    feasible = ok & (h == 0) & np.isfinite(f)
    infeasible = ok & (h > 0) & np.isfinite(h)
    keep = feasible | infeasible
    group = np.where(feasible, 0, 1)
    value = np.where(feasible, f, h)
    order = np.lexsort((np.arange(len(f)), value, group))
    return points[order[keep[order]]]


def nm_candidates(simplex: np.ndarray, coefficients=NM_COEFFICIENTS) -> np.ndarray:
    """
    Reflection-type points of the worst vertex.
    
    Args:
        simplex: (n+1, n) vertices, best first and worst last
        coefficients: Multipliers applied to (centroid - worst)
        
    Returns:
        np.ndarray: One row per coefficient, centroid + a * (centroid - worst)
        
    Raises:
        DegenerateSimplex: If the vertices do not span R^n
    """
    simplex = np.asarray(simplex, dtype=float)
    n = simplex.shape[1]
    edges = simplex[:-1] - simplex[-1]
    if np.linalg.matrix_rank(edges) < n:
        raise DegenerateSimplex(f"Simplex of {len(simplex)} points does not span R^{n}")
    worst = simplex[-1]
    centroid = simplex[:-1].mean(axis=0)
    return np.array([centroid + a * (centroid - worst) for a in coefficients])


def nm_search_points(state: MadsState) -> List[TrialPoint]:
    """
    Nelder-Mead candidates built from the n+1 best cached points.
    
    Args:
        state: Run state
        
    Returns:
        List[TrialPoint]: At most params.nm_max_trials mesh points; empty when
        the cache is too small or the simplex is degenerate
    """
    n = state.problem.n
    ranked = rank_cached_points(state.cache, state.problem)
    if len(ranked) < n + 1:
        return []
    try:
        candidates = nm_candidates(ranked[: n + 1])
    except DegenerateSimplex as exc:
        logger.debug("Nelder-Mead search skipped: %s", exc)
        return []
    trials = []
    for x in candidates[: state.params.nm_max_trials]:
        t = state.make_trial(x, GeneratorTag.NM_SEARCH)
        if t is not None:
            trials.append(t)
    return trials


class NelderMeadSearch(SearchMethod):
    name = "NMSearch"
    kind = SearchKind.NM
    generator = GeneratorTag.NM_SEARCH
    
    def enabled(self, state: MadsState) -> bool:
        return state.free_indices is None
    
    def generate(self, state: MadsState) -> List[TrialPoint]:
        return nm_search_points(state)
