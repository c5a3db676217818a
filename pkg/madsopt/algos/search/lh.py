"""
Latin hypercube sampling.

Each coordinate range is split into count equal-width strata; a random
permutation assigns one stratum per sample and the sample is drawn uniformly
inside it.
"""

from typing import List, Optional, Tuple

import numpy as np

from madsopt.algos.mesh import clip_to_bounds
from madsopt.algos.search.base import SearchMethod
from madsopt.algos.state import MadsState
from madsopt.schemas.mesh import MeshState
from madsopt.schemas.params import SearchKind
from madsopt.schemas.problem import ValidatedProblem
from madsopt.schemas.trial import GeneratorTag, TrialPoint
from madsopt.validators.params import default_delta0


def lh_points(lower: np.ndarray, upper: np.ndarray, count: int, rng: np.random.Generator) -> np.ndarray:
    """
    Latin hypercube sample of a finite box.
    
    Args:
        lower: (n,) finite lower bounds
        upper: (n,) finite upper bounds
        count: Number of samples
        rng: Seeded generator
        
    Returns:
        np.ndarray: (count, n) samples with exactly one sample per stratum and
        coordinate
    """
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    n = lower.size
    strata = np.column_stack([rng.permutation(count) for _ in range(n)])
    u = (strata + rng.random((count, n))) / count
    return lower + u * (upper - lower)


def sampling_box(problem: ValidatedProblem, delta0: Optional[float] = None) -> Tuple[np.ndarray, np.ndarray]:
    """
    Finite box used for sampling.
    
    Infinite bounds are replaced by the first starting point plus or minus
    10 times the initial frame size.
    """
    if delta0 is None:
        delta0 = default_delta0(problem)
    x0 = np.asarray(problem.x0[0], dtype=float)
    lower = np.asarray(problem.lower, dtype=float)
    upper = np.asarray(problem.upper, dtype=float)
    lower = np.where(np.isfinite(lower), lower, x0 - 10.0 * delta0)
    upper = np.where(np.isfinite(upper), upper, x0 + 10.0 * delta0)
    return lower, upper


def lh_search_points(
    problem: ValidatedProblem,
    count: int,
    rng: np.random.Generator,
    mesh: Optional[MeshState] = None,
    delta0: Optional[float] = None,
) -> List[TrialPoint]:
    """
    Latin hypercube trial points.
    
    Args:
        problem: Validated problem
        count: Number of points
        rng: Seeded generator
        mesh: When given, points are projected on it (search inside Mads);
            standalone sampling leaves them as drawn
        delta0: Initial frame size used for the box of unbounded coordinates
        
    Returns:
        List[TrialPoint]: Sampled points
    """
    lower, upper = sampling_box(problem, delta0)
    samples = lh_points(lower, upper, count, rng)
    if mesh is None:
        return [
            TrialPoint(point=tuple(float(v) for v in x), generator=GeneratorTag.LH)
            for x in samples
        ]
    trials = []
    for x in samples:
        point = clip_to_bounds(x, mesh, problem.lower, problem.upper)
        if point is not None:
            trials.append(TrialPoint(point=point, generator=GeneratorTag.LH_SEARCH, mesh_snapshot=mesh))
    return trials


class LatinHypercubeSearch(SearchMethod):
    name = "LHSearch"
    kind = SearchKind.LH
    generator = GeneratorTag.LH_SEARCH
    
    def enabled(self, state: MadsState) -> bool:
        return state.free_indices is None
    
    def generate(self, state: MadsState) -> List[TrialPoint]:
        count = state.params.lh_count or state.problem.n
        lower, upper = sampling_box(state.problem, state.params.delta0)
        trials = []
        for x in lh_points(lower, upper, count, state.search_rng):
            t = state.make_trial(x, self.generator)
            if t is not None:
                trials.append(t)
        return trials
