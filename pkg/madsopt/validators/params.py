"""
Default algorithmic parameters for a validated problem.
"""

import math

from madsopt.schemas.params import BarrierKind, OrderingStrategy, Params, SearchKind
from madsopt.schemas.problem import ValidatedProblem
from madsopt.settings import settings

DEFAULT_SEARCHES = frozenset({SearchKind.SPECULATIVE, SearchKind.NM, SearchKind.QUAD})


def default_delta0(problem: ValidatedProblem) -> float:
    """
    Initial frame size: a tenth of the narrowest finite bound range, else 1.
    
    Args:
        problem: Validated problem
        
    Returns:
        float: Initial frame size Delta^0
    """
    ranges = [
        up - lo
        for lo, up in zip(problem.lower, problem.upper)
        if math.isfinite(lo) and math.isfinite(up) and up > lo
    ]
    if not ranges:
        return 1.0
    return 0.1 * min(ranges)


def default_params(problem: ValidatedProblem, **overrides) -> Params:
    """
    Build the default parameters of a problem.
    
    Args:
        problem: Validated problem
        **overrides: Params fields replacing the defaults
        
    Returns:
        Params: Default parameters with overrides applied
    """
    values = {
        "delta0": default_delta0(problem),
        "tau": 0.5,
        "eps_stop": 1e-13,
        "max_bb_eval": 1000 * (problem.n + 1),
        "opportunism": True,
        "ordering": OrderingStrategy.LAST_SUCCESS_DIRECTION,
        "searches_enabled": DEFAULT_SEARCHES,
        "n_workers": settings.default_threads,
        "barrier_kind": BarrierKind.PROGRESSIVE if problem.has_pb_constraints else BarrierKind.EXTREME,
    }
    values.update(overrides)
    return Params(**values)
