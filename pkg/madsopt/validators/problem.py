"""
Problem validation utilities for madsopt.

This module checks the invariants of a problem definition that cannot be
expressed as single-field constraints on the schema.
"""

import math

from madsopt.errors import BoundViolation, DimensionMismatch, NoObjective
from madsopt.schemas.problem import OutputKind, Problem, ValidatedProblem


def _expand_bound(bound, n: int, default: float, name: str):
    """Return the bound vector, defaulted to +/-inf when absent."""
    if bound is None:
        return (default,) * n
    if len(bound) != n:
        raise DimensionMismatch(f"{name} bound has {len(bound)} entries, expected {n}")
    return tuple(float(v) for v in bound)


def validate_problem(problem: Problem) -> ValidatedProblem:
    """
    Check a problem definition and default its bounds.
    
    Args:
        problem: Problem to validate
        
    Returns:
        ValidatedProblem: Problem with bounds set to +/-inf where absent
        
    Raises:
        NoObjective: If output_kinds does not contain exactly one OBJ
        DimensionMismatch: If a starting point or bound has the wrong length
        BoundViolation: If lower > upper or a starting point is outside the bounds
    """
    if problem.output_kinds.count(OutputKind.OBJ) != 1:
        raise NoObjective(
            f"Exactly one OBJ output is required, got {[k.value for k in problem.output_kinds]}"
        )
    
    n = problem.n
    lower = _expand_bound(problem.lower, n, -math.inf, "lower")
    upper = _expand_bound(problem.upper, n, math.inf, "upper")
    
    for i, (lo, up) in enumerate(zip(lower, upper)):
        if math.isnan(lo) or math.isnan(up) or lo > up:
            raise BoundViolation(f"Invalid bounds for coordinate {i}: [{lo}, {up}]")
    
    for x0 in problem.x0:
        if len(x0) != n:
            raise DimensionMismatch(f"Starting point {x0} has {len(x0)} coordinates, expected {n}")
        if not all(math.isfinite(v) for v in x0):
            raise BoundViolation(f"Starting point {x0} has non-finite coordinates")
        for i, v in enumerate(x0):
            if not lower[i] <= v <= upper[i]:
                raise BoundViolation(
                    f"Starting point {x0} violates bounds on coordinate {i}: "
                    f"{v} not in [{lower[i]}, {upper[i]}]"
                )
    
    if isinstance(problem, ValidatedProblem):
        return problem
    
    return ValidatedProblem(
        name=problem.name,
        n=n,
        output_kinds=problem.output_kinds,
        lower=lower,
        upper=upper,
        x0=problem.x0,
        evaluator=problem.evaluator,
    )
