"""
Pytest configuration and shared fixtures.
"""

import threading

import numpy as np
import pytest

from madsopt.schemas.params import OrderingStrategy, Params
from madsopt.schemas.problem import OutputKind, Problem


class CountingBlackbox:
    """Sphere blackbox counting its calls (thread-safe)."""
    
    def __init__(self, fail_at=()):
        self.calls = []
        self.fail_at = set(fail_at)
        self._lock = threading.Lock()
    
    def __call__(self, x):
        with self._lock:
            self.calls.append(tuple(x))
        if tuple(x) in self.fail_at:
            raise RuntimeError("simulated crash")
        return [float(np.dot(x, x))]


@pytest.fixture
def counting_blackbox():
    """Fresh call-counting sphere blackbox."""
    return CountingBlackbox()


@pytest.fixture
def sphere_problem(counting_blackbox):
    """Unbounded 2-D sphere started at (1, 1)."""
    return Problem(
        name="sphere",
        n=2,
        output_kinds=(OutputKind.OBJ,),
        x0=((1.0, 1.0),),
        evaluator=counting_blackbox,
    )


@pytest.fixture
def bounded_problem():
    """Shifted sphere on [-2, 2]^3 with its minimum (1.5, 0, -0.5) inside."""
    target = np.array([1.5, 0.0, -0.5])
    return Problem(
        name="shifted",
        n=3,
        output_kinds=(OutputKind.OBJ,),
        lower=(-2.0, -2.0, -2.0),
        upper=(2.0, 2.0, 2.0),
        x0=((0.0, 0.0, 0.0),),
        evaluator=lambda x: [float(np.sum((np.asarray(x) - target) ** 2))],
    )


@pytest.fixture
def constrained_problem():
    """min x1 + x2 s.t. 1 - x1^2 - x2^2 <= 0 (PB), started infeasible at (0.5, 0.5)."""
    return Problem(
        name="outside-disk",
        n=2,
        output_kinds=(OutputKind.OBJ, OutputKind.PB),
        lower=(-3.0, -3.0),
        upper=(3.0, 3.0),
        x0=((0.5, 0.5),),
        evaluator=lambda x: [x[0] + x[1], 1.0 - x[0] ** 2 - x[1] ** 2],
    )


@pytest.fixture
def make_params():
    """Factory of Params with test-friendly defaults."""
    def factory(**overrides):
        values = {
            "delta0": 1.0,
            "max_bb_eval": 200,
            "seed": 0,
            "ordering": OrderingStrategy.GENERATION_ORDER,
        }
        values.update(overrides)
        return Params(**values)
    return factory
