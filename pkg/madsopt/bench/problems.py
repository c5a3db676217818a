"""
Built-in analytic test problems and the problem registry.

Problems are looked up by name: `sphere<n>`, `quartic10`, `srosenbr<n>`,
`crescent10`, `disk10`, `snake2`, `pentagon6`, `hs19`. Third-party packages
can register more problems through the `madsopt.problems` entry-point group;
each entry point must load to a callable returning a BenchProblem.
"""

import logging
import math
import re
import time
from importlib.metadata import entry_points
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np
from pydantic import Field

from madsopt.schemas.problem import OutputKind, Problem

logger = logging.getLogger(__name__)

ENTRY_POINT_GROUP = "madsopt.problems"


class BenchProblem(Problem):
    """Analytic problem with an optional best known objective value."""
    
    f_best: Optional[float] = Field(default=None, description="Best known objective value")
    
    @property
    def constrained(self) -> bool:
        return self.m > 0


def rosenbrock(x: Sequence[float]) -> float:
    """
    Rosenbrock function.
    
    Args:
        x: Point with n >= 2 coordinates
        
    Returns:
        float: sum over i of 100 (x_{i+1} - x_i^2)^2 + (1 - x_i)^2
    """
    x = np.asarray(x, dtype=float)
    return float(np.sum(100.0 * (x[1:] - x[:-1] ** 2) ** 2 + (1.0 - x[:-1]) ** 2))


def sphere(n: int = 2) -> BenchProblem:
    """Squared norm, unbounded, started at (1, ..., 1)."""
    return BenchProblem(
        name=f"sphere{n}",
        n=n,
        output_kinds=(OutputKind.OBJ,),
        x0=((1.0,) * n,),
        evaluator=lambda x: [float(np.dot(x, x))],
        f_best=0.0,
    )


def quartic(n: int = 10) -> BenchProblem:
    """Smooth quartic sum of i * (x_i - 1)^4 plus a coupling square term."""
    weights = np.arange(1, n + 1, dtype=float)
    
    def evaluate(x):
        y = np.asarray(x, dtype=float) - 1.0
        return [float(np.sum(weights * y ** 4) + np.sum(y) ** 2)]
    
    return BenchProblem(
        name=f"quartic{n}",
        n=n,
        output_kinds=(OutputKind.OBJ,),
        x0=((0.0,) * n,),
        evaluator=evaluate,
        f_best=0.0,
    )


def make_srosenbr(n: int = 50) -> BenchProblem:
    """
    Bound constrained Rosenbrock problem.
    
    Args:
        n: Dimension (>= 2)
        
    Returns:
        BenchProblem: Bounds [-10, 10]^n, x0 = (0.5, ..., 0.5)
    """
    if n < 2:
        raise ValueError(f"SRosenbr needs n >= 2, got {n}")
    return BenchProblem(
        name=f"srosenbr{n}",
        n=n,
        output_kinds=(OutputKind.OBJ,),
        lower=(-10.0,) * n,
        upper=(10.0,) * n,
        x0=((0.5,) * n,),
        evaluator=lambda x: [rosenbrock(x)],
        f_best=0.0,
    )


def crescent(n: int = 10) -> BenchProblem:
    """Minimize x_n between two spheres of radius 10 centered at +1 and -1."""
    def evaluate(x):
        x = np.asarray(x, dtype=float)
        return [
            float(x[-1]),
            float(np.sum((x - 1.0) ** 2) - 100.0),
            float(100.0 - np.sum((x + 1.0) ** 2)),
        ]
    
    return BenchProblem(
        name=f"crescent{n}",
        n=n,
        output_kinds=(OutputKind.OBJ, OutputKind.PB, OutputKind.PB),
        x0=((float(n),) + (0.0,) * (n - 1),),
        evaluator=evaluate,
    )


def disk(n: int = 10) -> BenchProblem:
    """Minimize x_n inside the ball of squared radius 3."""
    def evaluate(x):
        x = np.asarray(x, dtype=float)
        return [float(x[-1]), float(np.dot(x, x) - 3.0)]
    
    return BenchProblem(
        name=f"disk{n}",
        n=n,
        output_kinds=(OutputKind.OBJ, OutputKind.PB),
        x0=((0.0,) * n,),
        evaluator=evaluate,
        f_best=-math.sqrt(3.0),
    )


def snake() -> BenchProblem:
    """Reach (20, 1) while staying in a thin band along a sine curve."""
    def evaluate(x):
        a, b = float(x[0]), float(x[1])
        return [
            math.sqrt((a - 20.0) ** 2 + (b - 1.0) ** 2),
            math.sin(a) - 0.1 - b,
            b - math.sin(a),
        ]
    
    return BenchProblem(
        name="snake2",
        n=2,
        output_kinds=(OutputKind.OBJ, OutputKind.PB, OutputKind.PB),
        x0=((0.0, -10.0),),
        evaluator=evaluate,
    )


def pentagon() -> BenchProblem:
    """Maximize the area of a triangle whose vertices lie in a regular pentagon."""
    angles = 2.0 * math.pi * np.arange(5) / 5.0
    
    def evaluate(x):
        x1, x2, x3, y1, y2, y3 = (float(v) for v in x)
        f = -0.5 * (x1 * y2 - x2 * y1 + x2 * y3 - x3 * y2 + x3 * y1 - x1 * y3)
        constraints = [
            float(xi * math.cos(a) + yi * math.sin(a) - 1.0)
            for xi, yi in ((x1, y1), (x2, y2), (x3, y3))
            for a in angles
        ]
        return [f, *constraints]
    
    return BenchProblem(
        name="pentagon6",
        n=6,
        output_kinds=(OutputKind.OBJ,) + (OutputKind.PB,) * 15,
        x0=((-1.0, 0.0, 0.0, -1.0, 1.0, 1.0),),
        evaluator=evaluate,
    )


def hs19() -> BenchProblem:
    """Hock-Schittkowski problem 19."""
    def evaluate(x):
        x1, x2 = float(x[0]), float(x[1])
        return [
            (x1 - 10.0) ** 3 + (x2 - 20.0) ** 3,
            -(x1 - 5.0) ** 2 - (x2 - 5.0) ** 2 + 100.0,
            (x2 - 5.0) ** 2 + (x1 - 6.0) ** 2 - 82.81,
        ]
    
    return BenchProblem(
        name="hs19",
        n=2,
        output_kinds=(OutputKind.OBJ, OutputKind.PB, OutputKind.PB),
        lower=(13.0, 0.0),
        upper=(100.0, 100.0),
        x0=((20.1, 5.84),),
        evaluator=evaluate,
        f_best=-6961.81388,
    )


def synthetic_slow_blackbox(base: BenchProblem, delay: float) -> BenchProblem:
    """
    Same problem, each evaluation sleeping for `delay` seconds.
    
    Args:
        base: Problem to wrap
        delay: Seconds per evaluation (>= 0)
        
    Returns:
        BenchProblem: Problem with identical outputs
    """
    if delay < 0:
        raise ValueError(f"delay must be >= 0, got {delay}")
    inner = base.evaluator
    
    def evaluate(x):
        if delay:
            time.sleep(delay)
        return inner(x)
    
    return base.model_copy(update={"name": f"{base.name}-slow", "evaluator": evaluate})


# Factories of the bundled fixed-size problems
BUILTIN_PROBLEMS: Dict[str, Callable[[], BenchProblem]] = {
    "quartic10": lambda: quartic(10),
    "crescent10": lambda: crescent(10),
    "disk10": lambda: disk(10),
    "snake2": snake,
    "pentagon6": pentagon,
    "hs19": hs19,
}

# Families whose dimension is part of the name
_SIZED = {
    "sphere": (sphere, 1),
    "srosenbr": (make_srosenbr, 2),
}

CATALOG_SUITE = "catalog"

SUITES: Dict[str, List[str]] = {
    "unconstrained": ["sphere2", "sphere5", "sphere10", "quartic10", "srosenbr2"],
    "constrained": ["crescent10", "disk10", "snake2", "pentagon6", "hs19"],
    "srosenbr": ["srosenbr50", "srosenbr250"],
}


def plugin_problems() -> Dict[str, Callable[[], BenchProblem]]:
    """Problem factories registered under the madsopt.problems entry points."""
    factories = {}
    for ep in entry_points(group=ENTRY_POINT_GROUP):
        factories[ep.name.lower()] = ep.load
    return factories


def get_problem(name: str) -> BenchProblem:
    """
    Look up a problem by name (case-insensitive).
    
    Args:
        name: Built-in name, sized family name (e.g. srosenbr50) or plugin name
        
    Returns:
        BenchProblem: Fresh problem instance
        
    Raises:
        KeyError: If no bundled or registered problem has this name
    """
    key = name.strip().lower()
    if key in BUILTIN_PROBLEMS:
        return BUILTIN_PROBLEMS[key]()
    match = re.fullmatch(r"([a-z]+)(\d+)", key)
    if match and match.group(1) in _SIZED:
        factory, min_n = _SIZED[match.group(1)]
        n = int(match.group(2))
        if n >= min_n:
            return factory(n)
    plugins = plugin_problems()
    if key in plugins:
        factory = plugins[key]()
        logger.debug("Loaded problem '%s' from plugin", key)
        return factory()
    raise KeyError(f"Unknown problem '{name}'")


def get_suite(name: str) -> List[BenchProblem]:
    """
    Problems of a named suite, or a comma-separated list of problem names.
    
    The "catalog" suite holds every constrained catalog problem that is
    bundled or registered.
    
    Raises:
        KeyError: If a name is unknown
    """
    if name.lower() == CATALOG_SUITE:
        from madsopt.bench.catalog import available_problems
        return available_problems()
    names = SUITES.get(name.lower(), [part for part in name.split(",") if part.strip()])
    return [get_problem(problem_name) for problem_name in names]


def standard_budget(problem: Problem) -> int:
    """400(n+1) evaluations for unconstrained problems, 1000(n+1) otherwise."""
    factor = 1000 if problem.m > 0 else 400
    return factor * (problem.n + 1)
