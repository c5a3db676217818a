"""
Run histories, convergence tests, data profiles and convergence envelopes.
"""

import math
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, Field, model_validator

from madsopt.schemas.results import EvalRecord

DEFAULT_TAU = 1e-2


class RunRecord(BaseModel):
    """Best feasible objective value after each evaluation of one run."""
    
    problem: str
    solver: str
    seed: int = 0
    n: int = Field(..., ge=1)
    best_f: List[float] = Field(default_factory=list)
    wall_time: List[float] = Field(default_factory=list)
    elapsed: List[float] = Field(default_factory=list)
    
    @model_validator(mode='after')
    def validate_monotone(self):
        """best_f is a running minimum."""
        if any(b > a for a, b in zip(self.best_f, self.best_f[1:])):
            raise ValueError("best_f must be non-increasing")
        return self
    
    @property
    def eval_count(self) -> int:
        return len(self.best_f)
    
    @property
    def f0(self) -> float:
        """First finite best value (the starting point when it is feasible)."""
        return next((f for f in self.best_f if math.isfinite(f)), math.inf)
    
    @property
    def final_f(self) -> float:
        return self.best_f[-1] if self.best_f else math.inf
    
    @classmethod
    def from_history(
        cls,
        problem: str,
        solver: str,
        seed: int,
        n: int,
        history: Iterable[EvalRecord],
        elapsed: Optional[Sequence[float]] = None,
    ) -> "RunRecord":
        """
        Build a record from an evaluation history.
        
        Args:
            problem: Problem name
            solver: Solver tag
            seed: Seed of the run
            n: Problem dimension
            history: Evaluation records (sorted by eval_index here)
            elapsed: Seconds since the run start at each completion, in
                eval_index order
            
        Returns:
            RunRecord: Running minimum of the feasible objective values
        """
        best = math.inf
        best_f, wall_time = [], []
        for record in sorted(history, key=lambda r: r.eval_index):
            if record.evaluation.is_ok and record.h == 0:
                best = min(best, record.evaluation.f)
            best_f.append(best)
            wall_time.append(record.wall_time)
        return cls(
            problem=problem,
            solver=solver,
            seed=seed,
            n=n,
            best_f=best_f,
            wall_time=wall_time,
            elapsed=list(elapsed) if elapsed is not None else [],
        )


class DataProfile(BaseModel):
    """Fraction of instances solved against the budget."""
    
    solver: str
    tau: float = Field(..., ge=0)
    kappa: List[float]
    fraction: List[float]
    
    @model_validator(mode='after')
    def validate_curve(self):
        """Non-decreasing curve inside [0, 1]."""
        if len(self.kappa) != len(self.fraction):
            raise ValueError("kappa and fraction must have the same length")
        if any(not 0.0 <= v <= 1.0 for v in self.fraction):
            raise ValueError("fractions must lie in [0, 1]")
        if any(b < a for a, b in zip(self.fraction, self.fraction[1:])):
            raise ValueError("fractions must be non-decreasing")
        return self
    
    def at(self, kappa: float) -> float:
        """Curve value at a budget (step function, right-continuous)."""
        value = 0.0
        for k, fraction in zip(self.kappa, self.fraction):
            if k <= kappa:
                value = fraction
        return value


def convergence_eval_count(r: RunRecord, f_L: float, f0: float, tau: float = DEFAULT_TAU) -> Optional[int]:
    """
    First evaluation at which the run counts as solved.
    
    Args:
        r: Run record
        f_L: Best known value of the problem
        f0: Objective value of the starting point
        tau: Tolerance
        
    Returns:
        Optional[int]: Smallest 1-based evaluation index with
        best_f <= f_L + tau (f0 - f_L), None when never reached
    """
    threshold = f_L + tau * (f0 - f_L)
    for index, f in enumerate(r.best_f, start=1):
        if f <= threshold:
            return index
    return None


def best_known_values(records: Iterable[RunRecord], known: Optional[Mapping[str, float]] = None) -> Dict[str, float]:
    """
    f_L per problem: the known optimum when given, else the best value of any run.
    """
    f_L: Dict[str, float] = {}
    for r in records:
        f_L[r.problem] = min(f_L.get(r.problem, math.inf), r.final_f)
    if known:
        f_L.update({name: value for name, value in known.items() if name in f_L})
    return f_L


def _solved_budgets(
    records_by_solver: Mapping[str, Sequence[RunRecord]],
    tau: float,
    known: Optional[Mapping[str, float]],
) -> Dict[str, List[Tuple[RunRecord, Optional[int]]]]:
    all_records = [r for records in records_by_solver.values() for r in records]
    f_L = best_known_values(all_records, known)
    # Same f0 for every solver on an instance: the worst first value
    f0: Dict[Tuple[str, int], float] = {}
    for r in all_records:
        key = (r.problem, r.seed)
        f0[key] = max(f0.get(key, -math.inf), r.f0)
    return {
        solver: [
            (r, convergence_eval_count(r, f_L[r.problem], f0[(r.problem, r.seed)], tau))
            for r in records
        ]
        for solver, records in records_by_solver.items()
    }


def data_profile(
    records_by_solver: Mapping[str, Sequence[RunRecord]],
    tau: float = DEFAULT_TAU,
    kappas: Optional[Sequence[float]] = None,
    known: Optional[Mapping[str, float]] = None,
) -> Dict[str, DataProfile]:
    """
    Data profiles in units of n+1 evaluations.
    
    Every (problem, seed) record is one instance; curve(kappa) is the fraction
    of a solver's instances solved within kappa (n_p + 1) evaluations.
    
    Args:
        records_by_solver: Run records per solver tag
        tau: Tolerance of the convergence test
        kappas: Budgets in simplex gradients (0..max by default)
        known: Known optimal values per problem name
        
    Returns:
        Dict[str, DataProfile]: Profile per solver
    """
    solved = _solved_budgets(records_by_solver, tau, known)
    if kappas is None:
        longest = max(
            (r.eval_count / (r.n + 1) for records in records_by_solver.values() for r in records),
            default=0.0,
        )
        kappas = [float(k) for k in range(int(math.ceil(longest)) + 1)]
    profiles = {}
    for solver, results in solved.items():
        fractions = []
        for kappa in kappas:
            count = sum(1 for r, index in results if index is not None and index <= kappa * (r.n + 1))
            fractions.append(count / len(results) if results else 0.0)
        profiles[solver] = DataProfile(solver=solver, tau=tau, kappa=list(kappas), fraction=fractions)
    return profiles


def time_data_profile(
    records_by_solver: Mapping[str, Sequence[RunRecord]],
    tau: float = DEFAULT_TAU,
    times: Optional[Sequence[float]] = None,
    known: Optional[Mapping[str, float]] = None,
) -> Dict[str, DataProfile]:
    """
    Data profiles against wall-clock seconds.
    
    Records need their elapsed times; the kappa axis holds seconds.
    """
    solved = _solved_budgets(records_by_solver, tau, known)
    if times is None:
        longest = max(
            (r.elapsed[-1] for records in records_by_solver.values() for r in records if r.elapsed),
            default=0.0,
        )
        times = list(np.linspace(0.0, longest, 51)) if longest > 0 else [0.0]
    profiles = {}
    for solver, results in solved.items():
        fractions = []
        for t in times:
            count = sum(
                1 for r, index in results
                if index is not None and r.elapsed and r.elapsed[index - 1] <= t
            )
            fractions.append(count / len(results) if results else 0.0)
        profiles[solver] = DataProfile(solver=solver, tau=tau, kappa=[float(t) for t in times], fraction=fractions)
    return profiles


def envelope_checkpoints(n: int, last: Optional[int] = None) -> List[int]:
    """Checkpoints 1, 1000, 2000, ..., 100 n, then `last` when it lies beyond."""
    checkpoints = [1] + list(range(1000, 100 * n + 1, 1000))
    if last is not None and last > checkpoints[-1]:
        checkpoints.append(last)
    return checkpoints


def convergence_envelope(
    records: Sequence[RunRecord],
    checkpoints: Sequence[int],
) -> List[Tuple[int, float, float, float]]:
    """
    Mean, minimum and maximum best value over seeds at each checkpoint.
    
    Args:
        records: Runs of one problem (at least one)
        checkpoints: Evaluation counts; a run shorter than a checkpoint
            contributes its last value
        
    Returns:
        List of (checkpoint, mean, min, max)
        
    Raises:
        ValueError: If records is empty
    """
    if not records:
        raise ValueError("At least one run record is required")
    rows = []
    for checkpoint in checkpoints:
        values = np.array([
            r.best_f[min(checkpoint, r.eval_count) - 1] if r.eval_count else math.inf
            for r in records
        ])
        rows.append((checkpoint, float(np.mean(values)), float(np.min(values)), float(np.max(values))))
    return rows


def speedup_curve(records: Sequence[RunRecord]) -> Dict[str, List[Tuple[int, float]]]:
    """
    Wall-clock time against evaluation index, per solver.
    
    Returns:
        Dict[str, List[Tuple[int, float]]]: (eval_index, elapsed seconds)
        averaged over the records of each solver
    """
    by_solver: Dict[str, List[RunRecord]] = {}
    for r in records:
        if r.elapsed:
            by_solver.setdefault(r.solver, []).append(r)
    curves = {}
    for solver, runs in by_solver.items():
        length = min(len(r.elapsed) for r in runs)
        mean = np.mean([r.elapsed[:length] for r in runs], axis=0)
        curves[solver] = [(index, float(t)) for index, t in enumerate(mean, start=1)]
    return curves
