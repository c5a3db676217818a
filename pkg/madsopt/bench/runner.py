"""
Benchmark runner: solves problem instances with tagged solvers and writes CSVs.
"""

import csv
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Callable, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

from madsopt.algos.mads import mads_run
from madsopt.algos.psd import psd_run
from madsopt.algos.standalone import lh_run, nelder_mead_run
from madsopt.bench.problems import BenchProblem, standard_budget, synthetic_slow_blackbox
from madsopt.bench.records import (
    DEFAULT_TAU,
    DataProfile,
    RunRecord,
    convergence_envelope,
    data_profile,
    envelope_checkpoints,
    speedup_curve,
)
from madsopt.errors import OutputError
from madsopt.eval.engine import EvalLog
from madsopt.schemas.params import Params
from madsopt.schemas.results import EvalRecord, MadsResult
from madsopt.utils.numeric import format_float
from madsopt.validators.params import default_params
from madsopt.validators.problem import validate_problem

logger = logging.getLogger(__name__)

Solver = Callable[[BenchProblem, Params, EvalLog], MadsResult]


def _mads(problem: BenchProblem, params: Params, log: EvalLog) -> MadsResult:
    return mads_run(problem, params, log=log)


def _mads_poll(problem: BenchProblem, params: Params, log: EvalLog) -> MadsResult:
    return mads_run(problem, params.model_copy(update={"searches_enabled": frozenset()}), log=log)


def _mads_mega(problem: BenchProblem, params: Params, log: EvalLog) -> MadsResult:
    return mads_run(problem, params.model_copy(update={"mega_search_poll": True}), log=log)


def _psd(problem: BenchProblem, params: Params, log: EvalLog) -> MadsResult:
    n_workers = max(params.n_workers, params.psd_nmt)
    params = params.model_copy(update={"psd_enabled": True, "n_workers": n_workers})
    return psd_run(problem, params, log=log)


def _nm(problem: BenchProblem, params: Params, log: EvalLog) -> MadsResult:
    return nelder_mead_run(problem, params, log=log)


def _lh(problem: BenchProblem, params: Params, log: EvalLog) -> MadsResult:
    return lh_run(problem, params.max_bb_eval, params.seed, params=params, log=log)


SOLVERS: Dict[str, Solver] = {
    "mads": _mads,
    "mads-poll": _mads_poll,
    "mads-mega": _mads_mega,
    "psd": _psd,
    "nm": _nm,
    "lh": _lh,
}


def run_instance(
    problem: BenchProblem,
    solver: str,
    seed: int = 0,
    budget: Optional[int] = None,
    **overrides,
) -> Tuple[RunRecord, MadsResult]:
    """
    Solve one (problem, seed) instance.
    
    Args:
        problem: Bench problem
        solver: Solver tag (see SOLVERS)
        seed: Seed of the run
        budget: Evaluation budget (standard budget of the problem by default)
        **overrides: Params fields replacing the defaults
        
    Returns:
        Tuple[RunRecord, MadsResult]: Record with completion times and the raw result
        
    Raises:
        KeyError: If the solver tag is unknown
    """
    if solver not in SOLVERS:
        raise KeyError(f"Unknown solver '{solver}', expected one of {sorted(SOLVERS)}")
    validated = validate_problem(problem)
    budget = budget if budget is not None else standard_budget(problem)
    params = default_params(validated, seed=seed, max_bb_eval=budget, **overrides)
    
    started = time.perf_counter()
    elapsed: Dict[int, float] = {}
    
    def stamp(record: EvalRecord) -> None:
        elapsed[record.eval_index] = time.perf_counter() - started
    
    result = SOLVERS[solver](problem, params, EvalLog(listeners=[stamp]))
    record = RunRecord.from_history(
        problem.name,
        solver,
        seed,
        problem.n,
        result.history,
        elapsed=[elapsed[index] for index in sorted(elapsed)],
    )
    logger.info(
        "%s on %s (seed %d): %d evaluations, best f=%s in %.2fs",
        solver, problem.name, seed, record.eval_count, record.final_f, time.perf_counter() - started,
    )
    return record, result


def run_suite(
    problems: Sequence[BenchProblem],
    solvers: Sequence[str],
    seeds: Iterable[int],
    budget: Optional[int] = None,
    jobs: int = 1,
) -> Dict[str, List[RunRecord]]:
    """
    Solve every (problem, seed) instance with every solver.
    
    Args:
        problems: Bench problems
        solvers: Solver tags
        seeds: Seeds (one instance per problem and seed)
        budget: Evaluation budget (standard budgets by default)
        jobs: Instances solved concurrently
        
    Returns:
        Dict[str, List[RunRecord]]: Records per solver, in (problem, seed) order
    """
    unknown = [s for s in solvers if s not in SOLVERS]
    if unknown:
        raise KeyError(f"Unknown solvers {unknown}, expected a subset of {sorted(SOLVERS)}")
    seeds = list(seeds)
    tasks = [(problem, solver, seed) for solver in solvers for problem in problems for seed in seeds]
    
    def solve(task) -> RunRecord:
        problem, solver, seed = task
        return run_instance(problem, solver, seed, budget)[0]
    
    if jobs > 1:
        with ThreadPoolExecutor(jobs, thread_name_prefix="madsopt-bench") as pool:
            records = list(pool.map(solve, tasks))
    else:
        records = [solve(task) for task in tasks]
    by_solver: Dict[str, List[RunRecord]] = {solver: [] for solver in solvers}
    for (_, solver, _), record in zip(tasks, records):
        by_solver[solver].append(record)
    return by_solver


def measure_speedup(
    problem: BenchProblem,
    delay: float,
    workers: int,
    budget: int,
    seed: int = 0,
) -> float:
    """
    Wall-clock ratio of a parallel run against a single-worker run.
    
    Both runs use MegaSearchPoll on a slowed-down copy of the problem.
    
    Args:
        problem: Bench problem
        delay: Seconds added to each evaluation
        workers: Evaluation workers of the parallel run
        budget: Evaluation budget of both runs
        seed: Seed of both runs
        
    Returns:
        float: Parallel wall-clock divided by sequential wall-clock
    """
    slow = synthetic_slow_blackbox(problem, delay)
    
    def wall_clock(n_workers: int) -> float:
        started = time.perf_counter()
        run_instance(slow, "mads-mega", seed, budget, n_workers=n_workers)
        return time.perf_counter() - started
    
    sequential = wall_clock(1)
    parallel = wall_clock(workers)
    logger.info("Speedup with %d workers: %.2fs vs %.2fs sequential", workers, parallel, sequential)
    return parallel / sequential


def _write_rows(path: Path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(header)
            writer.writerows(rows)
    except OSError as exc:
        raise OutputError(path, str(exc)) from exc
    return path


def write_history_csv(path: Path, records: Iterable[RunRecord]) -> Path:
    """history.csv: solver,problem,seed,eval_index,best_f for every run."""
    rows = [
        (r.solver, r.problem, r.seed, index, format_float(best))
        for r in records
        for index, best in enumerate(r.best_f, start=1)
    ]
    return _write_rows(path, ("solver", "problem", "seed", "eval_index", "best_f"), rows)


def write_profile_csv(path: Path, profiles: Mapping[str, DataProfile]) -> Path:
    """profile.csv: solver,kappa,fraction."""
    rows = [
        (solver, format_float(kappa), format_float(fraction))
        for solver, profile in profiles.items()
        for kappa, fraction in zip(profile.kappa, profile.fraction)
    ]
    return _write_rows(path, ("solver", "kappa", "fraction"), rows)


def write_envelope_csv(path: Path, envelope: Sequence[Tuple[int, float, float, float]]) -> Path:
    """envelope.csv: checkpoint,mean,min,max."""
    rows = [(c, format_float(mean), format_float(lo), format_float(hi)) for c, mean, lo, hi in envelope]
    return _write_rows(path, ("checkpoint", "mean", "min", "max"), rows)


def write_speedup_csv(path: Path, curves: Mapping[str, Sequence[Tuple[int, float]]]) -> Path:
    """speedup.csv: solver,eval_index,seconds."""
    rows = [(solver, index, format_float(t)) for solver, curve in curves.items() for index, t in curve]
    return _write_rows(path, ("solver", "eval_index", "seconds"), rows)


def write_bench_outputs(
    out_dir: Path,
    records_by_solver: Mapping[str, Sequence[RunRecord]],
    tau: float = DEFAULT_TAU,
    known: Optional[Mapping[str, float]] = None,
) -> List[Path]:
    """
    Write the history, profile and speedup CSVs plus one envelope CSV per
    (solver, problem).
    
    Args:
        out_dir: Output directory (created when missing)
        records_by_solver: Records per solver tag
        tau: Tolerance of the data profiles
        known: Known optimal values per problem name
        
    Returns:
        List[Path]: Written files
    """
    out_dir = Path(out_dir)
    all_records = [r for records in records_by_solver.values() for r in records]
    written = [
        write_history_csv(out_dir / "history.csv", all_records),
        write_profile_csv(out_dir / "profile.csv", data_profile(records_by_solver, tau, known=known)),
        write_speedup_csv(out_dir / "speedup.csv", speedup_curve(all_records)),
    ]
    for solver, records in records_by_solver.items():
        by_problem: Dict[str, List[RunRecord]] = {}
        for r in records:
            by_problem.setdefault(r.problem, []).append(r)
        for problem, runs in by_problem.items():
            checkpoints = envelope_checkpoints(runs[0].n, last=max(r.eval_count for r in runs))
            written.append(write_envelope_csv(
                out_dir / f"envelope-{solver}-{problem}.csv",
                convergence_envelope(runs, checkpoints),
            ))
    return written
