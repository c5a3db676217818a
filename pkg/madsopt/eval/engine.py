"""
Evaluation engine: dispatches queued trial points to the blackbox.

Workers only run blackbox calls. Cache inserts, barrier classification and
queue mutation all happen in the calling (control) context, in completion
order.
"""

import logging
import math
import numbers
import threading
import time
from concurrent.futures import FIRST_COMPLETED, Executor, Future, ThreadPoolExecutor, wait
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from madsopt.algos.barrier import classify_trial, h_measure, h_values
from madsopt.eval.budget import EvalBudget
from madsopt.eval.cache import EvalCache
from madsopt.eval.queue import EvalQueue, group_dispatch
from madsopt.schemas.barrier import BarrierState
from madsopt.schemas.evaluation import EvalStatus, Evaluation, Point
from madsopt.schemas.problem import Problem
from madsopt.schemas.results import EvalRecord, StopReason, SuccessKind, best_success
from madsopt.schemas.trial import TrialPoint
from madsopt.utils.numeric import parse_float

logger = logging.getLogger(__name__)

RecordListener = Callable[[EvalRecord], None]


def to_evaluation(raw, problem: Problem) -> Evaluation:
    """
    Convert raw blackbox outputs to an Evaluation.
    
    Args:
        raw: Evaluation, one value per output kind in output order, or a bare
            number when the objective is the only output
        problem: Problem defining the output kinds
        
    Returns:
        Evaluation: OK evaluation (NaN mapped to +inf), FAILED when the output
        count is wrong, a value is not numeric or the objective is -inf
    """
    if isinstance(raw, Evaluation):
        return raw
    if isinstance(raw, (numbers.Number, str, np.generic)):
        raw = [raw]
    try:
        values = [parse_float(str(v)) if isinstance(v, str) else float(v) for v in raw]
    except (TypeError, ValueError):
        return Evaluation.failed(problem.m)
    if len(values) != len(problem.output_kinds):
        return Evaluation.failed(problem.m)
    values = [math.inf if math.isnan(v) else v for v in values]
    obj = problem.objective_index
    if values[obj] == -math.inf:
        return Evaluation.failed(problem.m)
    return Evaluation(f=values[obj], c=tuple(values[:obj] + values[obj + 1:]))


class EvalLog:
    """Global evaluation counter and ordered record stream shared by all lanes."""
    
    def __init__(self, start: int = 0, listeners: Sequence[RecordListener] = ()):
        self._lock = threading.Lock()
        self._count = start
        self.listeners: List[RecordListener] = list(listeners)
    
    @property
    def count(self) -> int:
        """Number of evaluations recorded."""
        with self._lock:
            return self._count
    
    def record(self, build: Callable[[int], EvalRecord]) -> EvalRecord:
        """Assign the next evaluation index and emit the record to the listeners."""
        with self._lock:
            self._count += 1
            record = build(self._count)
            for listener in self.listeners:
                listener(record)
            return record


@dataclass
class QueueRun:
    """Outcome of one run_queue call."""
    
    records: List[EvalRecord]
    stop_reason: StopReason
    barrier: BarrierState
    dropped: int = 0
    
    @property
    def success(self) -> SuccessKind:
        """Strongest success observed."""
        return best_success(*(r.success for r in self.records))


@dataclass
class _Completed:
    trial: TrialPoint
    evaluation: Evaluation
    wall_time: float
    finished_at: float = field(default_factory=time.perf_counter)


class EvaluationEngine:
    """Runs the evaluation queue on up to n_workers concurrent blackbox calls."""
    
    def __init__(
        self,
        problem: Problem,
        cache: EvalCache,
        *,
        n_workers: int = 1,
        group_max_size: int = 1,
        executor: Optional[Executor] = None,
        log: Optional[EvalLog] = None,
        lane: int = 0,
        stop_event: Optional[threading.Event] = None,
    ):
        """
        Initialize the engine.
        
        Args:
            problem: Problem with an evaluator
            cache: Evaluation cache (possibly shared between lanes)
            n_workers: Maximum number of groups in flight
            group_max_size: Maximum number of points handed to one blackbox task
            executor: Shared executor; the engine creates its own when omitted
                and n_workers > 1
            log: Shared evaluation log
            lane: Lane identifier stored in the records
            stop_event: Set by a user interrupt to stop dispatching
        """
        if problem.evaluator is None:
            raise ValueError(f"Problem '{problem.name}' has no evaluator")
        self.problem = problem
        self.cache = cache
        self.n_workers = n_workers
        self.group_max_size = group_max_size
        self.log = log if log is not None else EvalLog()
        self.lane = lane
        self.stop_event = stop_event if stop_event is not None else threading.Event()
        self._executor = executor
        self._owns_executor = False
    
    def __enter__(self) -> "EvaluationEngine":
        return self
    
    def __exit__(self, *exc) -> None:
        self.close()
    
    def close(self) -> None:
        """Shut down the executor when the engine created it."""
        if self._owns_executor and self._executor is not None:
            self._executor.shutdown(wait=True)
            self._executor = None
            self._owns_executor = False
    
    @property
    def parallel(self) -> bool:
        """True when evaluations run on worker threads."""
        return self._executor is not None or self.n_workers > 1
    
    def _get_executor(self) -> Executor:
        if self._executor is None:
            self._executor = ThreadPoolExecutor(
                max_workers=self.n_workers, thread_name_prefix=f"madsopt-eval-{self.lane}"
            )
            self._owns_executor = True
        return self._executor
    
    def evaluate(self, x: Point) -> Evaluation:
        """
        Call the blackbox on one point.
        
        Any exception raised by the blackbox becomes a FAILED evaluation.
        """
        try:
            return to_evaluation(self.problem.evaluator(x), self.problem)
        except Exception as exc:  # noqa: BLE001 - blackbox crashes never abort a run
            logger.warning("Blackbox failed on %s: %s", x, exc)
            return Evaluation.failed(self.problem.m)
    
    def _evaluate_batch(self, batch: List[TrialPoint]) -> List[_Completed]:
        """Evaluate one group of points (a single worker task)."""
        batch_evaluator = getattr(self.problem.evaluator, "evaluate_batch", None)
        if batch_evaluator is not None and len(batch) > 1:
            start = time.perf_counter()
            try:
                outputs = batch_evaluator([t.point for t in batch])
                evaluations = [
                    Evaluation.failed(self.problem.m) if raw is None else to_evaluation(raw, self.problem)
                    for raw in outputs
                ]
            except Exception as exc:  # noqa: BLE001
                logger.warning("Batch blackbox failed on %d points: %s", len(batch), exc)
                evaluations = [Evaluation.failed(self.problem.m) for _ in batch]
            if len(evaluations) != len(batch):
                evaluations = [Evaluation.failed(self.problem.m) for _ in batch]
            elapsed = (time.perf_counter() - start) / len(batch)
            return [_Completed(t, e, elapsed) for t, e in zip(batch, evaluations)]
        
        completed = []
        for t in batch:
            start = time.perf_counter()
            e = self.evaluate(t.point)
            completed.append(_Completed(t, e, time.perf_counter() - start))
        return completed
    
    def _next_batch(self, q: EvalQueue, budget: EvalBudget) -> Tuple[List[TrialPoint], bool]:
        """
        Pop the next group of claimable points.
        
        Returns:
            Tuple of (batch, budget_hit)
        """
        batch: List[TrialPoint] = []
        while len(batch) < self.group_max_size and len(q) > 0:
            [[t]] = group_dispatch(q, 1, limit=1)
            if not self.cache.claim(t.point):
                continue
            if not budget.try_consume(1):
                self.cache.release(t.point)
                return batch, True
            batch.append(t)
        return batch, False
    
    def _cached_h(self) -> List[float]:
        points, f, c, ok = self.cache.arrays()
        return list(h_values(c, ok, self.problem))
    
    def _apply(self, done: _Completed, barrier: BarrierState) -> Tuple[EvalRecord, BarrierState]:
        """Cache, classify and log one completed evaluation (control context)."""
        self.cache.insert(done.trial.point, done.evaluation)
        if done.evaluation.status == EvalStatus.FAILED:
            logger.debug("Evaluation failed at %s", done.trial.point)
        kind, barrier = classify_trial(
            barrier, done.trial, done.evaluation, self.problem, cached_h=self._cached_h
        )
        h = h_measure(done.evaluation, self.problem)
        # Built from already validated parts
        record = self.log.record(
            lambda index: EvalRecord.model_construct(
                eval_index=index,
                trial=done.trial,
                evaluation=done.evaluation,
                h=h,
                success=kind,
                wall_time=done.wall_time,
                lane=self.lane,
            )
        )
        return record, barrier
    
    def run_queue(
        self,
        q: EvalQueue,
        barrier: BarrierState,
        budget: EvalBudget,
        opportunism: bool = True,
    ) -> QueueRun:
        """
        Evaluate queued points until the queue empties or a stop criterion holds.
        
        Points are dispatched in queue order. With opportunism, the first full
        success stops new dispatches; evaluations already in flight complete
        and are recorded. The queue is cleared before returning.
        
        Args:
            q: Sorted evaluation queue
            barrier: Barrier state at the start of the round
            budget: Evaluation budget
            opportunism: Stop dispatching after the first full success
            
        Returns:
            QueueRun: Records in completion order, stop reason and final barrier
        """
        records: List[EvalRecord] = []
        stop_reason: Optional[StopReason] = None
        
        def handle(done: _Completed) -> None:
            nonlocal barrier, stop_reason
            record, barrier = self._apply(done, barrier)
            records.append(record)
            if opportunism and record.success == SuccessKind.FULL_SUCCESS and stop_reason is None:
                stop_reason = StopReason.OPPORTUNISTIC_SUCCESS
        
        def should_stop() -> bool:
            nonlocal stop_reason
            if stop_reason is None and self.stop_event.is_set():
                stop_reason = StopReason.USER_INTERRUPT
            return stop_reason is not None
        
        if not self.parallel:
            while not should_stop():
                batch, budget_hit = self._next_batch(q, budget)
                for done in self._evaluate_batch(batch):
                    handle(done)
                if budget_hit:
                    stop_reason = stop_reason or StopReason.BUDGET_EXHAUSTED
                if not batch:
                    break
        else:
            executor = self._get_executor()
            in_flight: Dict[Future, List[TrialPoint]] = {}
            while True:
                while not should_stop() and len(in_flight) < self.n_workers:
                    batch, budget_hit = self._next_batch(q, budget)
                    if batch:
                        in_flight[executor.submit(self._evaluate_batch, batch)] = batch
                    if budget_hit:
                        stop_reason = stop_reason or StopReason.BUDGET_EXHAUSTED
                    if not batch:
                        break
                if not in_flight:
                    break
                finished, _ = wait(list(in_flight), return_when=FIRST_COMPLETED)
                completed: List[_Completed] = []
                for future in finished:
                    in_flight.pop(future)
                    completed.extend(future.result())
                for done in sorted(completed, key=lambda d: d.finished_at):
                    handle(done)
        
        dropped = q.clear()
        if stop_reason is None:
            stop_reason = StopReason.BUDGET_EXHAUSTED if budget.exhausted and dropped else StopReason.QUEUE_EMPTY
        return QueueRun(records=records, stop_reason=stop_reason, barrier=barrier, dropped=dropped)


def run_queue(
    q: EvalQueue,
    cache: EvalCache,
    barrier: BarrierState,
    budget: EvalBudget | int,
    opportunism: bool,
    workers: int,
    problem: Problem,
    group_max_size: int = 1,
) -> QueueRun:
    """
    One-shot form of EvaluationEngine.run_queue.
    
    Args:
        q: Sorted evaluation queue
        cache: Evaluation cache
        barrier: Barrier state
        budget: Remaining evaluations (int) or a shared EvalBudget
        opportunism: Stop dispatching after the first full success
        workers: Number of concurrent evaluation workers
        problem: Problem with an evaluator
        group_max_size: Maximum group size
        
    Returns:
        QueueRun: Records, stop reason and final barrier state
    """
    if isinstance(budget, int):
        budget = EvalBudget(budget)
    with EvaluationEngine(problem, cache, n_workers=workers, group_max_size=group_max_size) as engine:
        return engine.run_queue(q, barrier, budget, opportunism)
