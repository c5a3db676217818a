"""
The `solve` command: run Mads (or PSD-MADS) on a parameter file.
"""

import logging
import signal
import threading
from pathlib import Path
from typing import Optional, TextIO

from madsopt.algos.mads import Mads
from madsopt.algos.psd import psd_run
from madsopt.algos.restart import load_snapshot, save_snapshot, snapshot, state_path, warm_restart
from madsopt.cli.cache_file import load_cache
from madsopt.cli.hot_restart import HotRestart
from madsopt.cli.outputs import OutputStream, write_outputs
from madsopt.cli.params_file import build_params, build_problem, read_param_file
from madsopt.cli.process_evaluator import ProcessEvaluator
from madsopt.eval.cache import EvalCache
from madsopt.eval.engine import EvalLog
from madsopt.schemas.results import MadsResult
from madsopt.settings import settings

logger = logging.getLogger(__name__)


class Checkpointer:
    """Iteration callback saving a restart snapshot every few iterations."""
    
    def __init__(self, cache_path: Optional[Path], every: Optional[int] = None):
        self.cache_path = cache_path
        self.every = every or settings.checkpoint_every
        self.saved = 0
    
    def __call__(self, mads: Mads) -> None:
        if self.cache_path is None or mads.state.k % self.every:
            return
        save_snapshot(snapshot(mads.state), self.cache_path)
        self.saved += 1
        logger.debug("Checkpoint at iteration %d (%d evaluations)", mads.state.k, mads.state.eval_count)


def solve_file(
    param_path: Path | str,
    *,
    seed: Optional[int] = None,
    threads: Optional[int] = None,
    cache_file: Optional[Path | str] = None,
    csv_dir: Optional[Path | str] = None,
    out: Optional[TextIO] = None,
    handle_signals: bool = False,
) -> MadsResult:
    """
    Solve the problem of a parameter file.
    
    When the cache file exists the run continues from it: from the restart
    snapshot when its sidecar exists, else by replaying the cached points.
    
    Args:
        param_path: Parameter file
        seed: Overrides SEED
        threads: Overrides NB_THREADS
        cache_file: Overrides CACHE_FILE
        csv_dir: Directory of history.csv when HISTORY_FILE is not set
        out: Stream receiving the solution line
        handle_signals: Install the interrupt and hot restart handlers
            (main thread only)
    
    Returns:
        MadsResult: Result of the run
    
    Raises:
        ParamFileError: On an invalid parameter file
        ProblemError: On an invalid problem
        BlackboxSpawnError: If the blackbox executable cannot be launched
        OutputError: If a run file cannot be read or written
    """
    overrides = {}
    if seed is not None:
        overrides["seed"] = seed
    if threads is not None:
        overrides["n_workers"] = threads
    
    pf = read_param_file(param_path)
    problem = build_problem(pf)
    params = build_params(pf, problem, **overrides)
    if isinstance(problem.evaluator, ProcessEvaluator):
        problem.evaluator.check()
    
    cache_path = Path(cache_file) if cache_file is not None else pf.cache_file
    history_path = pf.history_file
    if history_path is None and csv_dir is not None:
        history_path = Path(csv_dir) / "history.csv"
    resuming = cache_path is not None and cache_path.exists()
    
    stop_event = threading.Event()
    hot_restart = HotRestart(param_path, **overrides)
    checkpointer = Checkpointer(cache_path)
    
    def on_iteration(mads: Mads) -> None:
        hot_restart(mads)
        checkpointer(mads)
    
    previous_sigint = None
    if handle_signals:
        previous_sigint = signal.signal(signal.SIGINT, lambda signum, frame: stop_event.set())
        hot_restart.install()
    
    stream = OutputStream(history_path, problem.n, append=resuming)
    try:
        if resuming and not params.psd_enabled and state_path(cache_path).exists():
            snap = load_snapshot(cache_path)
            log = EvalLog(start=snap.eval_count, listeners=[stream])
            state = warm_restart(snap, params, problem, log=log, stop_event=stop_event)
            mads = Mads(problem, params, state=state, on_iteration=on_iteration)
            result = mads.solve()
            cache = state.cache
        else:
            cache = load_cache(cache_path, problem.n, problem.m) if resuming else EvalCache(problem.m)
            if resuming:
                logger.info("Resuming from %s (%d cached points)", cache_path, len(cache))
            log = EvalLog(start=len(cache), listeners=[stream])
            if params.psd_enabled:
                result = psd_run(problem, params, cache=cache, log=log, stop_event=stop_event)
                mads = None
            else:
                mads = Mads(problem, params, cache=cache, log=log, on_iteration=on_iteration, stop_event=stop_event)
                result = mads.solve()
        if cache_path is not None and mads is not None:
            save_snapshot(snapshot(mads.state), cache_path)
        write_outputs(result, cache, cache_path if mads is None else None, out=out)
    finally:
        stream.close()
        if handle_signals:
            hot_restart.uninstall()
            signal.signal(signal.SIGINT, previous_sigint or signal.SIG_DFL)
    return result
