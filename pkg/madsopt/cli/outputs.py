"""
Run outputs: merged history stream, cache file and solution line.
"""

import csv
import logging
import sys
import threading
from pathlib import Path
from typing import Optional, TextIO

from madsopt.cli.cache_file import save_cache
from madsopt.errors import OutputError
from madsopt.eval.cache import EvalCache
from madsopt.schemas.results import EvalRecord, MadsResult
from madsopt.utils.numeric import format_float

logger = logging.getLogger(__name__)


def history_header(n: int) -> list:
    return ["eval_index", "f", "h", "best_f"] + [f"x_{i}" for i in range(1, n + 1)]


class OutputStream:
    """
    Ordered history writer.
    
    Registered as an EvalLog listener: records arrive with consecutive
    eval_index values whichever worker produced them, and each row is
    written whole under the stream lock.
    """
    
    def __init__(self, path: Optional[Path | str], n: int, append: bool = False):
        """
        Open the history file.
        
        Args:
            path: History CSV (None discards rows)
            n: Dimension
            append: Keep existing rows (restarted runs)
        
        Raises:
            OutputError: If the file cannot be opened
        """
        self.path = Path(path) if path is not None else None
        self.n = n
        self.best_f = float("inf")
        self.rows = 0
        self._lock = threading.Lock()
        self._handle: Optional[TextIO] = None
        self._writer = None
        if self.path is None:
            return
        try:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            fresh = not append or not self.path.exists() or self.path.stat().st_size == 0
            self._handle = self.path.open("w" if not append else "a", newline="", encoding="utf-8")
        except OSError as exc:
            raise OutputError(self.path, exc.strerror or str(exc)) from exc
        self._writer = csv.writer(self._handle)
        if fresh:
            self._writer.writerow(history_header(n))
    
    def __enter__(self) -> "OutputStream":
        return self
    
    def __exit__(self, *exc) -> None:
        self.close()
    
    def __call__(self, record: EvalRecord) -> None:
        """Append one evaluation."""
        with self._lock:
            if record.evaluation.is_ok and record.h == 0:
                self.best_f = min(self.best_f, record.evaluation.f)
            self.rows += 1
            if self._writer is None:
                return
            self._writer.writerow(
                [
                    record.eval_index,
                    format_float(record.evaluation.f),
                    format_float(record.h),
                    format_float(self.best_f),
                ]
                + [format_float(v) for v in record.point]
            )
            self._handle.flush()
    
    def close(self) -> None:
        with self._lock:
            if self._handle is not None:
                self._handle.close()
                self._handle = None
                self._writer = None


def solution_line(result: MadsResult) -> str:
    """`x* | f | h` of the best point, or a note when nothing was evaluated."""
    best = result.best
    if best is None:
        return "no solution"
    coords = " ".join(format_float(v) for v in best.point)
    return f"{coords} | {format_float(best.f)} | {format_float(best.h)}"


def write_outputs(
    result: MadsResult,
    cache: EvalCache,
    cache_path: Optional[Path | str] = None,
    out: Optional[TextIO] = None,
) -> None:
    """
    Final outputs of a run.
    
    Args:
        result: Run result
        cache: Evaluation cache
        cache_path: Cache file, written atomically when given
        out: Stream receiving the solution line (stdout by default)
    
    Raises:
        OutputError: If the cache file cannot be written
    """
    if cache_path is not None:
        save_cache(cache_path, cache)
        logger.info("Cache written to %s (%d points)", cache_path, len(cache))
    print(solution_line(result), file=out if out is not None else sys.stdout)
