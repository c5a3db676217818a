"""
External blackbox executables.

Protocol: for each evaluation the coordinates are written, space separated
with full precision, as one line of a temporary input file. The executable
is called as `<bb_path> <input-file>` and must print the blackbox outputs on
standard output, in BB_OUTPUT_TYPE order. Only the first 1+m
whitespace-separated tokens are read; `inf` and `nan` are accepted (NaN
counts as +inf). A nonzero exit status, a timeout or unreadable output makes
the evaluation FAILED.

In batch mode (GROUP_MAX_SIZE > 1) the input file holds one point per line
and the executable prints one output line per point, in the same order.
"""

import logging
import os
import subprocess
import tempfile
from pathlib import Path
from typing import List, Optional, Sequence

from madsopt.errors import BlackboxSpawnError
from madsopt.schemas.evaluation import Evaluation, Point
from madsopt.settings import settings
from madsopt.utils.numeric import format_float, parse_float

logger = logging.getLogger(__name__)


def format_input_line(x: Point) -> str:
    """Coordinates as shortest round-trip decimals."""
    return " ".join(format_float(v) for v in x)


def parse_output_tokens(text: str, count: int) -> Optional[List[float]]:
    """
    First `count` numeric tokens of a blackbox output.
    
    Returns:
        Optional[List[float]]: Values, or None when fewer tokens are present
        or a token is not a number
    """
    tokens = text.split()[:count]
    if len(tokens) < count:
        return None
    try:
        return [parse_float(token) for token in tokens]
    except ValueError:
        return None


class ProcessEvaluator:
    """Evaluator running one blackbox process per call."""
    
    def __init__(
        self,
        bb_path: Path | str,
        output_count: int,
        timeout: Optional[float] = None,
        workdir: Optional[Path | str] = None,
    ):
        """
        Initialize the evaluator.
        
        Args:
            bb_path: Blackbox executable
            output_count: Number of outputs (1 + m)
            timeout: Seconds before a call is abandoned (settings by default)
            workdir: Directory of the temporary input files
        """
        self.bb_path = Path(bb_path)
        self.output_count = output_count
        self.timeout = timeout if timeout is not None else settings.blackbox_timeout
        self.workdir = Path(workdir) if workdir is not None else None
    
    def check(self) -> None:
        """
        Verify the executable can be launched.
        
        Raises:
            BlackboxSpawnError: If the file is missing or not executable
        """
        if not self.bb_path.is_file():
            raise BlackboxSpawnError(f"Blackbox executable not found: {self.bb_path}")
        if not os.access(self.bb_path, os.X_OK):
            raise BlackboxSpawnError(f"Blackbox is not executable: {self.bb_path}")
    
    @property
    def failed(self) -> Evaluation:
        return Evaluation.failed(self.output_count - 1)
    
    def _call(self, lines: Sequence[str]) -> Optional[str]:
        """Run the executable on an input file; stdout, or None on failure."""
        fd, input_path = tempfile.mkstemp(prefix="madsopt-x-", suffix=".txt", dir=self.workdir)
        try:
            with os.fdopen(fd, "w") as handle:
                handle.write("\n".join(lines) + "\n")
            completed = subprocess.run(
                [str(self.bb_path), input_path],
                capture_output=True,
                text=True,
                timeout=self.timeout,
                check=False,
            )
        except subprocess.TimeoutExpired:
            logger.warning("Blackbox %s timed out after %ss", self.bb_path, self.timeout)
            return None
        except OSError as exc:
            logger.warning("Blackbox %s could not be run: %s", self.bb_path, exc)
            return None
        finally:
            try:
                os.unlink(input_path)
            except OSError:
                pass
        if completed.returncode != 0:
            logger.warning(
                "Blackbox %s exited with status %d: %s",
                self.bb_path, completed.returncode, completed.stderr.strip()[:200],
            )
            return None
        return completed.stdout
    
    def __call__(self, x: Point):
        """Evaluate one point; raw outputs in BB_OUTPUT_TYPE order, or FAILED."""
        stdout = self._call([format_input_line(x)])
        values = parse_output_tokens(stdout, self.output_count) if stdout is not None else None
        return values if values is not None else self.failed
    
    def evaluate_batch(self, points: Sequence[Point]) -> list:
        """Evaluate several points with one process; one output line per point."""
        stdout = self._call([format_input_line(x) for x in points])
        if stdout is None:
            return [self.failed for _ in points]
        lines = [line for line in stdout.splitlines() if line.strip()]
        results = []
        for i in range(len(points)):
            values = parse_output_tokens(lines[i], self.output_count) if i < len(lines) else None
            results.append(values if values is not None else self.failed)
        return results
