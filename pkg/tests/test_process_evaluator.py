"""
Tests for external blackbox executables.
"""

import math
import subprocess
import sys

import pytest

from madsopt.cli.process_evaluator import ProcessEvaluator, format_input_line, parse_output_tokens
from madsopt.errors import BlackboxSpawnError
from madsopt.schemas.evaluation import EvalStatus


def _script(tmp_path, body, name="bb.py"):
    """Executable Python script reading the input file given as first argument."""
    path = tmp_path / name
    path.write_text(f"#!{sys.executable}\nimport sys\n{body}\n")
    path.chmod(0o755)
    return path


SUM_OF_SQUARES = """\
for line in open(sys.argv[1]):
    x = [float(v) for v in line.split()]
    print(sum(v * v for v in x), x[0] - 1, -x[1])
"""


class TestProtocolHelpers:
    """Test the input and output line formats."""
    
    def test_input_line_round_trips(self):
        """Coordinates are written with full precision."""
        x = (0.1, 1 / 3, -2.0)
        
        assert tuple(float(v) for v in format_input_line(x).split()) == x
    
    def test_reads_first_tokens(self):
        """Extra tokens are ignored; nan counts as +inf."""
        assert parse_output_tokens("3.2 -1 -0.5 extra\n", 3) == [3.2, -1.0, -0.5]
        assert parse_output_tokens("nan 0", 2) == [math.inf, 0.0]
    
    @pytest.mark.parametrize("text", ["", "1.0", "1.0 abc"])
    def test_unreadable_outputs(self, text):
        """Too few or non-numeric tokens give None."""
        assert parse_output_tokens(text, 2) is None


class TestProcessEvaluator:
    """Test blackbox process calls."""
    
    def test_evaluates_point(self, tmp_path):
        """Outputs are read in BB_OUTPUT_TYPE order."""
        evaluator = ProcessEvaluator(_script(tmp_path, SUM_OF_SQUARES), 3)
        
        assert evaluator((2.0, 0.5)) == [4.25, 1.0, -0.5]
    
    def test_fixed_output(self, tmp_path):
        evaluator = ProcessEvaluator(_script(tmp_path, 'print("3.2 -1 -0.5")'), 3)
        
        assert evaluator((0.0, 0.0)) == [3.2, -1.0, -0.5]
    
    def test_infinite_output(self, tmp_path):
        """inf is a valid objective value."""
        evaluator = ProcessEvaluator(_script(tmp_path, 'print("inf 0 0")'), 3)
        
        assert evaluator((0.0, 0.0)) == [math.inf, 0.0, 0.0]
    
    def test_nonzero_exit_fails(self, tmp_path):
        """A nonzero exit status makes the evaluation FAILED."""
        evaluator = ProcessEvaluator(_script(tmp_path, 'print("1 2 3")\nsys.exit(1)'), 3)
        result = evaluator((0.0, 0.0))
        
        assert result.status == EvalStatus.FAILED
        assert len(result.c) == 2
    
    def test_short_output_fails(self, tmp_path):
        evaluator = ProcessEvaluator(_script(tmp_path, 'print("1")'), 3)
        
        assert evaluator((0.0, 0.0)).status == EvalStatus.FAILED
    
    def test_timeout_fails(self, tmp_path, mocker):
        """A timed out call makes the evaluation FAILED."""
        evaluator = ProcessEvaluator(_script(tmp_path, 'print("1")'), 1, timeout=0.5)
        run = mocker.patch(
            "madsopt.cli.process_evaluator.subprocess.run",
            side_effect=subprocess.TimeoutExpired(cmd="bb", timeout=0.5),
        )
        
        assert evaluator((0.0,)).status == EvalStatus.FAILED
        assert run.call_args.kwargs["timeout"] == 0.5
    
    def test_input_file_removed(self, tmp_path):
        """Temporary input files do not outlive the call."""
        workdir = tmp_path / "work"
        workdir.mkdir()
        evaluator = ProcessEvaluator(_script(tmp_path, SUM_OF_SQUARES), 3, workdir=workdir)
        evaluator((1.0, 1.0))
        
        assert list(workdir.iterdir()) == []
    
    def test_batch(self, tmp_path):
        """One process evaluates a group, one output line per point."""
        evaluator = ProcessEvaluator(_script(tmp_path, SUM_OF_SQUARES), 3)
        results = evaluator.evaluate_batch([(1.0, 0.0), (0.0, 2.0), (3.0, 4.0)])
        
        assert results == [[1.0, 0.0, -0.0], [4.0, -1.0, -2.0], [25.0, 2.0, -4.0]]
    
    def test_batch_missing_lines(self, tmp_path):
        """Points without an output line are FAILED."""
        evaluator = ProcessEvaluator(_script(tmp_path, 'print("1 0 0")'), 3)
        results = evaluator.evaluate_batch([(1.0, 0.0), (0.0, 2.0)])
        
        assert results[0] == [1.0, 0.0, 0.0]
        assert results[1].status == EvalStatus.FAILED
    
    def test_check_missing(self, tmp_path):
        with pytest.raises(BlackboxSpawnError):
            ProcessEvaluator(tmp_path / "absent", 1).check()
    
    def test_check_not_executable(self, tmp_path):
        """A file without the executable bit is rejected."""
        path = tmp_path / "bb.txt"
        path.write_text("nothing")
        path.chmod(0o644)
        
        with pytest.raises(BlackboxSpawnError):
            ProcessEvaluator(path, 1).check()
    
    def test_check_passes(self, tmp_path):
        ProcessEvaluator(_script(tmp_path, 'print("0")'), 1).check()
