"""
Tests for the command line: solve, bench and hot restart.
"""

import io
import os
import signal
import sys

import pytest

from madsopt.algos.mads import Mads
from madsopt.algos.restart import state_path
from madsopt.cli.cache_file import read_cache_file
from madsopt.cli.hot_restart import HotRestart
from madsopt.cli.params_file import parse_params
from madsopt.cli.solve import Checkpointer, solve_file
from madsopt.errors import BlackboxSpawnError, ImmutableParamChanged
from madsopt.main import EXIT_IO, EXIT_OK, EXIT_PARAMS, main
from madsopt.schemas.results import StopReason


SPHERE = """\
DIMENSION 2
BB_EXE builtin:sphere2
BB_OUTPUT_TYPE OBJ
X0 ( 1 1 )
LOWER_BOUND * -5
UPPER_BOUND * 5
MAX_BB_EVAL {budget}
"""


@pytest.fixture
def param_file(tmp_path):
    """Factory writing a sphere parameter file with extra lines."""
    def factory(budget=40, extra="", name="params.txt"):
        path = tmp_path / name
        path.write_text(SPHERE.format(budget=budget) + extra)
        return path
    return factory


def _history_indices(path):
    return [int(line.split(",")[0]) for line in path.read_text().splitlines()[1:]]


class TestHotRestart:
    """Test parameter reloads during a run."""
    
    def test_unchanged_file(self, param_file):
        """Reloading an unchanged file applies nothing."""
        path = param_file()
        mads = Mads(*parse_params(path))
        hot = HotRestart(path)
        
        assert hot.reload(mads) is None
        assert hot.restarts == 0
    
    def test_mutable_change(self, param_file):
        """A new budget and ordering reach the running state."""
        path = param_file()
        mads = Mads(*parse_params(path))
        hot = HotRestart(path)
        param_file(budget=80, extra="ORDERING lexicographic\n")
        
        params = hot.reload(mads)
        
        assert params.max_bb_eval == 80
        assert mads.params == params
        assert mads.state.budget.limit == 80
        assert mads.state.queue.strategy.value == "lexicographic"
        assert hot.restarts == 1
    
    def test_overrides_survive(self, param_file):
        """Command-line overrides still win after a reload."""
        path = param_file()
        mads = Mads(*parse_params(path, seed=5))
        hot = HotRestart(path, seed=5)
        param_file(extra="SEED 1\nEPSILON 1e-6\n")
        
        assert hot.reload(mads).seed == 5
    
    def test_immutable_change_rejected(self, param_file):
        """Changing X0 raises; the callback keeps the old parameters."""
        path = param_file()
        mads = Mads(*parse_params(path))
        before = mads.params
        hot = HotRestart(path)
        path.write_text(SPHERE.format(budget=90).replace("X0 ( 1 1 )", "X0 ( 2 2 )"))
        
        with pytest.raises(ImmutableParamChanged):
            hot.reload(mads)
        
        hot.request()
        hot(mads)
        assert mads.params == before
        assert not hot.requested.is_set()
    
    def test_callback_waits_for_request(self, param_file, mocker):
        """Nothing is re-read until a restart is requested."""
        path = param_file()
        mads = Mads(*parse_params(path))
        hot = HotRestart(path)
        reload = mocker.patch.object(hot, "reload")
        
        hot(mads)
        reload.assert_not_called()
        
        hot.request()
        hot(mads)
        reload.assert_called_once_with(mads)
    
    def test_budget_raised_mid_run(self, param_file):
        """A restart requested after the first iteration lets the run use the new budget."""
        path = param_file(budget=30)
        hot = HotRestart(path)
        
        def on_iteration(mads):
            if mads.state.k == 1:
                param_file(budget=60)
                hot.request()
            hot(mads)
        
        result = Mads(*parse_params(path), on_iteration=on_iteration).solve()
        
        assert hot.restarts == 1
        assert result.eval_count == 60
        assert result.stop_reason == StopReason.BUDGET_EXHAUSTED
    
    @pytest.mark.skipif(not hasattr(signal, "SIGUSR1"), reason="SIGUSR1 not available")
    def test_signal_sets_flag(self, param_file):
        """The configured signal only sets the request flag."""
        hot = HotRestart(param_file())
        assert hot.install("SIGUSR1")
        try:
            os.kill(os.getpid(), signal.SIGUSR1)
        finally:
            hot.uninstall()
        
        assert hot.requested.is_set()
    
    def test_unknown_signal(self, param_file):
        assert HotRestart(param_file()).install("SIGNOTHING") is False


class TestCheckpointer:
    """Test periodic restart snapshots."""
    
    def test_saves_every_few_iterations(self, param_file, tmp_path):
        """Snapshots are written at multiples of the interval."""
        cache = tmp_path / "cache.txt"
        checkpointer = Checkpointer(cache, every=2)
        path = param_file(budget=200, extra="MAX_ITERATIONS 5\n")
        
        Mads(*parse_params(path), on_iteration=checkpointer).solve()
        
        assert checkpointer.saved == 2
        assert state_path(cache).exists()
        assert len(read_cache_file(cache, 2, 0)) > 0
    
    def test_without_cache_file(self, param_file):
        checkpointer = Checkpointer(None, every=1)
        
        Mads(*parse_params(param_file(budget=200, extra="MAX_ITERATIONS 3\n")), on_iteration=checkpointer).solve()
        
        assert checkpointer.saved == 0


class TestSolveFile:
    """Test the solve command."""
    
    def test_outputs(self, param_file, tmp_path):
        """Cache, sidecar, history and solution line are written."""
        path = param_file(extra="CACHE_FILE cache.txt\nHISTORY_FILE history.csv\n")
        out = io.StringIO()
        
        result = solve_file(path, out=out)
        
        assert result.eval_count == 40
        assert len(read_cache_file(tmp_path / "cache.txt", 2, 0)) == 40
        assert state_path(tmp_path / "cache.txt").exists()
        assert _history_indices(tmp_path / "history.csv") == list(range(1, 41))
        assert out.getvalue().count("|") == 2
    
    def test_resume_continues(self, param_file, tmp_path):
        """A second run with a larger budget continues the first one."""
        extra = "CACHE_FILE cache.txt\nHISTORY_FILE history.csv\n"
        path = param_file(budget=40, extra=extra)
        first = solve_file(path, out=io.StringIO())
        param_file(budget=60, extra=extra)
        
        second = solve_file(path, out=io.StringIO())
        
        assert _history_indices(tmp_path / "history.csv") == list(range(1, 61))
        assert len(read_cache_file(tmp_path / "cache.txt", 2, 0)) == 60
        assert second.best.f <= first.best.f
    
    def test_resume_from_cache_only(self, param_file, tmp_path):
        """Without a sidecar the cached points are replayed, not re-evaluated."""
        extra = "CACHE_FILE cache.txt\n"
        path = param_file(budget=30, extra=extra)
        solve_file(path, out=io.StringIO())
        state_path(tmp_path / "cache.txt").unlink()
        param_file(budget=50, extra=extra)
        
        solve_file(path, csv_dir=tmp_path / "out", out=io.StringIO())
        
        assert _history_indices(tmp_path / "out" / "history.csv")[0] == 31
        assert len(read_cache_file(tmp_path / "cache.txt", 2, 0)) == 50
    
    def test_csv_dir(self, param_file, tmp_path):
        """history.csv goes to --csv when HISTORY_FILE is absent."""
        solve_file(param_file(budget=10), csv_dir=tmp_path / "csv", out=io.StringIO())
        
        assert _history_indices(tmp_path / "csv" / "history.csv") == list(range(1, 11))
    
    def test_deterministic_history(self, tmp_path):
        """Three runs with the same seed write identical histories."""
        texts = []
        for i in range(3):
            run_dir = tmp_path / f"run{i}"
            run_dir.mkdir()
            path = run_dir / "params.txt"
            path.write_text(SPHERE.format(budget=50) + "SEED 3\nHISTORY_FILE history.csv\n")
            solve_file(path, out=io.StringIO())
            texts.append((run_dir / "history.csv").read_text())
        
        assert texts[0] == texts[1] == texts[2]
    
    def test_overrides(self, param_file, tmp_path):
        """Command-line seed, threads and cache override the file."""
        result = solve_file(
            param_file(budget=20),
            seed=4,
            threads=2,
            cache_file=tmp_path / "other.txt",
            out=io.StringIO(),
        )
        
        assert result.eval_count == 20
        assert (tmp_path / "other.txt").exists()
    
    def test_psd(self, tmp_path):
        """PSD runs write the cache file without a sidecar."""
        path = tmp_path / "params.txt"
        path.write_text("\n".join([
            "DIMENSION 4",
            "BB_EXE builtin:sphere4",
            "BB_OUTPUT_TYPE OBJ",
            "X0 * 1",
            "MAX_BB_EVAL 60",
            "PSD ON 2 2",
            "CACHE_FILE cache.txt",
        ]) + "\n")
        
        result = solve_file(path, out=io.StringIO())
        
        assert 0 < result.eval_count <= 60
        assert len(read_cache_file(tmp_path / "cache.txt", 4, 0)) == result.eval_count
        assert not state_path(tmp_path / "cache.txt").exists()
    
    def test_missing_executable(self, tmp_path):
        path = tmp_path / "params.txt"
        path.write_text(SPHERE.format(budget=10).replace("builtin:sphere2", "absent.py"))
        
        with pytest.raises(BlackboxSpawnError):
            solve_file(path, out=io.StringIO())
    
    @pytest.mark.integration
    def test_external_blackbox(self, tmp_path):
        """A process blackbox with a constraint solves end to end."""
        bb = tmp_path / "bb.py"
        bb.write_text(
            f"#!{sys.executable}\n"
            "import sys\n"
            "x = [float(v) for v in open(sys.argv[1]).read().split()]\n"
            "print(sum(v * v for v in x), 0.5 - x[0])\n"
        )
        bb.chmod(0o755)
        path = tmp_path / "params.txt"
        path.write_text("\n".join([
            "DIMENSION 2",
            "BB_EXE bb.py",
            "BB_OUTPUT_TYPE OBJ PB",
            "X0 ( 1 1 )",
            "LOWER_BOUND * -2",
            "UPPER_BOUND * 2",
            "MAX_BB_EVAL 40",
            "HISTORY_FILE history.csv",
        ]) + "\n")
        
        result = solve_file(path, out=io.StringIO())
        
        assert result.best_feasible is not None
        assert result.best_feasible.point[0] >= 0.5
        assert result.best_feasible.f < 2.0
        assert len(_history_indices(tmp_path / "history.csv")) == result.eval_count


class TestMain:
    """Test exit codes of the command line."""
    
    def test_solve_ok(self, param_file, capsys):
        assert main(["solve", str(param_file(budget=15))]) == EXIT_OK
        assert "|" in capsys.readouterr().out
    
    def test_parameter_error(self, param_file):
        """Unknown keys exit with code 2."""
        assert main(["solve", str(param_file(extra="BOGUS 1\n"))]) == EXIT_PARAMS
    
    def test_invalid_value(self, param_file):
        assert main(["solve", str(param_file(extra="FRAME_ADJUSTMENT 3\n"))]) == EXIT_PARAMS
    
    def test_missing_executable(self, tmp_path):
        """An executable that cannot be launched exits with code 3."""
        path = tmp_path / "params.txt"
        path.write_text(SPHERE.format(budget=10).replace("builtin:sphere2", "absent.py"))
        
        assert main(["solve", str(path)]) == EXIT_IO
    
    def test_missing_param_file(self, tmp_path):
        assert main(["solve", str(tmp_path / "absent.txt")]) == EXIT_IO
    
    def test_bench(self, tmp_path, capsys):
        """bench prints one line per solver and writes the CSVs."""
        code = main([
            "bench", "sphere2,srosenbr2",
            "--solvers", "mads,lh",
            "--budget", "20",
            "--seeds", "2",
            "--csv", str(tmp_path),
        ])
        
        assert code == EXIT_OK
        out = capsys.readouterr().out
        assert "mads: fraction solved" in out
        assert "lh: fraction solved" in out
        assert (tmp_path / "profile.csv").exists()
        assert (tmp_path / "envelope-mads-srosenbr2.csv").exists()
    
    def test_bench_unknown_problem(self):
        assert main(["bench", "no_such_problem"]) == EXIT_PARAMS
    
    def test_bench_unknown_solver(self):
        assert main(["bench", "sphere2", "--solvers", "cmaes"]) == EXIT_PARAMS
