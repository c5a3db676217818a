"""
Tests for the benchmark problems, run records, data profiles and runner.
"""

import csv
import math

import pytest
from pydantic import ValidationError

from madsopt.bench.catalog import CONSTRAINED_CATALOG, resolve
from madsopt.bench.problems import (
    get_problem,
    get_suite,
    hs19,
    make_srosenbr,
    rosenbrock,
    sphere,
    standard_budget,
    synthetic_slow_blackbox,
)
from madsopt.bench.records import (
    DataProfile,
    RunRecord,
    convergence_envelope,
    convergence_eval_count,
    data_profile,
    envelope_checkpoints,
    speedup_curve,
    time_data_profile,
)
from madsopt.bench.runner import (
    measure_speedup,
    run_instance,
    run_suite,
    write_bench_outputs,
    write_history_csv,
)
from madsopt.schemas.evaluation import Evaluation
from madsopt.schemas.results import EvalRecord, SuccessKind
from madsopt.schemas.trial import GeneratorTag, TrialPoint


def _record(problem, solver, best_f, n=1, seed=0, elapsed=None):
    return RunRecord(problem=problem, solver=solver, seed=seed, n=n, best_f=best_f, elapsed=elapsed or [])


def _eval(index, f, h=0.0):
    return EvalRecord(
        eval_index=index,
        trial=TrialPoint(point=(float(index),), generator=GeneratorTag.POLL),
        evaluation=Evaluation(f=f),
        h=h,
        success=SuccessKind.FAILURE,
    )


def _read_csv(path):
    with path.open(newline="") as handle:
        return list(csv.reader(handle))


class TestProblems:
    """Tests for the bundled analytic problems"""
    
    def test_rosenbrock_values(self):
        """Minimum at ones, value 1 at the origin"""
        assert rosenbrock([1.0, 1.0, 1.0]) == 0.0
        assert rosenbrock([0.0, 0.0]) == 1.0
    
    def test_srosenbr50_start_value(self):
        """49 terms of 6.5 at x0 = (0.5, ..., 0.5)"""
        problem = make_srosenbr(50)
        
        assert problem.evaluator(problem.x0[0]) == [pytest.approx(318.5)]
        assert problem.lower == (-10.0,) * 50
        assert problem.upper == (10.0,) * 50
    
    def test_srosenbr_needs_two_variables(self):
        """n = 1 is rejected"""
        with pytest.raises(ValueError):
            make_srosenbr(1)
    
    def test_hs19_outputs(self):
        """Objective plus two progressive barrier constraints inside the bounds"""
        problem = hs19()
        outputs = problem.evaluator(problem.x0[0])
        
        assert len(outputs) == 3
        assert problem.m == 2
        assert problem.lower == (13.0, 0.0)
    
    def test_slow_blackbox_same_outputs(self):
        """Wrapping keeps the outputs and renames the problem"""
        base = sphere(3)
        slow = synthetic_slow_blackbox(base, 0.0)
        
        assert slow.name == "sphere3-slow"
        assert slow.evaluator([1.0, 2.0, 2.0]) == base.evaluator([1.0, 2.0, 2.0])
    
    def test_slow_blackbox_negative_delay(self):
        """Negative delays are rejected"""
        with pytest.raises(ValueError):
            synthetic_slow_blackbox(sphere(2), -1.0)
    
    @pytest.mark.parametrize("name,n,m", [
        ("sphere7", 7, 0),
        ("SRosenbr5", 5, 0),
        ("hs19", 2, 2),
        ("pentagon6", 6, 15),
        ("crescent10", 10, 2),
    ])
    def test_get_problem(self, name, n, m):
        """Lookup is case-insensitive and sized families parse their dimension"""
        problem = get_problem(name)
        
        assert problem.n == n
        assert problem.m == m
    
    @pytest.mark.parametrize("name", ["nope", "sphere0", "srosenbr1", ""])
    def test_get_problem_unknown(self, name):
        """Unknown names raise KeyError"""
        with pytest.raises(KeyError):
            get_problem(name)
    
    def test_get_suite(self):
        """Named suites and comma-separated lists"""
        assert [p.name for p in get_suite("srosenbr")] == ["srosenbr50", "srosenbr250"]
        assert [p.name for p in get_suite("sphere2,hs19")] == ["sphere2", "hs19"]
    
    def test_standard_budget(self):
        """400 (n+1) unconstrained, 1000 (n+1) constrained"""
        assert standard_budget(sphere(4)) == 2000
        assert standard_budget(hs19()) == 3000


class TestCatalog:
    """Tests for the constrained problem catalog"""
    
    def test_bundled_entries_resolve(self):
        """Every bundled catalog problem matches its declared size"""
        for name in ("CRESCENT", "DISK", "HS19", "PENTAGON", "SNAKE"):
            entry = next(e for e in CONSTRAINED_CATALOG if e.name == name)
            problem = resolve(name)
            
            assert (problem.n, problem.m) == (entry.n, entry.m)
    
    def test_unbundled_entry(self):
        """Entries without a bundled or registered problem raise KeyError"""
        with pytest.raises(KeyError):
            resolve("MDO")
    
    def test_unknown_entry(self):
        with pytest.raises(KeyError):
            resolve("NOT_A_PROBLEM")
    
    def test_catalog_suite(self):
        """The catalog suite lists the bundled catalog problems in catalog order"""
        assert [p.name for p in get_suite("catalog")] == ["crescent10", "disk10", "hs19", "pentagon6", "snake2"]


class TestRunRecord:
    """Tests for RunRecord"""
    
    def test_from_history_running_minimum(self):
        """Infeasible and failed evaluations keep the previous best"""
        history = [
            _eval(3, 4.0),
            _eval(1, 5.0),
            _eval(2, 1.0, h=2.0),
            _eval(4, 6.0),
        ]
        record = RunRecord.from_history("p", "mads", 0, 1, history)
        
        assert record.best_f == [5.0, 5.0, 4.0, 4.0]
        assert record.f0 == 5.0
        assert record.final_f == 4.0
        assert record.eval_count == 4
    
    def test_infeasible_start(self):
        """f0 is the first finite best value"""
        record = _record("p", "mads", [math.inf, math.inf, 3.0, 2.0])
        
        assert record.f0 == 3.0
    
    def test_best_f_must_decrease(self):
        with pytest.raises(ValidationError):
            _record("p", "mads", [1.0, 2.0])


class TestConvergenceTest:
    """Tests for convergence_eval_count"""
    
    def test_first_index_below_threshold(self):
        """Threshold f_L + tau (f0 - f_L) = 0.1 reached at evaluation 33"""
        record = _record("p", "mads", [10.0] * 32 + [0.05, 0.01])
        
        assert convergence_eval_count(record, f_L=0.0, f0=10.0, tau=0.01) == 33
    
    def test_never_solved(self):
        record = _record("p", "mads", [10.0, 5.0, 1.0])
        
        assert convergence_eval_count(record, f_L=0.0, f0=10.0, tau=0.01) is None
    
    def test_solved_at_first_evaluation(self):
        record = _record("p", "mads", [0.0, 0.0])
        
        assert convergence_eval_count(record, f_L=0.0, f0=10.0, tau=0.01) == 1
    
    def test_monotone_in_tau(self):
        """A looser tolerance never needs more evaluations"""
        record = _record("p", "mads", [10.0, 8.0, 4.0, 2.0, 0.9, 0.5, 0.09, 0.009, 0.0009])
        counts = [
            convergence_eval_count(record, f_L=0.0, f0=10.0, tau=tau)
            for tau in (1e-1, 1e-2, 1e-3, 1e-5)
        ]
        
        assert counts == [5, 7, 8, None]


class TestDataProfile:
    """Tests for data profiles"""
    
    def test_one_solved_one_never(self):
        """One instance solved at 3 (n+1) evaluations, one never: 0.5 from kappa 3"""
        records = {
            "mads": [
                _record("a", "mads", [10.0] * 5 + [0.0], n=1),
                _record("b", "mads", [10.0] * 6, n=1),
            ],
        }
        profile = data_profile(records, tau=0.01, kappas=[0, 1, 2, 3, 4], known={"a": 0.0, "b": 0.0})["mads"]
        
        assert profile.fraction == [0.0, 0.0, 0.0, 0.5, 0.5]
        assert profile.at(2.5) == 0.0
        assert profile.at(10) == 0.5
    
    def test_three_problems_two_solvers(self):
        """Hand-enumerated fractions per budget"""
        known = {"p1": 0.0, "p2": 0.0, "p3": 0.0}
        records = {
            "A": [
                _record("p1", "A", [10.0, 5.0, 0.05, 0.05, 0.05, 0.05]),
                _record("p2", "A", [10.0] * 6),
                _record("p3", "A", [10.0, 1.0, 1.0, 1.0, 0.08, 0.0]),
            ],
            "B": [
                _record("p1", "B", [10.0] * 5 + [0.0]),
                _record("p2", "B", [10.0, 0.01, 0.01, 0.01, 0.01, 0.01]),
                _record("p3", "B", [10.0] * 6),
            ],
        }
        profiles = data_profile(records, tau=0.01, kappas=[0, 1, 2, 3], known=known)
        
        assert profiles["A"].fraction == pytest.approx([0.0, 0.0, 1 / 3, 2 / 3])
        assert profiles["B"].fraction == pytest.approx([0.0, 1 / 3, 1 / 3, 2 / 3])
    
    def test_default_kappas_and_bounds(self):
        """Default budgets cover the longest run; curves stay in [0, 1] and never decrease"""
        records = {
            "A": [_record("p", "A", [4.0, 3.0, 0.0], n=1)],
            "B": [_record("p", "B", [4.0, 4.0, 4.0, 4.0, 4.0], n=1)],
        }
        profiles = data_profile(records, tau=0.01)
        
        assert profiles["A"].kappa == [0.0, 1.0, 2.0, 3.0]
        for profile in profiles.values():
            assert all(0.0 <= v <= 1.0 for v in profile.fraction)
            assert profile.fraction == sorted(profile.fraction)
        assert profiles["A"].fraction[-1] == 1.0
        assert profiles["B"].fraction[-1] == 0.0
    
    def test_f_l_defaults_to_best_run(self):
        """Without known optima the best final value of all runs is the target"""
        records = {
            "A": [_record("p", "A", [10.0, 2.0])],
            "B": [_record("p", "B", [10.0, 10.0])],
        }
        profiles = data_profile(records, tau=0.01, kappas=[1])
        
        assert profiles["A"].fraction == [1.0]
        assert profiles["B"].fraction == [0.0]
    
    def test_shared_start_value(self):
        """Every solver is measured from the worst starting value of the instance"""
        records = {
            "A": [_record("p", "A", [10.0, 0.5])],
            "B": [_record("p", "B", [1.0, 0.5])],
        }
        profiles = data_profile(records, tau=0.1, kappas=[1], known={"p": 0.0})
        
        assert profiles["A"].fraction == [1.0]
        assert profiles["B"].fraction == [1.0]
    
    def test_time_profile(self):
        """Wall-clock axis uses the elapsed time of the solving evaluation"""
        records = {
            "A": [_record("p", "A", [10.0, 0.0], elapsed=[0.5, 1.5])],
        }
        profile = time_data_profile(records, tau=0.01, times=[1.0, 2.0], known={"p": 0.0})["A"]
        
        assert profile.fraction == [0.0, 1.0]
    
    @pytest.mark.parametrize("fraction", [[0.5, 0.2], [0.0, 1.5], [0.5]])
    def test_invalid_curves(self, fraction):
        """Decreasing, out-of-range and misaligned curves are rejected"""
        with pytest.raises(ValidationError):
            DataProfile(solver="A", tau=0.01, kappa=[0.0, 1.0], fraction=fraction)


class TestEnvelope:
    """Tests for convergence envelopes"""
    
    def test_checkpoints(self):
        """1, then every 1000 evaluations up to 100 n"""
        assert envelope_checkpoints(50) == [1, 1000, 2000, 3000, 4000, 5000]
        assert envelope_checkpoints(5) == [1]
        assert envelope_checkpoints(5, last=300) == [1, 300]
        assert envelope_checkpoints(20, last=1500) == [1, 1000, 2000]
    
    def test_mean_min_max(self):
        """Shorter runs contribute their last value"""
        runs = [
            _record("p", "A", [8.0, 4.0, 2.0, 1.0], seed=0),
            _record("p", "A", [6.0, 6.0], seed=1),
        ]
        
        assert convergence_envelope(runs, [1, 2, 4]) == [
            (1, 7.0, 6.0, 8.0),
            (2, 5.0, 4.0, 6.0),
            (4, 3.5, 1.0, 6.0),
        ]
    
    def test_empty_records(self):
        with pytest.raises(ValueError):
            convergence_envelope([], [1])
    
    def test_speedup_curve(self):
        """Elapsed time averaged per solver over the common evaluation range"""
        records = [
            _record("p", "A", [3.0, 2.0, 1.0], seed=0, elapsed=[1.0, 2.0, 3.0]),
            _record("p", "A", [3.0, 2.0], seed=1, elapsed=[3.0, 4.0]),
            _record("p", "B", [3.0, 2.0]),
        ]
        
        assert speedup_curve(records) == {"A": [(1, 2.0), (2, 3.0)]}


class TestRunner:
    """Tests for the benchmark runner"""
    
    def test_run_instance(self):
        """Budget respected, one elapsed stamp per evaluation"""
        record, result = run_instance(sphere(2), "mads", seed=0, budget=40)
        
        assert record.eval_count == result.eval_count <= 40
        assert len(record.elapsed) == record.eval_count
        assert record.final_f < record.f0 == 2.0
    
    @pytest.mark.parametrize("solver", ["mads-poll", "mads-mega", "nm", "lh"])
    def test_solver_tags(self, solver):
        """Every tag runs on a small bounded problem"""
        record, _ = run_instance(make_srosenbr(2), solver, seed=1, budget=30)
        
        assert 0 < record.eval_count <= 30
        assert record.final_f <= record.f0
    
    def test_psd_tag(self):
        record, _ = run_instance(sphere(4), "psd", seed=0, budget=60)
        
        assert 0 < record.eval_count <= 60
    
    def test_unknown_solver(self):
        with pytest.raises(KeyError):
            run_instance(sphere(2), "cmaes")
    
    def test_run_suite(self):
        """Records grouped by solver in (problem, seed) order"""
        records = run_suite([sphere(2), sphere(3)], ["mads", "lh"], seeds=range(2), budget=20)
        
        assert set(records) == {"mads", "lh"}
        assert [(r.problem, r.seed) for r in records["mads"]] == [
            ("sphere2", 0), ("sphere2", 1), ("sphere3", 0), ("sphere3", 1),
        ]
    
    def test_run_suite_jobs(self):
        """Concurrent instances give the same records as sequential ones"""
        sequential = run_suite([sphere(2)], ["mads"], seeds=range(3), budget=25)
        concurrent = run_suite([sphere(2)], ["mads"], seeds=range(3), budget=25, jobs=3)
        
        assert [r.best_f for r in sequential["mads"]] == [r.best_f for r in concurrent["mads"]]
    
    def test_run_suite_unknown_solver(self):
        with pytest.raises(KeyError):
            run_suite([sphere(2)], ["mads", "bogus"], seeds=[0])
    
    def test_write_history_csv(self, tmp_path):
        """One row per evaluation of every run"""
        records = [_record("p", "mads", [5.0, 4.0]), _record("p", "lh", [3.0], seed=1)]
        path = write_history_csv(tmp_path / "out" / "history.csv", records)
        rows = _read_csv(path)
        
        assert rows[0] == ["solver", "problem", "seed", "eval_index", "best_f"]
        assert [row[:4] for row in rows[1:]] == [["mads", "p", "0", "1"], ["mads", "p", "0", "2"], ["lh", "p", "1", "1"]]
        assert [float(row[4]) for row in rows[1:]] == [5.0, 4.0, 3.0]
    
    def test_write_bench_outputs(self, tmp_path):
        """History, profile and speedup CSVs plus one envelope CSV per solver and problem"""
        records = run_suite([sphere(2)], ["mads", "lh"], seeds=range(2), budget=15)
        paths = write_bench_outputs(tmp_path, records, tau=0.01, known={"sphere2": 0.0})
        
        assert sorted(p.name for p in paths) == [
            "envelope-lh-sphere2.csv",
            "envelope-mads-sphere2.csv",
            "history.csv",
            "profile.csv",
            "speedup.csv",
        ]
        profile_rows = _read_csv(tmp_path / "profile.csv")
        assert profile_rows[0] == ["solver", "kappa", "fraction"]
        assert {row[0] for row in profile_rows[1:]} == {"mads", "lh"}
        envelope_rows = _read_csv(tmp_path / "envelope-mads-sphere2.csv")
        assert envelope_rows[0] == ["checkpoint", "mean", "min", "max"]
        assert envelope_rows[1][0] == "1"
        speedup_rows = _read_csv(tmp_path / "speedup.csv")
        assert {row[0] for row in speedup_rows[1:]} == {"mads", "lh"}
    
    @pytest.mark.slow
    def test_parallel_speedup(self):
        """Parallel MegaSearchPoll beats the single-worker run on a slow blackbox"""
        ratio = measure_speedup(sphere(5), delay=0.02, workers=8, budget=200)
        
        assert ratio < 0.75


class TestStandardBudgets:
    """Test default Mads on the bundled problems under their standard budgets."""
    
    @pytest.mark.slow
    @pytest.mark.parametrize("name", ["sphere2", "sphere5", "sphere10", "srosenbr2"])
    def test_unconstrained_convergence(self, name):
        """Default Mads closes the gap to f* by a factor 1e4 on at least 9 seeds of 10."""
        problem = get_problem(name)
        f0 = problem.evaluator(problem.x0[0])[0]
        target = problem.f_best + 1e-4 * (f0 - problem.f_best)
        
        finals = [run_instance(problem, "mads", seed=seed)[1].best_feasible.f for seed in range(10)]
        
        assert sum(f <= target for f in finals) >= 9
    
    @pytest.mark.slow
    @pytest.mark.parametrize("name", ["crescent10", "disk10", "snake2"])
    def test_constrained_feasibility(self, name):
        """The progressive barrier ends feasible, with a non-increasing feasible trace."""
        problem = get_problem(name)
        feasible_runs = 0
        for seed in range(10):
            _, result = run_instance(problem, "mads", seed=seed)
            if result.best_feasible is not None and result.best_feasible.h == 0.0:
                feasible_runs += 1
            improvements = [
                r.evaluation.f for r in result.history
                if r.h == 0.0 and r.success == SuccessKind.FULL_SUCCESS
            ]
            assert improvements == sorted(improvements, reverse=True)
            if result.best_feasible is not None:
                assert improvements[-1] == result.best_feasible.f
        
        assert feasible_runs >= 9
