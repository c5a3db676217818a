"""
Tests for the Mads algorithm and its Start/Run/End components.
"""

import math

import numpy as np
import pytest

from madsopt.algos.directions import ortho_2n_directions
from madsopt.algos.mads import Mads, check_termination, initialization_run, iteration_run, mads_run
from madsopt.algos.mesh import initial_mesh, is_on_mesh
from madsopt.algos.poll import mega_search_poll_points
from madsopt.algos.search.base import SearchMethod
from madsopt.algos.state import new_state
from madsopt.algos.step import Step, run_step
from madsopt.bench.problems import sphere
from madsopt.errors import NoEvaluableStart
from madsopt.schemas.params import BarrierKind, OrderingStrategy
from madsopt.schemas.problem import OutputKind, Problem
from madsopt.schemas.results import StopReason, SuccessKind
from madsopt.schemas.trial import GeneratorTag
from madsopt.validators.params import DEFAULT_SEARCHES
from madsopt.validators.problem import validate_problem


def _wavy(x):
    return (x[0] - 0.3) ** 2 + 2.0 * (x[1] + 0.7) ** 2 + math.sin(3.0 * x[0])


def reference_mads(f, x0, seed, iterations, eps_stop=1e-13):
    """Plain transcription of the extreme barrier loop: full poll, no search."""
    rng = np.random.default_rng(seed)
    x = tuple(x0)
    fx = f(x)
    Delta = 1.0
    evaluated = [x]
    seen = {x}
    for _ in range(iterations):
        if Delta < eps_stop:
            break
        mesh = initial_mesh(x, Delta)
        best, best_f = x, fx
        for d in ortho_2n_directions(len(x), rng, mesh):
            t = tuple(float(v) for v in np.asarray(x) + mesh.delta * d)
            if t in seen:
                continue
            seen.add(t)
            evaluated.append(t)
            ft = f(t)
            if ft < best_f:
                best, best_f = t, ft
        if best_f < fx:
            x, fx = best, best_f
            Delta *= 2.0
        else:
            Delta /= 2.0
    return evaluated


class OriginSearch(SearchMethod):
    """User search proposing the origin."""
    
    name = "OriginSearch"
    
    def generate(self, state):
        t = state.make_trial((0.0,) * state.problem.n, self.generator)
        return [t] if t is not None else []


class BrokenSearch(SearchMethod):
    """User search that raises."""
    
    name = "BrokenSearch"
    
    def generate(self, state):
        raise ValueError("no candidates")


class TestStep:
    """Test the component execution model."""
    
    def test_hook_order(self):
        """start, run and end run in order, nested steps depth first."""
        calls = []
        
        class Leaf(Step):
            name = "Leaf"
            
            def start(self):
                calls.append("leaf.start")
            
            def end(self):
                calls.append("leaf.end")
        
        class Root(Step):
            name = "Root"
            
            def start(self):
                calls.append("root.start")
            
            def run(self):
                run_step(Leaf(parent=self))
            
            def end(self):
                calls.append("root.end")
        
        run_step(Root())
        
        assert calls == ["root.start", "leaf.start", "leaf.end", "root.end"]
    
    def test_error_note_names_innermost_path(self):
        """An error carries one note with the innermost component path."""
        class Leaf(Step):
            name = "Leaf"
            
            def run(self):
                raise RuntimeError("boom")
        
        class Root(Step):
            name = "Root"
            
            def run(self):
                run_step(Leaf(parent=self))
        
        with pytest.raises(RuntimeError) as excinfo:
            run_step(Root())
        
        assert excinfo.value.__notes__ == ["in component Root > Leaf"]


class TestMadsRun:
    """Test complete runs."""
    
    def test_converges_on_sphere(self, sphere_problem, make_params):
        """The poll alone drives the sphere close to zero."""
        result = mads_run(sphere_problem, make_params(max_bb_eval=300))
        
        assert result.best_feasible.f < 1e-2
        assert result.eval_count <= 300
    
    def test_converges_with_searches(self, bounded_problem, make_params):
        """Searches and bounds together find the shifted minimum."""
        params = make_params(max_bb_eval=400, searches_enabled=DEFAULT_SEARCHES)
        
        result = mads_run(bounded_problem, params)
        
        assert result.best_feasible.f < 1e-3
        assert all(-2.0 <= v <= 2.0 for r in result.history for v in r.point)
    
    def test_budget_respected(self, sphere_problem, make_params, counting_blackbox):
        """Each blackbox call counts once; cached points are never re-evaluated."""
        result = mads_run(sphere_problem, make_params(max_bb_eval=25))
        
        assert result.stop_reason == StopReason.BUDGET_EXHAUSTED
        assert result.eval_count == len(counting_blackbox.calls) == 25
        assert len(set(counting_blackbox.calls)) == 25
    
    def test_max_iterations(self, sphere_problem, make_params):
        """The iteration cap stops the run."""
        result = mads_run(sphere_problem, make_params(max_iterations=3))
        
        assert result.stop_reason == StopReason.MAX_ITERATIONS
        assert len(result.iterations) == 3
    
    def test_mesh_tolerance(self, sphere_problem, make_params):
        """A coarse tolerance stops the run on the frame size."""
        result = mads_run(sphere_problem, make_params(eps_stop=0.3, max_bb_eval=1000))
        
        assert result.stop_reason == StopReason.MESH_TOLERANCE
        last = result.iterations[-1]
        assert last.success == SuccessKind.FAILURE
        assert last.Delta / 2.0 < 0.3
    
    def test_no_evaluable_start(self, make_params):
        """Every starting point failing raises NoEvaluableStart."""
        def crash(x):
            raise RuntimeError("down")
        
        problem = Problem(name="down", n=2, output_kinds=(OutputKind.OBJ,), x0=((0.0, 0.0),), evaluator=crash)
        
        with pytest.raises(NoEvaluableStart) as excinfo:
            mads_run(problem, make_params())
        
        assert "in component Mads > Initialization" in excinfo.value.__notes__
    
    def test_deterministic(self, make_params):
        """Same seed, same sequence of evaluated points."""
        def run():
            problem = Problem(name="wavy", n=2, output_kinds=(OutputKind.OBJ,), x0=((1.0, -1.0),), evaluator=_wavy)
            params = make_params(max_bb_eval=150, searches_enabled=DEFAULT_SEARCHES)
            return [r.point for r in mads_run(problem, params).history]
        
        assert run() == run()
    
    def test_seeds_differ(self, make_params):
        """Different seeds draw different poll directions."""
        problem = Problem(name="wavy", n=2, output_kinds=(OutputKind.OBJ,), x0=((1.0, -1.0),), evaluator=_wavy)
        
        first = mads_run(problem, make_params(max_bb_eval=60, seed=1)).history
        second = mads_run(problem, make_params(max_bb_eval=60, seed=2)).history
        
        assert [r.point for r in first] != [r.point for r in second]
    
    def test_opportunism_evaluates_fewer(self, make_params):
        """Opportunism spends strictly fewer evaluations over 50 iterations on sphere5."""
        problem = sphere(5)
        
        full = mads_run(problem, make_params(opportunism=False, max_iterations=50, max_bb_eval=5000))
        opportunistic = mads_run(problem, make_params(opportunism=True, max_iterations=50, max_bb_eval=5000))
        
        assert full.stop_reason == opportunistic.stop_reason == StopReason.MAX_ITERATIONS
        assert len(opportunistic.history) < len(full.history)
    
    def test_frame_size_updates(self, sphere_problem, make_params):
        """Full success doubles the frame, failure halves it."""
        result = mads_run(sphere_problem, make_params(max_bb_eval=200))
        
        for current, following in zip(result.iterations, result.iterations[1:]):
            assert following.delta == min(following.Delta, following.Delta ** 2)
            if current.success == SuccessKind.FULL_SUCCESS:
                assert following.Delta == 2.0 * current.Delta
            elif current.success == SuccessKind.FAILURE:
                assert following.Delta == 0.5 * current.Delta
            else:
                assert following.Delta == current.Delta
    
    def test_poll_points_on_mesh(self, sphere_problem, make_params):
        """Every poll point lies on the mesh it was generated on."""
        result = mads_run(sphere_problem, make_params(max_bb_eval=100))
        
        polled = [r for r in result.history if r.trial.generator == GeneratorTag.POLL]
        assert polled
        for r in polled:
            mesh = r.trial.mesh_snapshot
            assert is_on_mesh(r.point, mesh)
            assert np.max(np.abs(np.asarray(r.point) - np.asarray(mesh.center))) <= mesh.Delta
    
    def test_parallel_workers(self, sphere_problem, make_params, counting_blackbox):
        """Worker threads keep the budget and the one-call-per-point contract."""
        result = mads_run(sphere_problem, make_params(max_bb_eval=80, n_workers=4))
        
        assert result.eval_count == len(counting_blackbox.calls) <= 80
        assert len(set(counting_blackbox.calls)) == len(counting_blackbox.calls)
        assert sorted(r.eval_index for r in result.history) == list(range(1, len(result.history) + 1))


class TestOracle:
    """Compare the extreme barrier run with a plain reference loop."""
    
    @pytest.mark.parametrize("seed", range(10))
    def test_matches_reference(self, make_params, seed):
        """Searches off, no opportunism: identical evaluated points."""
        problem = Problem(name="wavy", n=2, output_kinds=(OutputKind.OBJ,), x0=((1.0, -1.0),), evaluator=_wavy)
        params = make_params(
            seed=seed,
            max_bb_eval=10_000,
            max_iterations=50,
            opportunism=False,
            barrier_kind=BarrierKind.EXTREME,
            ordering=OrderingStrategy.GENERATION_ORDER,
        )
        
        result = mads_run(problem, params)
        
        assert [r.point for r in result.history] == reference_mads(_wavy, (1.0, -1.0), seed, 50)


class TestSearches:
    """Test search integration."""
    
    def test_user_search_full_success_skips_poll(self, sphere_problem, make_params):
        """A full success of a search ends the iteration without polling."""
        result = mads_run(sphere_problem, make_params(max_iterations=1), user_searches=[OriginSearch()])
        
        assert result.history[1].trial.generator == GeneratorTag.USER_SEARCH
        assert result.best_feasible.f == 0.0
        assert result.iterations[0].success == SuccessKind.FULL_SUCCESS
        assert result.iterations[0].n_evaluated == 1
    
    def test_search_error_names_component(self, sphere_problem, make_params):
        """Errors raised in a search carry the component path."""
        with pytest.raises(ValueError) as excinfo:
            mads_run(sphere_problem, make_params(), user_searches=[BrokenSearch()])
        
        assert excinfo.value.__notes__ == ["in component Mads > Iteration > BrokenSearch"]
    
    def test_mega_search_poll_without_searches(self, make_params):
        """With searches off MegaSearchPoll evaluates exactly the poll points."""
        def run(mega):
            problem = Problem(name="wavy", n=2, output_kinds=(OutputKind.OBJ,), x0=((1.0, -1.0),), evaluator=_wavy)
            return [r.point for r in mads_run(problem, make_params(max_bb_eval=80, mega_search_poll=mega)).history]
        
        assert run(True) == run(False)
    
    def test_mega_search_poll_with_searches(self, bounded_problem, make_params):
        """MegaSearchPoll evaluates search and poll points in the same round."""
        params = make_params(max_bb_eval=200, mega_search_poll=True, searches_enabled=DEFAULT_SEARCHES)
        
        result = mads_run(bounded_problem, params)
        
        generators = {r.trial.generator for r in result.history}
        assert GeneratorTag.POLL in generators
        assert generators & {GeneratorTag.SPECULATIVE_SEARCH, GeneratorTag.NM_SEARCH, GeneratorTag.QUAD_SEARCH}
        assert result.best_feasible.f < 0.1


class TestConstrained:
    """Test the progressive barrier inside Mads."""
    
    def test_finds_feasible_point(self, constrained_problem, make_params):
        """Starting infeasible, the run reaches a feasible point."""
        params = make_params(max_bb_eval=300, barrier_kind=BarrierKind.PROGRESSIVE)
        
        result = mads_run(constrained_problem, params)
        
        assert result.best_feasible is not None
        assert result.best_feasible.h == 0.0
        x = result.best_feasible.point
        assert x[0] ** 2 + x[1] ** 2 >= 1.0
    
    def test_feasible_trace_decreasing(self, constrained_problem, make_params):
        """Each new feasible incumbent improves f."""
        params = make_params(max_bb_eval=300, barrier_kind=BarrierKind.PROGRESSIVE)
        
        result = mads_run(constrained_problem, params)
        
        trace = [r.evaluation.f for r in result.history if r.h == 0 and r.success == SuccessKind.FULL_SUCCESS]
        assert trace
        assert all(b < a for a, b in zip(trace, trace[1:]))
    
    def test_extreme_barrier_from_infeasible_start(self, constrained_problem, make_params):
        """Under the extreme barrier an infeasible start has no usable value."""
        with pytest.raises(NoEvaluableStart):
            mads_run(constrained_problem, make_params(barrier_kind=BarrierKind.EXTREME))


class TestComponents:
    """Test the components driven one at a time."""
    
    def test_initialization_then_iteration(self, sphere_problem, make_params):
        """Initialization builds the mesh; one iteration advances k."""
        state = new_state(validate_problem(sphere_problem), make_params())
        
        initialization_run(state)
        assert state.mesh.center == (1.0, 1.0)
        assert state.mesh.Delta == 1.0
        
        iteration_run(state)
        assert state.k == 1
        assert len(state.iterations) == 1
        state.engine.close()
    
    def test_on_iteration_callback(self, sphere_problem, make_params):
        """The callback runs after every iteration."""
        seen = []
        
        result = mads_run(sphere_problem, make_params(max_iterations=5), on_iteration=lambda m: seen.append(m.state.k))
        
        assert seen == [1, 2, 3, 4, 5]
        assert len(result.iterations) == 5
    
    def test_apply_params_lowers_budget(self, sphere_problem, make_params):
        """New parameters take effect at the next iteration."""
        def shrink(mads):
            if mads.state.k == 2:
                mads.apply_params(mads.params.model_copy(update={"max_bb_eval": mads.state.eval_count}))
        
        mads = Mads(sphere_problem, make_params(max_bb_eval=500), on_iteration=shrink)
        result = mads.solve()
        
        assert result.stop_reason == StopReason.BUDGET_EXHAUSTED
        assert len(result.iterations) == 2
    
    def test_check_termination(self, sphere_problem, make_params):
        """Each stop criterion is reported once it holds."""
        state = new_state(validate_problem(sphere_problem), make_params(max_bb_eval=50))
        initialization_run(state)
        
        assert check_termination(state) is None
        
        state.stop_event.set()
        assert check_termination(state) == StopReason.USER_INTERRUPT
        
        state.budget.extend(state.budget.used)
        assert check_termination(state) == StopReason.BUDGET_EXHAUSTED
        
        state.params = state.params.model_copy(update={"eps_stop": 2.0})
        assert check_termination(state) == StopReason.MESH_TOLERANCE
        state.engine.close()
    
    def test_iteration_cap(self, sphere_problem, make_params):
        state = new_state(validate_problem(sphere_problem), make_params(max_iterations=1))
        initialization_run(state)
        iteration_run(state)
        
        assert check_termination(state) == StopReason.MAX_ITERATIONS
        state.engine.close()
    
    def test_mega_search_poll_points(self, sphere_problem, make_params):
        """Search candidates come first, then the poll set, without duplicates."""
        state = new_state(validate_problem(sphere_problem), make_params())
        initialization_run(state)
        searches = [OriginSearch().bind(state), OriginSearch().bind(state)]
        
        trials = mega_search_poll_points(state, searches)
        
        points = [t.point for t in trials]
        assert len(points) == len(set(points))
        assert trials[0].point == (0.0, 0.0)
        assert trials[0].generator == GeneratorTag.USER_SEARCH
        polled = [t for t in trials[1:] if t.generator == GeneratorTag.POLL]
        assert len(polled) == len(trials) - 1
        assert 3 <= len(polled) <= 4
        assert all(is_on_mesh(t.point, state.mesh) for t in trials)
        state.engine.close()
