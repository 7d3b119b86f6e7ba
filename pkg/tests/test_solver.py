import numpy as np
import pytest

from pdbinopt.constraints import ConstraintFunction
from pdbinopt.io import gnp_graph
from pdbinopt.oracle import brute_force_min
from pdbinopt.poly import DimensionError, MultilinearPolynomial
from pdbinopt.problems import WeightedGraph, maxcut_to_poly
from pdbinopt.solver import (PROBLEM_DEFAULTS, ConfigError, NumericFailure, RunState,
                             SolverConfig, binarity_gap, dual_lower_bound, gda_step,
                             init_run, project_punctured, project_unit, run_rng, snap, solve)

from _helpers import random_qubo

EDGE = maxcut_to_poly(WeightedGraph.from_edges(2, [(0, 1)]))


class TestConfig:
    def test_table_defaults(self):
        assert PROBLEM_DEFAULTS["maxcut"] == dict(batch=100, y0=6.0, alpha=0.025, beta=0.025)
        assert PROBLEM_DEFAULTS["mis"] == dict(batch=10, y0=5.0, alpha=0.02, beta=0.02)
        assert PROBLEM_DEFAULTS["maxksat"] == dict(batch=10, y0=2.0, alpha=0.01, beta=0.005)
        assert PROBLEM_DEFAULTS["maxkcut"] == dict(batch=100, y0=6.0, alpha=0.01, beta=0.01,
                                                   t_max=40_000)
        cfg = SolverConfig.for_problem("mis")
        assert cfg.delta == 0.01 and cfg.eps_for(12) == pytest.approx(0.012)

    def test_overrides_ignore_none(self):
        cfg = SolverConfig.for_problem("maxcut", alpha=None, batch=3)
        assert cfg.alpha == 0.025 and cfg.batch == 3

    @pytest.mark.parametrize("bad", [dict(alpha=0), dict(beta=-1), dict(y0=0), dict(delta=0.5),
                                     dict(delta=0), dict(batch=0), dict(epsilon=-1),
                                     dict(checkpoint_stride=0)])
    def test_invalid(self, bad):
        with pytest.raises(ConfigError):
            SolverConfig(**bad)

    def test_unknown_problem(self):
        with pytest.raises(ConfigError):
            SolverConfig.for_problem("tsp")

    def test_fingerprint_stable(self):
        a = SolverConfig.for_problem("maxcut", seed=3)
        assert a.fingerprint() == SolverConfig.for_problem("maxcut", seed=3).fingerprint()
        assert a.fingerprint() != SolverConfig.for_problem("maxcut", seed=4).fingerprint()

    @pytest.mark.parametrize("kw", [dict(t_max=0), dict(time_limit=0)])
    def test_solve_rejects_limits(self, kw):
        with pytest.raises(ConfigError):
            solve(EDGE, SolverConfig(batch=1, **kw))


class TestPrimitives:
    def test_init_run(self):
        s = init_run(3, SolverConfig(y0=6.0), 0)
        assert np.array_equal(s.y, [6.0, 6.0, 6.0]) and s.t == 0
        assert np.all((s.x >= 0) & (s.x <= 1))
        assert np.array_equal(init_run(1, SolverConfig(y0=5.0), 0).y, [5.0])
        again = init_run(3, SolverConfig(y0=6.0), 0)
        assert np.array_equal(s.x, again.x)
        assert not np.array_equal(s.x, init_run(3, SolverConfig(y0=6.0), 1).x)

    def test_project_unit(self):
        assert project_unit(1.3) == 1.0
        assert project_unit(-0.2) == 0.0
        assert project_unit(0.4) == 0.4

    def test_project_punctured(self):
        assert project_punctured(0.47, 0.1) == pytest.approx(0.4)
        assert project_punctured(0.55, 0.1) == pytest.approx(0.6)
        assert project_punctured(0.8, 0.1) == 0.8
        assert project_punctured(0.4, 0.1) == pytest.approx(0.4)

    def test_project_punctured_tie(self):
        with pytest.raises(ValueError):
            project_punctured(0.5, 0.1)
        sides = {round(project_punctured(0.5, 0.1, run_rng(0, r)), 12) for r in range(20)}
        assert sides == {0.4, 0.6}
        a = project_punctured(np.full(8, 0.5), 0.1, run_rng(5, 0))
        b = project_punctured(np.full(8, 0.5), 0.1, run_rng(5, 0))
        assert np.array_equal(a, b)

    def test_binarity_gap(self):
        assert binarity_gap([0, 1, 1]) == 0.0
        assert binarity_gap([0.5]) == 0.25
        assert binarity_gap([0.5, 0.5], ConstraintFunction("entropy")) == pytest.approx(
            2 * np.log(2))

    def test_snap(self):
        assert np.array_equal(snap([0.99, 0.02]), [1, 0])
        assert np.array_equal(snap([0.5]), [1])
        assert np.array_equal(snap([0, 1]), [0, 1])

    def test_dual_lower_bound(self):
        cfg = SolverConfig(alpha=0.025, beta=0.025, delta=0.1)
        assert dual_lower_bound(6.0, cfg) == pytest.approx(-35.1375, abs=1e-12)
        assert dual_lower_bound(0.0, cfg) == pytest.approx(-5.1375, abs=1e-12)
        assert dual_lower_bound(6.0, SolverConfig(g_kind=ConstraintFunction("entropy"))) is None


class TestStep:
    def test_fractional_point_is_perturbed(self):
        cfg = SolverConfig(delta=0.1)
        s = RunState(np.array([0.5, 0.5]), np.array([-1.0, -1.0]), 0, run_rng(0, 0))
        out = gda_step(s, EDGE, cfg)
        assert np.all(np.abs(out.x - 0.5) >= 0.1 - 1e-15)
        assert out.t == 1

    def test_positive_dual_blocks_perturbation(self):
        cfg = SolverConfig(delta=0.1, beta=0.025)
        s = RunState(np.array([0.5, 0.5]), np.array([6.0, 6.0]), 0, run_rng(0, 0))
        out = gda_step(s, EDGE, cfg)
        assert np.array_equal(out.x, [0.5, 0.5])
        np.testing.assert_allclose(out.y, 6.0 - 0.25 * 0.025, rtol=0, atol=1e-15)

    def test_binary_point_keeps_dual(self):
        s = RunState(np.array([1.0, 0.0]), np.array([2.0, -3.0]))
        out = gda_step(s, EDGE, SolverConfig())
        assert np.array_equal(out.y, [2.0, -3.0])

    def test_simultaneous_dual_uses_old_x(self):
        cfg = SolverConfig(alpha=0.5, beta=1.0)
        x = np.array([0.3, 0.9])
        s = RunState(x.copy(), np.zeros(2))
        out = gda_step(s, EDGE, cfg)
        np.testing.assert_allclose(out.y, x * x - x)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            gda_step(RunState(np.zeros(3), np.zeros(3)), EDGE, SolverConfig())

    def test_numeric_failure(self):
        p = MultilinearPolynomial(2, {(0, 1): 1e13})
        with pytest.raises(NumericFailure):
            gda_step(RunState(np.ones(2), np.zeros(2)), p, SolverConfig())


class TestSolve:
    def test_single_edge(self):
        rep = solve(EDGE, SolverConfig.for_problem("maxcut", batch=8), sense="max")
        assert rep.best_value == 1.0
        assert tuple(rep.best_binary) in {(0, 1), (1, 0)}
        assert rep.status == "ok"

    def test_constant(self):
        p = MultilinearPolynomial(3, constant=5.0)
        rep = solve(p, SolverConfig(batch=2))
        assert rep.best_value == 5.0
        assert rep.iterations_run <= 1

    def test_report_value_consistent(self):
        rng = np.random.default_rng(0)
        p = random_qubo(rng, 10)
        rep = solve(p, SolverConfig(batch=5, seed=1))
        assert rep.best_value == pytest.approx(p.evaluate(rep.best_binary.astype(float)))
        assert rep.trace[0].t == 0
        assert [r.t for r in rep.trace] == sorted(r.t for r in rep.trace)
        assert set(rep.trace_records()[0]) == {"t", "wall_s", "best", "gap", "min_dual"}

    def test_best_so_far_monotone(self):
        p = random_qubo(np.random.default_rng(1), 12)
        rep = solve(p, SolverConfig(batch=4))
        bests = [r.best for r in rep.trace]
        assert all(b2 <= b1 for b1, b2 in zip(bests, bests[1:]))

    def test_thread_count_does_not_matter(self):
        p = random_qubo(np.random.default_rng(2), 12)
        cfg = SolverConfig(batch=7, seed=11)
        a = solve(p, cfg, threads=1)
        b = solve(p, cfg, threads=3)
        assert np.array_equal(a.best_binary, b.best_binary)
        assert a.best_value == b.best_value
        assert a.iterations_run == b.iterations_run
        for ra, rb in zip(a.runs, b.runs):
            assert (ra.best_value, ra.best_t, ra.iterations, ra.status, ra.final_gap) == \
                   (rb.best_value, rb.best_t, rb.iterations, rb.status, rb.final_gap)
        assert [(r.t, r.best, r.gap, r.min_dual) for r in a.trace] == \
               [(r.t, r.best, r.gap, r.min_dual) for r in b.trace]

    def test_dual_monotone_and_bounded(self):
        p = random_qubo(np.random.default_rng(3), 15)
        cfg = SolverConfig(batch=4, t_max=3000)
        bound = dual_lower_bound(p.theta_upper_bound(), cfg)
        last = {}
        bad = []

        def watch(t, X, Y, ids):
            assert np.all((X >= 0) & (X <= 1))
            for row, run in zip(Y, ids):
                prev = last.get(int(run), np.full(p.n, cfg.y0))
                if np.any(row > prev) or np.any(row < bound):
                    bad.append((t, int(run)))
                last[int(run)] = row.copy()

        solve(p, cfg, callback=watch)
        assert not bad

    def test_avg_gap_slack(self):
        p = random_qubo(np.random.default_rng(4), 20)
        rep = solve(p, SolverConfig(batch=6))
        assert max(r.avg_gap_slack for r in rep.runs) <= 1e-8

    def test_runs_reach_eps_binary(self):
        p = random_qubo(np.random.default_rng(5), 14)
        rep = solve(p, SolverConfig(batch=10))
        assert all(r.eps_binary_iteration is not None for r in rep.runs)
        assert all(r.status == "converged" for r in rep.runs)

    def test_escape_and_control(self):
        G = gnp_graph(12, 0.4, seed=1)
        p = maxcut_to_poly(G)
        init = (np.full(p.n, 0.5), np.full(p.n, -1.0))
        esc = solve(p, SolverConfig(batch=3, t_max=20000), init=init)
        assert all(r.eps_binary_iteration is not None for r in esc.runs)
        stuck = []
        solve(p, SolverConfig(batch=1, t_max=300, perturb=False), init=init,
              callback=lambda t, X, Y, ids: stuck.append(np.array_equal(X, 0.5 + 0 * X)))
        assert all(stuck)

    @pytest.mark.slow
    def test_random_qubos_match_oracle(self):
        rng = np.random.default_rng(6)
        hits = 0
        for k in range(50):
            p = random_qubo(rng, 14)
            _, opt = brute_force_min(p)
            rep = solve(p, SolverConfig.for_problem("maxcut", seed=k))
            hits += abs(rep.best_value - opt) <= 1e-9
        assert hits >= 45

    def test_entropy_kind_runs(self):
        rep = solve(EDGE, SolverConfig(batch=4, g_kind=ConstraintFunction("entropy")),
                    sense="max")
        assert rep.best_value == 1.0
        assert all(np.isfinite(r.final_gap) for r in rep.runs)

    def test_trace_file(self, tmp_path):
        rep = solve(EDGE, SolverConfig(batch=2), sense="max")
        path = tmp_path / "trace.jsonl"
        rep.write_trace(path)
        assert len(path.read_text().splitlines()) == len(rep.trace)
