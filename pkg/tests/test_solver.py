import itertools

import pytest

from mgdesign.linearize import MilpBlock
from mgdesign.solver import (MissingHandle, SolverError, SolverParams, extract,
                             get_backend, solve)

BACKENDS = [get_backend("highs"), get_backend("fallback")]


def one_row_lp():
    b = MilpBlock()
    b.var("x")
    b.row({"x": 1.0}, "<=", 3.0)
    b.obj("x", -1.0)
    return b


def knapsack():
    values = [6.0, 10.0, 12.0]
    weights = [1.0, 2.0, 3.0]
    b = MilpBlock()
    for i, v in enumerate(values):
        b.var(f"y{i}", 0, 1, "b")
        b.obj(f"y{i}", -v)
    b.row({f"y{i}": w for i, w in enumerate(weights)}, "<=", 5.0)
    # brute force over all 8 subsets
    best = max(sum(v for v, pick in zip(values, c) if pick)
               for c in itertools.product([0, 1], repeat=3)
               if sum(w for w, pick in zip(weights, c) if pick) <= 5.0)
    return b, best


@pytest.mark.parametrize("backend", BACKENDS, ids=lambda b: b.name)
class TestSolveContract:
    def test_one_row_lp(self, backend):
        res = solve(one_row_lp(), backend=backend)
        assert res.status == "optimal"
        assert res.objective == pytest.approx(-3.0)
        assert res.value("x") == pytest.approx(3.0)

    def test_knapsack_matches_brute_force(self, backend):
        block, best = knapsack()
        res = solve(block, backend=backend)
        assert res.status == "optimal"
        assert -res.objective == pytest.approx(best)
        assert best == 22.0

    def test_infeasible_has_no_values(self, backend):
        b = MilpBlock()
        b.var("x")
        b.row({"x": 1.0}, ">=", 1.0)
        b.row({"x": 1.0}, "<=", 0.0)
        res = solve(b, backend=backend)
        assert res.status == "infeasible"
        assert res.values is None and res.objective is None

    def test_unbounded(self, backend):
        b = MilpBlock()
        b.var("x")
        b.obj("x", -1.0)
        res = solve(b, backend=backend)
        assert res.status == "unbounded"

    def test_resolve_is_deterministic(self, backend):
        block, _ = knapsack()
        first = solve(block, SolverParams(seed=3), backend=backend)
        second = solve(block, SolverParams(seed=3), backend=backend)
        assert first.status == second.status
        assert first.objective == pytest.approx(second.objective, rel=1e-9)
        assert first.values == second.values

    def test_optimal_respects_gap_contract(self, backend):
        block, _ = knapsack()
        res = solve(block, SolverParams(gap=1e-6), backend=backend)
        assert res.status == "optimal"
        assert abs(res.objective - res.bound) <= 1e-6 * max(1.0, abs(res.objective)) + 1e-9

    def test_const_infeasible_after_bind(self, backend):
        b = MilpBlock()
        b.var("x", 0, 10)
        b.row({"x": 1.0}, ">=", 6.0)
        bound = b.bind({"x": 2.0})
        assert solve(bound, backend=backend).status == "infeasible"

    def test_infeasible_subblock_infects_superset(self, backend):
        from mgdesign.linearize import combine

        core = MilpBlock()
        core.var("x")
        core.row({"x": 1.0}, ">=", 1.0)
        core.row({"x": 1.0}, "<=", 0.0)
        extra = MilpBlock()
        extra.var("y", 0, 5)
        extra.obj("y", 1.0)
        assert solve(core, backend=backend).status == "infeasible"
        assert solve(combine(extra, core), backend=backend).status == "infeasible"


class TestFallbackLimits:
    def test_refuses_many_binaries(self):
        b = MilpBlock()
        for i in range(26):
            b.var(f"y{i}", 0, 1, "b")
            b.obj(f"y{i}", -1.0)
        with pytest.raises(SolverError):
            solve(b, backend=get_backend("fallback"))


class TestBackendSelection:
    def test_env_variable_selects(self, monkeypatch):
        monkeypatch.setenv("MGDESIGN_SOLVER", "fallback")
        assert get_backend().name == "fallback"
        monkeypatch.delenv("MGDESIGN_SOLVER")
        assert get_backend().name == "highs"

    def test_unknown_backend(self):
        with pytest.raises(SolverError):
            get_backend("cplex")


class TestExtract:
    def test_maps_handles(self):
        res = solve(one_row_lp(), backend=get_backend("fallback"))
        out = extract({"cap_kw": "x"}, res)
        assert out == {"cap_kw": pytest.approx(3.0)}

    def test_missing_handle(self):
        res = solve(one_row_lp(), backend=get_backend("fallback"))
        with pytest.raises(MissingHandle):
            extract({"cap_kw": "nope"}, res)
