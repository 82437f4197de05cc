import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mgdesign.linearize import (BlockError, MilpBlock, abs_value,
                                bilinear_binary, combine, polygon_soc,
                                pwl_quadratic)
from mgdesign.solver import get_backend, solve

FALLBACK = get_backend("fallback")


def polygon_accepts(block_rows, p, q):
    for row in block_rows:
        lhs = sum(coef * {"p": p, "q": q}.get(name, 0.0) for name, coef in row.coeffs)
        if row.sense == "<=" and lhs > row.rhs + 1e-12:
            return False
    return True


class TestPolygonSoc:
    def test_square_geometry(self):
        frag = polygon_soc("p", "q", 1.0, 4)
        assert len(frag.rows) == 4
        assert polygon_accepts(frag.rows, 0.5, 0.5)      # on the boundary
        assert not polygon_accepts(frag.rows, 0.8, 0.4)  # |p|+|q| = 1.2

    def test_twelve_sides_radius(self):
        # dense angular sweep: vertices reach the circle, edges shrink by cos(pi/n)
        frag = polygon_soc("p", "q", 1.0, 12)
        max_r = 0.0
        min_boundary = math.inf
        for phi in np.linspace(0, 2 * math.pi, 20_000, endpoint=False):
            # largest radius along phi that all rows accept
            r_max_dir = math.inf
            for row in frag.rows:
                coef = sum(c * (math.cos(phi) if n == "p" else math.sin(phi))
                           for n, c in row.coeffs)
                if coef > 1e-15:
                    r_max_dir = min(r_max_dir, row.rhs / coef)
            max_r = max(max_r, r_max_dir)
            min_boundary = min(min_boundary, r_max_dir)
        assert max_r == pytest.approx(1.0, abs=1e-6)
        assert min_boundary == pytest.approx(math.cos(math.pi / 12), abs=1e-6)

    def test_rejects_bad_side_count(self):
        with pytest.raises(BlockError):
            polygon_soc("p", "q", 1.0, 3)
        with pytest.raises(BlockError):
            polygon_soc("p", "q", 1.0, 7)

    @given(n=st.sampled_from([4, 6, 8, 12, 16, 32]),
           s=st.floats(0.1, 50.0),
           p=st.floats(-60.0, 60.0), q=st.floats(-60.0, 60.0))
    @settings(max_examples=400)
    def test_soundness_never_exceeds_circle(self, n, s, p, q):
        frag = polygon_soc("p", "q", s, n)
        if polygon_accepts(frag.rows, p, q):
            assert p * p + q * q <= s * s * (1 + 1e-9)

    def test_gated_by_scaled_variable_term(self):
        # rating times an installation binary: y=0 forces the flow to zero
        block = MilpBlock()
        block.var("p")
        block.var("q")
        block.var("y", 0, 1, "b")
        block.merge(polygon_soc("p", "q", ("y", 5.0), 8))
        block.row({"y": 1.0}, "==", 0.0)
        block.obj("p", -1.0)
        res = solve(block, backend=FALLBACK)
        assert res.objective == pytest.approx(0.0, abs=1e-9)


class TestPwlQuadratic:
    def test_single_segment_tangent_at_apex(self):
        y, frag = pwl_quadratic("x", 1.0, 1)
        block = MilpBlock()
        block.var("x", 0.0, 0.0)
        block.merge(frag)
        block.obj(y, 1.0)
        res = solve(block, backend=FALLBACK)
        assert res.objective == pytest.approx(0.0, abs=1e-9)

    def test_ten_segments_near_exact(self):
        # evaluate every tangent row at x = 1.3 and compare with 1.69
        y, frag = pwl_quadratic("x", 2.0, 10, x_min=0.0)
        best = max((2 * m * 1.3 - m * m)
                   for m in [0.0 + (j + 0.5) * 0.2 for j in range(10)])
        assert best == pytest.approx(1.69, rel=0.01)
        block = MilpBlock()
        block.var("x", 1.3, 1.3)
        block.merge(frag)
        block.obj(y, 1.0)
        res = solve(block, backend=FALLBACK)
        assert res.objective == pytest.approx(best, abs=1e-9)

    @given(x_max=st.floats(0.5, 100.0), segments=st.integers(1, 24),
           t=st.floats(0.0, 1.0))
    @settings(max_examples=300)
    def test_underestimates_with_bounded_gap(self, x_max, segments, t):
        x = -x_max + 2 * x_max * t
        width = 2 * x_max / segments
        mids = [-x_max + (j + 0.5) * width for j in range(segments)]
        surrogate = max(2 * m * x - m * m for m in mids)
        assert surrogate <= x * x + 1e-9
        # worst case sits at the breakpoints: (width/2)^2
        assert x * x - surrogate <= (width / 2) ** 2 + 1e-9

    def test_rejects_unbounded(self):
        with pytest.raises(BlockError):
            pwl_quadratic("x", math.inf, 4)


class TestAbsValue:
    @pytest.mark.parametrize("fixed,expected", [(-3.0, 3.0), (0.0, 0.0)])
    def test_reflection(self, fixed, expected):
        block = MilpBlock()
        block.var("x", fixed, fixed)
        name, frag = abs_value("x")
        block.merge(frag)
        block.obj(name, 1.0)
        res = solve(block, backend=FALLBACK)
        assert res.objective == pytest.approx(expected, abs=1e-9)

    def test_forced_interior_value(self):
        block = MilpBlock()
        block.var("x", -2.0, 5.0)
        block.row({"x": 1.0}, "==", 4.0)
        name, frag = abs_value("x")
        block.merge(frag)
        block.obj(name, 1.0)
        res = solve(block, backend=FALLBACK)
        assert res.objective == pytest.approx(4.0, abs=1e-9)


class TestBilinearBinary:
    @pytest.mark.parametrize("y,x,expected", [(1, 3.7, 3.7), (0, 3.7, 0.0)])
    def test_passthrough_and_annihilation(self, y, x, expected):
        block = MilpBlock()
        block.var("y", y, y, "b")
        block.var("x", x, x)
        z, frag = bilinear_binary("y", "x", 10.0)
        block.merge(frag)
        block.obj(z, 1.0)
        assert solve(block, backend=FALLBACK).objective == pytest.approx(expected, abs=1e-9)
        block.objective[z] = -1.0
        assert -solve(block, backend=FALLBACK).objective == pytest.approx(expected, abs=1e-9)

    def test_exhaustive_corners(self):
        for y in (0, 1):
            for x in (0.0, 2.5, 10.0):
                for sense in (1.0, -1.0):
                    block = MilpBlock()
                    block.var("y", y, y, "b")
                    block.var("x", x, x)
                    z, frag = bilinear_binary("y", "x", 10.0)
                    block.merge(frag)
                    block.obj(z, sense)
                    res = solve(block, backend=FALLBACK)
                    assert sense * res.objective == pytest.approx(y * x, abs=1e-9)

    @given(x_max=st.floats(0.5, 200.0), t=st.floats(0.0, 1.0),
           y=st.integers(0, 1), sense=st.sampled_from([1.0, -1.0]))
    @settings(max_examples=120, deadline=None)
    def test_exactness_property(self, x_max, t, y, sense):
        x = t * x_max
        block = MilpBlock()
        block.var("y", y, y, "b")
        block.var("x", x, x)
        z, frag = bilinear_binary("y", "x", x_max)
        block.merge(frag)
        block.obj(z, sense)
        res = solve(block, backend=FALLBACK)
        assert sense * res.objective == pytest.approx(y * x, abs=1e-7 * max(1, x_max))


class TestBlockComposition:
    def _fragment(self, name, coef):
        b = MilpBlock()
        b.var(name, 0, 10)
        b.row({name: 1.0}, "<=", 5.0, (f"tag_{name}",))
        b.obj(name, coef)
        return b

    def _canonical(self, block):
        return (sorted(block.variables.items()),
                sorted((r.coeffs, r.sense, r.rhs) for r in block.rows),
                sorted(block.objective.items()))

    def test_merge_associative_and_order_independent(self):
        parts = [self._fragment(f"x{i}", float(i)) for i in range(4)]
        left = combine(combine(parts[0], parts[1]), combine(parts[2], parts[3]))
        right = combine(parts[3], parts[2], parts[1], parts[0])
        assert self._canonical(left) == self._canonical(right)

    def test_shared_variable_aliases_with_bound_intersection(self):
        a = MilpBlock()
        a.var("x", 0, 10)
        b = MilpBlock()
        b.var("x", 2, 20)
        merged = combine(a, b)
        assert merged.variables["x"].lb == 2
        assert merged.variables["x"].ub == 10

    def test_kind_clash_rejected(self):
        a = MilpBlock()
        a.var("x", 0, 1, "b")
        b = MilpBlock()
        b.var("x", 0, 1, "c")
        with pytest.raises(BlockError):
            combine(a, b)

    def test_bind_folds_constants_and_detects_violation(self):
        block = MilpBlock()
        block.var("x", 0, 10)
        block.var("y", 0, 10)
        block.row({"x": 1.0, "y": 1.0}, "<=", 5.0)
        block.obj("x", 2.0)
        bound = block.bind({"x": 3.0})
        assert "x" not in bound.variables
        assert bound.obj_offset == pytest.approx(6.0)
        assert bound.rows[0].rhs == pytest.approx(2.0)
        violated = block.bind({"x": 3.0, "y": 4.0})
        assert violated.const_infeasible is not None

    def test_dump_lp_is_readable(self):
        block = MilpBlock()
        block.var("x", 0, 3)
        block.row({"x": 1.0}, "<=", 3.0, ("cap",))
        block.obj("x", -1.0)
        text = block.dump_lp()
        assert "minimize:" in text and "cap" in text and "x" in text
