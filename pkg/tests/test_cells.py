import math
from fractions import Fraction

import pytest

from logprep import examples as ex
from logprep.cells import (
    Cell, DegenerateCellError, SamplePlan, UnsupportedLiftError, lift,
    plan_of_size, region_filter, sample, simple_cell_check, t_samples,
)
from logprep.scales import values_or_none
from logprep.terms import (
    Abs, Add, Log, Mul, Neg, Pow, Var, const, eval_value,
)


def unit_cell(name="unit", nonzero=False):
    return Cell(
        name=name,
        nvars=1,
        t_box=((Fraction(0), Fraction(1)),),
        lower=const(0),
        upper=const(1),
        nonzero_fiber=nonzero,
    )


class TestSampling:
    def test_grid_count_and_interior(self):
        pts = sample(unit_cell(), SamplePlan(t_counts=(10,), fiber_count=10))
        assert len(pts) == 100
        for t, x in pts:
            assert 0.0 < t < 1.0
            assert 0.0 < x < 1.0

    def test_deterministic_under_seed(self):
        plan = SamplePlan(t_counts=(7,), fiber_count=5, seed=123)
        assert sample(unit_cell(), plan) == sample(unit_cell(), plan)
        other = SamplePlan(t_counts=(7,), fiber_count=5, seed=124)
        assert sample(unit_cell(), other) != sample(unit_cell(), plan)

    def test_low_discrepancy_strategy(self):
        plan = SamplePlan(t_counts=(16,), fiber_count=4, t_strategy="low-discrepancy")
        pts = sample(unit_cell(), plan)
        assert len(pts) == 64
        assert len({p[0] for p in pts}) == 16

    def test_geometric_accumulates_toward_lower(self):
        plan = SamplePlan(
            t_counts=(2,), fiber_count=64, fiber_strategy="geometric-toward-lower"
        )
        pts = [x for _, x in sample(unit_cell(), plan)]
        below = sum(1 for x in pts if x < 0.1)
        above = sum(1 for x in pts if x > 0.9)
        assert below > 4 * max(above, 1)

    def test_exp_gap_samples_respect_bounds(self):
        cell = ex.exp_gap_cell()
        plan = plan_of_size(2000, 1, seed=9)
        for p in sample(cell, plan):
            lo = eval_value(cell.lower, p)
            hi = eval_value(cell.upper, p)
            assert lo < p[-1] < hi

    def test_degenerate_cell_error_names_t(self):
        cell = Cell(
            name="deg",
            nvars=1,
            t_box=((Fraction(0), Fraction(1)),),
            lower=const(0),
            upper=const(0),
        )
        with pytest.raises(DegenerateCellError) as err:
            sample(cell, SamplePlan(t_counts=(3,), fiber_count=3))
        assert "t=" in str(err.value)

    def test_unbounded_fiber_uses_span_cap(self):
        cell = Cell(
            name="halfline",
            nvars=1,
            t_box=((Fraction(0), Fraction(1)),),
            lower=const(1),
            upper=None,
        )
        plan = SamplePlan(t_counts=(3,), fiber_count=10, unbounded_span=100.0)
        for p in sample(cell, plan):
            assert 1.0 < p[-1] < 101.0

    def test_plan_validation(self):
        with pytest.raises(Exception):
            SamplePlan(t_counts=(1,), fiber_count=10)
        with pytest.raises(Exception):
            SamplePlan(boundary_margin=0.7)

    def test_t_samples_dedup(self):
        pts = sample(unit_cell(), SamplePlan(t_counts=(5,), fiber_count=9))
        assert len(t_samples(pts)) == 5


class TestLift:
    def test_identity_lift(self):
        cell = unit_cell()
        plan = SamplePlan(t_counts=(5,), fiber_count=5)
        lifted = lift(cell, Var(1), plan)
        assert lifted.lower == cell.lower
        assert lifted.upper == cell.upper

    def test_negation_swaps_and_negates(self):
        cell = unit_cell()
        plan = SamplePlan(t_counts=(5,), fiber_count=5)
        lifted = lift(cell, Neg(Var(1)), plan)
        for t in (0.2, 0.8):
            assert eval_value(lifted.lower, (t, 0.0)) == -1.0
            assert eval_value(lifted.upper, (t, 0.0)) == 0.0

    def test_log_lift_of_exp_gap(self):
        cell = ex.exp_gap_cell()
        plan = plan_of_size(400, 1, seed=1)
        f = Log(Abs(Add(Var(1), Neg(ex.theta0_term()))))
        lifted = lift(cell, f, plan)
        # image bounds evaluate to -2/t + 2 exp(-1/t) and -1/t
        for t in (0.1, 0.5, 0.9):
            lo = eval_value(lifted.lower, (t, 0.0))
            hi = eval_value(lifted.upper, (t, 0.0))
            # substituted bounds subtract nearly equal quantities, so allow
            # for the cancellation noise of the tiny exponential offset
            assert lo == pytest.approx(-2.0 / t + 2.0 * math.exp(-1.0 / t), abs=1e-6)
            assert hi == pytest.approx(-1.0 / t, abs=1e-6)
        for p in sample(cell, plan):
            image = eval_value(f, p)
            assert eval_value(lifted.lower, p) < image < eval_value(lifted.upper, p)

    def test_non_monotone_lift_rejected(self):
        cell = Cell(
            name="sym",
            nvars=1,
            t_box=((Fraction(0), Fraction(1)),),
            lower=const(-1),
            upper=const(1),
        )
        plan = SamplePlan(t_counts=(4,), fiber_count=9)
        with pytest.raises(UnsupportedLiftError):
            lift(cell, Pow(Var(1), Fraction(2)), plan)


class TestRegions:
    def test_depth0_asymptotic_filter_keeps_all(self):
        scale = ex.zero_center_unit_scale(1)
        pts = sample(unit_cell(nonzero=True), SamplePlan(t_counts=(4,), fiber_count=4))
        kept = region_filter(values_or_none(scale), ("gt", 5.0), pts)
        assert kept == pts

    def test_partition_property(self):
        scale = ex.exp_gap_scale()
        cell = ex.exp_gap_cell()
        pts = sample(cell, plan_of_size(2000, 1, seed=4))
        vals = values_or_none(scale)
        for M in (0.5, 2.0, 10.0):
            gt = set(region_filter(vals, ("gt", M), pts))
            les = set(region_filter(vals, ("le", 1, M), pts))
            assert gt | les == set(pts)
            assert gt.isdisjoint(les)

    def test_bounded_filter_with_huge_threshold(self):
        scale = ex.exp_gap_scale()
        cell = ex.exp_gap_cell()
        pts = sample(cell, plan_of_size(500, 1, seed=4))
        kept = region_filter(values_or_none(scale), ("le", 1, 1e9), pts)
        assert kept == pts

    def test_invalid_threshold(self):
        scale = ex.exp_gap_scale()
        pts = sample(ex.exp_gap_cell(), plan_of_size(100, 1, seed=0))
        with pytest.raises(ValueError):
            region_filter(values_or_none(scale), ("gt", -1.0), pts)


class TestSimpleCells:
    def test_unit_interval_cell_is_simple(self):
        rep = simple_cell_check(unit_cell(), SamplePlan(t_counts=(5,), fiber_count=5))
        assert rep.simple

    def test_exp_gap_cell_is_not(self):
        rep = simple_cell_check(ex.exp_gap_cell(), plan_of_size(100, 1))
        assert not rep.simple

    def test_symmetric_cell_is_not(self):
        cell = Cell(
            name="sym",
            nvars=1,
            t_box=((Fraction(0), Fraction(1)),),
            lower=const(-1),
            upper=const(1),
        )
        rep = simple_cell_check(cell, SamplePlan(t_counts=(5,), fiber_count=5))
        assert not rep.simple
