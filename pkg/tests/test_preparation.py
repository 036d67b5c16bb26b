import math
from dataclasses import replace
from fractions import Fraction

import pytest

from logprep import examples as ex
from logprep.cells import Cell, SamplePlan, plan_of_size
from logprep.preparation import (
    Construction, ERPreparingTuple, ExpFamily, GsaPreparedForm, HeirMember,
    InvalidInputError, LAPreparingTuple, MemberRef, NiceWitness, UnitSpec,
    unit_positivity, verify_er, verify_gsa, verify_heir, verify_la,
    verify_la_simultaneous, verify_nice,
)
from logprep.report import INCONCLUSIVE, REFUTED, VERIFIED
from logprep.scales import LogScale
from logprep.terms import (
    Add, Exp, Inv, Log, Mul, Neg, Pow, Var, const,
)

PLAN = plan_of_size(2000, 1, seed=7)


def unit_x_cell(nonzero=True):
    return Cell(
        name="unitx", nvars=0, t_box=(),
        lower=const(0), upper=const(1), nonzero_fiber=nonzero,
    )


PLAN0 = plan_of_size(800, 0, seed=7)


class TestUnits:
    def test_affine_unit_positive(self):
        pos = unit_positivity(ex.unit_affine(Fraction(1, 2)))
        assert pos.status == VERIFIED
        assert pos.lo > 0.4 and pos.hi < 1.6

    def test_identity_unit_refuted(self):
        v = UnitSpec("ident", 1, (((1,), Fraction(1)),))
        assert unit_positivity(v).status == REFUTED

    def test_square_unit_undecided(self):
        v = UnitSpec("square", 1, (((2,), Fraction(1)),))
        assert unit_positivity(v).status == INCONCLUSIVE

    def test_constant_unit(self):
        assert unit_positivity(ex.unit_const_one()).status == VERIFIED


class TestGsa:
    def test_identity_on_unit_fiber(self):
        form = GsaPreparedForm(
            "id", 0, const(0), const(1), Fraction(1),
            ex.unit_const_one(), (), (), "above",
        )
        rep = verify_gsa(form, Var(0), unit_x_cell(), PLAN0)
        assert rep.verdict == VERIFIED

    def test_affine_unit_fixture_and_mutation(self):
        form = ex.simple_gsa_form()
        rep = verify_gsa(form, ex.simple_gsa_term(), unit_x_cell(), PLAN0)
        assert rep.verdict == VERIFIED
        mutated = replace(form, q=Fraction(2))
        rep = verify_gsa(mutated, ex.simple_gsa_term(), unit_x_cell(), PLAN0)
        assert rep.verdict == REFUTED

    def test_straddling_center_refuted(self):
        form = replace(ex.simple_gsa_form(), theta=const(Fraction(1, 2)))
        rep = verify_gsa(form, ex.simple_gsa_term(), unit_x_cell(), PLAN0)
        assert rep.verdict == REFUTED
        assert any("side" == c.name for c in rep.checks)

    def test_center_shift_mutation_refuted(self):
        form = replace(ex.simple_gsa_form(), theta=const(Fraction(1, 10)), side="above")
        cell = Cell(
            name="upper", nvars=0, t_box=(),
            lower=const(Fraction(1, 5)), upper=const(1), nonzero_fiber=True,
        )
        rep = verify_gsa(form, ex.simple_gsa_term(), cell, PLAN0)
        assert rep.verdict == REFUTED


class TestLa:
    def test_depth0_reduction_matches_gsa(self):
        scale = ex.zero_center_unit_scale(0)
        tup = LAPreparingTuple(
            name="gsa_as_la", nvars=0, r=0, scale=scale,
            a=const(1), q=(Fraction(1),),
            unit=ex.unit_affine(Fraction(1, 2)),
            b=(const(1),), P=((Fraction(1),),),
        )
        rep_la = verify_la(tup, ex.simple_gsa_term(), unit_x_cell(), PLAN0)
        rep_gsa = verify_gsa(
            ex.simple_gsa_form(), ex.simple_gsa_term(), unit_x_cell(), PLAN0
        )
        assert rep_la.verdict == rep_gsa.verdict == VERIFIED
        bad = replace(tup, q=(Fraction(2),))
        assert verify_la(bad, ex.simple_gsa_term(), unit_x_cell(), PLAN0).verdict == REFUTED

    def test_window_fixture_tol(self):
        rep = verify_la(
            ex.exp_gap_la_tuple(), ex.exp_gap_prepared_term(),
            ex.exp_gap_cell(), PLAN, tol=1e-9,
        )
        assert rep.verdict == VERIFIED

    def test_leading_term_similarity_reported(self):
        rep = verify_la(
            ex.exp_gap_la_tuple(), ex.exp_gap_prepared_term(), ex.exp_gap_cell(), PLAN
        )
        assert rep.witnesses["delta_unit"] == pytest.approx(1.5, rel=1e-6)
        assert any(c.name == "leading-term" and c.verdict == VERIFIED for c in rep.checks)

    def test_mutations_flip_to_refuted(self):
        base = ex.exp_gap_la_tuple()
        f = ex.exp_gap_prepared_term()
        cell = ex.exp_gap_cell()
        for mutant in (
            replace(base, q=(Fraction(1), Fraction(-1))),
            replace(base, q=(Fraction(1, 2), Fraction(-1, 2))),
            replace(
                base,
                scale=replace(
                    base.scale,
                    center=(Add(ex.theta0_term(), const(Fraction(1, 10))), ex.theta1_term()),
                    epsilon_witnesses=None,
                ),
            ),
        ):
            assert verify_la(mutant, f, cell, PLAN).verdict == REFUTED

    def test_zero_column_prefix_structural(self):
        base = ex.exp_gap_la_tuple()
        ok = replace(base, P=((Fraction(0), Fraction(1)),), zero_column_prefix=1)
        f = Mul(
            Mul(Pow(ex.scale_y_terms(base.scale)[0], Fraction(1, 2)),
                Pow(ex.scale_y_terms(base.scale)[1], Fraction(-1))),
            Add(const(1), Mul(const(Fraction(1, 3)), Pow(ex.scale_y_terms(base.scale)[1], Fraction(1)))),
        )
        rep = verify_la(ok, f, ex.exp_gap_cell(), PLAN)
        assert not any(c.name == "zero-column-prefix" and c.verdict == REFUTED for c in rep.checks)
        bad = replace(base, zero_column_prefix=1)  # P has a nonzero first column
        rep = verify_la(bad, ex.exp_gap_prepared_term(), ex.exp_gap_cell(), PLAN)
        assert rep.verdict == REFUTED
        assert rep.checks[0].name == "zero-column-prefix"

    def test_simultaneous_shared_center(self):
        t1 = ex.exp_gap_la_tuple()
        t2 = replace(ex.exp_gap_la_tuple(), name="second", q=(Fraction(1, 2), Fraction(0)))
        f1 = ex.exp_gap_prepared_term()
        y0, _ = ex.scale_y_terms(t1.scale)
        f2 = Mul(Pow(y0, Fraction(1, 2)), Add(const(1), Mul(const(Fraction(1, 3)), y0)))
        rep = verify_la_simultaneous([t1, t2], [f1, f2], ex.exp_gap_cell(), PLAN)
        assert rep.verdict == VERIFIED

    def test_simultaneous_mismatched_centers_refuted(self):
        t1 = ex.exp_gap_la_tuple()
        other_scale = replace(t1.scale, center=(const(0), ex.theta1_term()))
        t2 = replace(t1, name="other", scale=other_scale)
        rep = verify_la_simultaneous(
            [t1, t2], [ex.exp_gap_prepared_term()] * 2, ex.exp_gap_cell(), PLAN
        )
        assert rep.verdict == REFUTED
        assert rep.checks[0].name == "shared-center"


class TestEr:
    def test_linear_exp_fixture(self):
        rep = verify_er(
            ex.linear_exp_er_tuple(), ex.linear_exp_term(), ex.linear_exp_cell(),
            ex.linear_exp_family(), plan_of_size(2000, 1, seed=3),
        )
        assert rep.verdict == VERIFIED
        assert any(c.name == "log-combination:exp_t" and c.verdict == VERIFIED for c in rep.checks)

    def test_intro_style_square_exponent(self):
        cell = unit_x_cell()
        scale = ex.zero_center_unit_scale(0, "x_only")
        family = ExpFamily(
            "sq", 0,
            {"one": const(1), "e_sq": ex.exp_square_term()},
        )
        zero = ERPreparingTuple(name="z", nvars=0, level=-1)
        c_tuple = ERPreparingTuple(
            name="c", nvars=0, level=0, r=0, scale=scale,
            a=const(1), q=(Fraction(0),),
            unit=UnitSpec("sq_unit", 1, (((0,), Fraction(1)), ((2,), Fraction(1)))),
            b=(const(1),), P=((Fraction(1),),),
            exp_c=("one", zero), exp_d=(("one", zero),),
        )
        top = ERPreparingTuple(
            name="esq", nvars=0, level=1, r=0, scale=scale,
            a=const(1), q=(Fraction(0),), unit=ex.unit_const_one(),
            b=(), P=(), exp_c=("e_sq", c_tuple), exp_d=(),
        )
        rep = verify_er(top, ex.exp_square_term(), cell, family, PLAN0)
        assert rep.verdict == VERIFIED

    def test_zero_level(self):
        zero = ERPreparingTuple(name="z", nvars=1, level=-1)
        rep = verify_er(
            zero, const(0), ex.linear_exp_cell(), ex.linear_exp_family(),
            plan_of_size(200, 1, seed=1),
        )
        assert rep.verdict == VERIFIED
        rep = verify_er(
            zero, Var(1), ex.linear_exp_cell(), ex.linear_exp_family(),
            plan_of_size(200, 1, seed=1),
        )
        assert rep.verdict == REFUTED

    def test_level0_matches_la_semantics(self):
        # a depth-0 exp-free certificate: f = x on (0,1)
        scale = ex.zero_center_unit_scale(1)
        family = ExpFamily("trivial", 1, {"one": const(1)})
        zero = ERPreparingTuple(name="z", nvars=1, level=-1)
        er = ERPreparingTuple(
            name="f", nvars=1, level=0, r=0, scale=scale,
            a=const(1), q=(Fraction(1),), unit=ex.unit_const_one(),
            b=(), P=(), exp_c=("one", zero), exp_d=(),
        )
        la = LAPreparingTuple(
            name="f_la", nvars=1, r=0, scale=scale, a=const(1),
            q=(Fraction(1),), unit=ex.unit_const_one(), b=(), P=(),
        )
        plan = plan_of_size(500, 1, seed=2)
        rep_er = verify_er(er, Var(1), ex.linear_exp_cell(), family, plan)
        rep_la = verify_la(la, Var(1), ex.linear_exp_cell(), plan)
        assert rep_er.verdict == rep_la.verdict == VERIFIED

    def test_nesting_depth_mismatch_refuted(self):
        base = ex.linear_exp_er_tuple()
        wrong = replace(base, exp_c=("exp_t", replace(base.exp_c[1], level=1)))
        rep = verify_er(
            wrong, ex.linear_exp_term(), ex.linear_exp_cell(),
            ex.linear_exp_family(), plan_of_size(200, 1, seed=1),
        )
        assert rep.verdict == REFUTED
        assert any(c.name == "nesting-depth" for c in rep.checks)

    def test_missing_member_invalid(self):
        family = ExpFamily("missing", 1, {"one": const(1)})
        with pytest.raises(InvalidInputError):
            verify_er(
                ex.linear_exp_er_tuple(), ex.linear_exp_term(),
                ex.linear_exp_cell(), family, plan_of_size(200, 1, seed=1),
            )

    def test_bad_witness_refuted(self):
        family = ExpFamily(
            "badwit", 1,
            {"one": const(1), "exp_t": Exp(Var(0))},
            witnesses={"exp_t": {"exp_t": Fraction(2)}},
        )
        rep = verify_er(
            ex.linear_exp_er_tuple(), ex.linear_exp_term(), ex.linear_exp_cell(),
            family, plan_of_size(200, 1, seed=1),
        )
        assert rep.verdict == REFUTED

    def test_mutations_flip_to_refuted(self):
        base = ex.linear_exp_er_tuple()
        plan = plan_of_size(500, 1, seed=4)
        for mutant in (
            replace(base, q=(Fraction(3, 2),)),
            replace(
                base,
                scale=replace(
                    base.scale,
                    center=(const(Fraction(1, 10)),),
                    epsilon_witnesses=None,
                ),
            ),
        ):
            rep = verify_er(
                mutant, ex.linear_exp_term(), ex.linear_exp_cell(),
                ex.linear_exp_family(), plan,
            )
            assert rep.verdict == REFUTED

    def test_exp_number_consistency(self):
        # the reassembled product has exp depth at most the tuple level
        from logprep.classify import exp_number_bound

        tup = ex.linear_exp_er_tuple()
        reassembled = Mul(
            Mul(tup.a, Pow(Var(1), Fraction(1))), Exp(Var(0))
        )
        bound = exp_number_bound(reassembled, ex.linear_exp_family())
        assert bound.bound <= tup.level


class TestHeir:
    def test_constant_one_with_zero_center_scale(self):
        scale = LogScale(
            name="logx", nvars=1, r=1,
            center=(const(0), const(0)), sign_pattern=("+", "-"),
        )
        cell = ex.linear_exp_cell()
        rep = verify_heir(const(1), cell, scale, 1, plan_of_size(500, 1, seed=2))
        assert rep.verdict == VERIFIED

    def test_window_heir(self):
        rep = verify_heir(
            ex.heir_candidate(), ex.exp_gap_cell(), ex.exp_gap_scale(), 1,
            plan_of_size(1000, 1, seed=2),
        )
        assert rep.verdict == VERIFIED

    def test_sign_flip_refuted(self):
        rep = verify_heir(
            Exp(Inv(Var(0))), ex.exp_gap_cell(), ex.exp_gap_scale(), 1,
            plan_of_size(500, 1, seed=2),
        )
        assert rep.verdict == REFUTED

    def test_x_dependent_candidate_refuted(self):
        rep = verify_heir(
            Exp(Var(1)), ex.exp_gap_cell(), ex.exp_gap_scale(), 1,
            plan_of_size(200, 1, seed=2),
        )
        assert rep.verdict == REFUTED

    def test_level_bounds(self):
        with pytest.raises(InvalidInputError):
            verify_heir(
                const(1), ex.exp_gap_cell(), ex.exp_gap_scale(), 2,
                plan_of_size(200, 1, seed=2),
            )


class TestNice:
    def test_exp_free_function_with_empty_family(self):
        g = Add(Inv(Var(0)), const(2))
        witness = NiceWitness(
            name="plain", nvars=1,
            tree=Construction(Var(0), (g,)),
            members={},
        )
        rep = verify_nice(g, ex.exp_gap_cell(), witness, plan_of_size(300, 1, seed=1))
        assert rep.verdict == VERIFIED

    def test_center_shift_witness(self):
        rep = verify_nice(
            ex.center_shift_target(), ex.exp_gap_cell(), ex.center_shift_witness(),
            plan_of_size(1000, 1, seed=1), tol=1e-9,
        )
        assert rep.verdict == VERIFIED

    def test_perturbed_tree_refuted(self):
        w = ex.center_shift_witness()
        bad_tree = Construction(
            combinator=Add(Add(Neg(Var(0)), Var(1)), const(Fraction(1, 10))),
            args=w.tree.args,
        )
        bad = NiceWitness(w.name, w.nvars, bad_tree, w.members)
        rep = verify_nice(
            ex.center_shift_target(), ex.exp_gap_cell(), bad,
            plan_of_size(500, 1, seed=1),
        )
        assert rep.verdict == REFUTED

    def test_unknown_member_invalid(self):
        tree = Construction(Var(0), (MemberRef("ghost"),))
        witness = NiceWitness("ghost", 1, tree, {})
        with pytest.raises(InvalidInputError):
            verify_nice(
                const(1), ex.exp_gap_cell(), witness, plan_of_size(200, 1, seed=1)
            )

    def test_exp_combinator_rejected(self):
        tree = Construction(Exp(Var(0)), (Inv(Var(0)),))
        witness = NiceWitness("expcomb", 1, tree, {})
        with pytest.raises(InvalidInputError):
            verify_nice(
                const(1), ex.exp_gap_cell(), witness, plan_of_size(200, 1, seed=1)
            )


class TestSimpleCellLaw:
    def test_nonzero_first_center_refuted_toward_zero(self):
        from logprep.cells import simple_cell_check

        cell = Cell(
            name="simple", nvars=1,
            t_box=((Fraction(0), Fraction(1)),),
            lower=const(0), upper=const(1), nonzero_fiber=True,
        )
        plan_geo = plan_of_size(
            1000, 1, seed=3, fiber_strategy="geometric-toward-lower"
        )
        assert simple_cell_check(cell, plan_geo).simple
        scale = LogScale(
            name="shifted", nvars=1, r=0,
            center=(const(1),), sign_pattern=("-",),
        )
        from logprep.scales import verify_scale

        rep = verify_scale(scale, cell, plan_geo)
        assert rep.verdict == REFUTED
