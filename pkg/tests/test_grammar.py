import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from logprep.grammar import ParseError, parse_rational, parse_term, print_term
from logprep.terms import (
    Add, Const, Inv, Mul, NamedSeries, Neg, Pow, Var, VarContext,
)

from strategies import gen_term

CTX1 = VarContext(1)
CTX2 = VarContext(2)


class TestParse:
    def test_single_variable(self):
        assert parse_term("x", CTX1) == Var(1)
        assert parse_term("t1", CTX1) == Var(0)
        assert parse_term("t2", CTX2) == Var(1)

    def test_nested_log_fixture_shape(self):
        t = parse_term(
            "arctan(log(max(log(t1^(4/1) + log(x^(2/1) + 2)), 1)))", CTX1
        )
        assert isinstance(t, NamedSeries)
        assert t.series.name == "arctan"

    def test_unbalanced_input_error_offset(self):
        with pytest.raises(ParseError) as err:
            parse_term("log(", CTX1)
        assert err.value.span.start == 4

    def test_unknown_series(self):
        with pytest.raises(ParseError):
            parse_term("series(nosuch; x)", CTX1)

    def test_unknown_variable(self):
        with pytest.raises(ParseError) as err:
            parse_term("t3 + 1", CTX1)
        assert "t1" in err.value.expected

    def test_error_spans_inside_input(self):
        for bad in ["", "x +", "min(x)", "x ^ 2", "root(1, x)", "piece { x -> 1 }"]:
            with pytest.raises(ParseError) as err:
                parse_term(bad, CTX1)
            assert 0 <= err.value.span.start <= len(bad)
            assert err.value.span.start <= err.value.span.end <= max(len(bad), err.value.span.start)

    def test_literal_folding(self):
        assert parse_term("3/2", CTX1) == Const(Fraction(3, 2))
        assert parse_term("-3/2", CTX1) == Const(Fraction(-3, 2))
        assert parse_term("x/2", CTX1) == Mul(Var(1), Inv(Const(Fraction(2))))
        assert parse_term("-(3/2)", CTX1) == Neg(Const(Fraction(3, 2)))

    def test_minus_before_power_stays_negation(self):
        t = parse_term("-3^(2/1)", CTX1)
        assert t == Neg(Pow(Const(Fraction(3)), Fraction(2)))

    def test_subtraction_desugars(self):
        t = parse_term("x - 1", CTX1)
        assert t == Add(Var(1), Neg(Const(Fraction(1))))

    def test_rational_exponent_forms(self):
        assert parse_term("x^(1/2)", CTX1) == Pow(Var(1), Fraction(1, 2))
        assert parse_term("x^(-1/2)", CTX1) == Pow(Var(1), Fraction(-1, 2))
        assert parse_term("x^(3)", CTX1) == Pow(Var(1), Fraction(3))

    def test_parse_rational(self):
        assert parse_rational("3/2") == Fraction(3, 2)
        assert parse_rational("-7") == Fraction(-7)
        with pytest.raises(ParseError):
            parse_rational("1/0")


class TestPrint:
    def test_variable(self):
        assert print_term(Var(1), CTX1) == "x"

    def test_negated_reciprocal_center(self):
        t = Neg(Inv(Var(0)))
        s = print_term(t, CTX1)
        assert s == "-(inv(t1))"
        assert parse_term(s, CTX1) == t

    def test_roundtrip_500_random_terms(self):
        rng = random.Random(99)
        for _ in range(500):
            t = gen_term(rng, CTX2, depth=4)
            s = print_term(t, CTX2)
            assert parse_term(s, CTX2) == t, s

    @settings(max_examples=200, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_roundtrip_property(self, seed):
        rng = random.Random(seed)
        t = gen_term(rng, CTX1, depth=5)
        assert parse_term(print_term(t, CTX1), CTX1) == t
