from fractions import Fraction

import pytest
import z3
from hypothesis import given, settings
from hypothesis import strategies as st

from ic3ia import terms as T
from ic3ia.evaluate import EvaluationError, evaluate
from ic3ia.smtlib import (BVLiteral, Decimal, SmtLibError, Symbol, TermBuilder, is_complete,
                          parse_sexps, parse_value, render)
from oracle import INT_VARS, bool_formulas, int_envs, linear_atoms, to_z3

x, y, z = INT_VARS
formulas = bool_formulas(linear_atoms())
W = 4
bv_a, bv_b = T.var("a", T.bv_sort(W)), T.var("b", T.bv_sort(W))
BV_OPS = ["bvadd", "bvsub", "bvmul", "bvand", "bvor", "bvxor", "bvudiv", "bvurem",
          "bvshl", "bvlshr", "bvashr"]
BV_CMPS = ["bvult", "bvule", "bvslt", "bvsle", "bvugt", "bvsge"]


def z3_value(t, env):
    sub = [(to_z3(v), z3.IntVal(val)) for v, val in env.items()]
    return z3.simplify(z3.substitute(to_z3(t), *sub))


@given(formulas, int_envs())
def test_evaluate_agrees_with_z3_on_lia(t, env):
    assert evaluate(t, env) == z3.is_true(z3_value(t, env))


@given(st.sampled_from(BV_OPS + BV_CMPS), st.integers(0, 15), st.integers(0, 15))
def test_evaluate_agrees_with_z3_on_bv(op, av, bv):
    t = T.app(op, bv_a, bv_b)
    got = evaluate(t, {bv_a: av, bv_b: bv})
    expect = z3.simplify(z3.substitute(to_z3(t), (to_z3(bv_a), z3.BitVecVal(av, W)),
                                       (to_z3(bv_b), z3.BitVecVal(bv, W))))
    if t.sort.is_bool:
        assert got == z3.is_true(expect)
    else:
        assert got == expect.as_long()


def test_evaluate_int_division_rounds_towards_floor_for_positive_divisor():
    d = T.app("div", x, T.int_const(2))
    m = T.app("mod", x, T.int_const(2))
    assert evaluate(d, {x: -3}) == -2 and evaluate(m, {x: -3}) == 1


def test_evaluate_reals_are_exact():
    r = T.var("r", T.REAL)
    t = T.app("+", r, T.real_const(Fraction(1, 3)))
    assert evaluate(t, {r: Fraction(2, 3)}) == 1


def test_evaluate_missing_variable():
    with pytest.raises(EvaluationError):
        evaluate(T.app(">=", x, T.int_const(0)), {})


def test_parse_sexps_atoms():
    sx = parse_sexps("(f |a b| #b101 #x1f 2.5 -3 :k \"s\"\"q\") ; comment\nfoo")
    assert len(sx) == 2
    f = sx[0]
    assert f[1] == Symbol("a b")
    assert f[2] == BVLiteral((5, 3)) and f[3] == BVLiteral((31, 8))
    assert isinstance(f[4], Decimal) and f[4] == Fraction(5, 2)
    assert f[5] == Symbol("-3")
    assert f[7] == 's"q'


def test_parse_sexps_unbalanced():
    with pytest.raises(SmtLibError):
        parse_sexps("(a (b)")
    with pytest.raises(SmtLibError):
        parse_sexps("a)")


def test_is_complete():
    assert is_complete("(a (b c))")
    assert not is_complete("(a (b c)")
    assert not is_complete("(a |)|")
    assert is_complete("sat\n")
    assert not is_complete("  ; only a comment\n")


def test_parse_value():
    assert parse_value(parse_sexps("(- 5)")[0]) == -5
    assert parse_value(parse_sexps("(/ 1.0 3.0)")[0]) == Fraction(1, 3)
    assert parse_value(parse_sexps("(_ bv12 8)")[0]) == 12
    assert parse_value(parse_sexps("true")[0]) is True
    assert parse_value(parse_sexps("4")[0], T.REAL) == Fraction(4)


def test_term_builder_let_and_define_fun():
    tb = TermBuilder({"x": x, "y": y})
    t = tb.term(parse_sexps("(let ((s (+ x y))) (>= s 0))")[0])
    assert t is T.app(">=", T.app("+", x, y), T.int_const(0))
    with pytest.raises(SmtLibError, match="unknown symbol"):
        tb.term(parse_sexps("(>= w 0)")[0])
    with pytest.raises(SmtLibError, match="sort error"):
        tb.term(parse_sexps("(and x y)")[0])


@settings(max_examples=50)
@given(formulas)
def test_print_parse_round_trip(t):
    tb = TermBuilder({v.name: v for v in INT_VARS})
    assert tb.term(parse_sexps(T.to_smtlib(t))[0]) is t


@given(st.recursive(st.sampled_from([Symbol("a"), Symbol("b c"), 7]),
                    lambda kids: st.lists(kids, max_size=3), max_leaves=8))
def test_render_round_trip(sx):
    assert parse_sexps(render(sx)) == [sx]
