import pickle

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ic3ia import terms as T
from ic3ia.terms import (CURRENT, FROZEN, FROZEN_NEXT, NEXT, Clause, Cube, Literal,
                         RenameError, SortError)
from oracle import INT_VARS, bool_formulas, linear_atoms

x = T.var("x", T.INT)
y = T.var("y", T.INT)
b = T.var("b", T.BOOL)
ZERO = T.int_const(0)

CLASSES = [NEXT, FROZEN, FROZEN_NEXT, T.step(0), T.step(7), T.frozen_step(3)]
formulas = bool_formulas(st.one_of(linear_atoms(), st.just(b)))


def test_sorts():
    assert T.bv_sort(8).is_bv and T.bv_sort(8).width == 8
    with pytest.raises(SortError):
        T.bv_sort(0)
    assert T.INT.is_numeric and not T.BOOL.is_numeric


def test_structural_equality_is_identity():
    assert T.app("+", x, T.int_const(1)) is T.app("+", x, T.int_const(1))
    assert T.var("x", T.INT) is x
    assert T.var("x", T.INT, NEXT) is not x
    assert T.var("x", T.REAL) is not x


def test_interning_survives_pickle():
    t = T.app("<=", T.app("+", x, T.int_const(1)), y)
    assert pickle.loads(pickle.dumps(t)) is t


def test_ill_sorted_terms_rejected():
    with pytest.raises(SortError):
        T.app("and", x, b)
    with pytest.raises(SortError):
        T.app("bvadd", x, x)
    with pytest.raises(SortError):
        T.app("=", x, b)
    with pytest.raises(SortError):
        T.app("extract", T.var("v", T.bv_sort(4)), params=(4, 0))


def test_boolean_constant_folding():
    assert T.mk_and() is T.TRUE
    assert T.mk_or(b, T.TRUE) is T.TRUE
    assert T.mk_and(b, T.FALSE) is T.FALSE
    assert T.mk_not(T.mk_not(b)) is b
    assert T.mk_and(b, b) is b


def test_rename_examples():
    assert T.rename(T.TRUE, CURRENT, NEXT) is T.TRUE
    t = T.app("<=", T.app("+", x, T.int_const(1)), y)
    xp, yp = T.var("x", T.INT, NEXT), T.var("y", T.INT, NEXT)
    assert T.rename(t, CURRENT, NEXT) is T.app("<=", T.app("+", xp, T.int_const(1)), yp)
    g = T.app(">=", x, ZERO)
    assert T.rename(T.rename(g, CURRENT, FROZEN), FROZEN, CURRENT) is g


def test_rename_rejects_mixed_classes():
    mixed = T.app("=", T.var("x", T.INT, NEXT), y)
    with pytest.raises(RenameError, match="'x'"):
        T.rename(mixed, CURRENT, FROZEN)


def test_rename_leaves_aux_symbols():
    a = T.aux_var("$act")
    t = T.mk_and(a, T.app(">=", x, ZERO))
    r = T.rename(t, CURRENT, NEXT)
    assert a in T.free_vars(r)


def test_atoms_examples():
    t = T.mk_and(T.app(">=", x, ZERO), T.mk_or(b, T.app("<", y, x)))
    assert set(T.atoms(t)) == {T.app(">=", x, ZERO), b, T.app("<", y, x)}
    assert T.atoms(T.TRUE) == []
    eq3 = T.app("=", x, T.int_const(3))
    assert T.atoms(T.mk_not(eq3)) == [eq3]
    with pytest.raises(SortError):
        T.atoms(x)


def test_atoms_look_through_boolean_equality_and_ite():
    p, q = T.var("p", T.BOOL), T.var("q", T.BOOL)
    assert set(T.atoms(T.mk_iff(p, q))) == {p, q}
    assert set(T.atoms(T.mk_ite(p, q, b))) == {p, q, b}


def test_negate_cube_examples():
    l1, l2 = T.app(">=", x, ZERO), T.app("<", y, ZERO)
    cube = Cube([Literal(l1), Literal(l2)])
    assert cube.negate() == Clause([Literal(l1, False), Literal(l2, False)])
    single = Cube([Literal(l1)])
    assert T.negate_cube(single).to_term() is T.mk_not(l1)
    p, q = T.var("p", T.BOOL), T.var("q", T.BOOL)
    assert T.negate_cube(Cube([Literal(p), Literal(q, False)])) == \
        Clause([Literal(p, False), Literal(q)])


def test_literal_sets_reject_duplicate_atoms():
    with pytest.raises(ValueError):
        Cube([Literal(b), Literal(b, False)])


def test_clause_subsumption():
    small = Clause([Literal(b)])
    big = Clause([Literal(b), Literal(T.app(">=", x, ZERO))])
    assert small.subsumes(big) and not big.subsumes(small)


def test_is_p_formula_examples():
    g, e = T.app(">=", x, ZERO), T.app("=", x, T.int_const(3))
    assert T.is_p_formula(T.mk_or(g, e), {g, e})
    assert not T.is_p_formula(T.mk_or(g, T.app("<", y, T.int_const(2))), {g})
    assert T.is_p_formula(T.TRUE, set())


def test_printing():
    t = T.app("<=", T.app("+", T.var("x", T.INT, T.step(2)), T.int_const(-1)), y)
    assert T.to_smtlib(t) == "(<= (+ x@2 (- 1)) y)"
    assert T.to_smtlib(T.real_const("1/2")) == "(/ 1.0 2.0)"
    assert T.to_smtlib(T.bv_const(5, 4)) == "#b0101"
    assert T.quote_symbol("let") == "|let|"


@given(formulas, st.sampled_from(CLASSES))
def test_rename_round_trip(t, cls):
    assert T.rename(T.rename(t, CURRENT, cls), cls, CURRENT) is t


@given(formulas, st.sampled_from(CLASSES))
def test_atoms_commute_with_rename(t, cls):
    renamed = {T.rename(a, CURRENT, cls) for a in T.atoms(t)}
    assert set(T.atoms(T.rename(t, CURRENT, cls))) == renamed


@given(formulas)
def test_atoms_are_not_connectives(t):
    for a in T.atoms(t):
        assert a.sort.is_bool
        assert a.op not in T.BOOL_CONNECTIVES


@given(formulas, st.data())
def test_p_formula_closed_under_negation(t, data):
    atoms = T.atoms(t)
    preds = set(data.draw(st.lists(st.sampled_from(atoms), unique=True))) if atoms else set()
    assert T.is_p_formula(T.mk_not(t), preds) == T.is_p_formula(t, preds)
    assert T.is_p_formula(t, set(atoms))


@settings(max_examples=50)
@given(st.lists(st.tuples(linear_atoms(), st.booleans()), min_size=1, max_size=4,
                unique_by=lambda p: p[0]))
def test_cube_clause_negation_round_trip(lits):
    cube = Cube(Literal(a, s) for a, s in lits)
    assert T.negate_clause(T.negate_cube(cube)) == cube
    assert len(cube.negate()) == len(cube)


def test_substitute_checks_sorts():
    with pytest.raises(SortError):
        T.substitute(x, {x: b})
    assert T.substitute(T.app("+", x, y), {x: y}) is T.app("+", y, y)


def test_free_vars_first_occurrence_order():
    t = T.app("<=", T.app("+", y, x), x)
    assert T.free_vars(t) == [y, x]
    assert INT_VARS[0] is x
