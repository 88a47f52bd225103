import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ic3ia import abstraction as A
from ic3ia import terms as T
from ic3ia.abstraction import (ContractViolation, OracleRefusal, PredicateSet, abs_bmc_encode,
                               abs_rel_ind, eq_formula, explicit_abstraction, extract_p_cube)
from ic3ia.evaluate import evaluate
from ic3ia.solver import SolverContext
from ic3ia.system import bad_at, bmc_unroll, parse_vmt
from ic3ia.terms import CURRENT, FROZEN, Clause, Cube, Literal
from conftest import counter_vmt, eq, ge
from oracle import (INT_VARS, explicit_rel_ind_sat, int_envs, is_sat, linear_atoms,
                    random_instance, valid)

x, y, z = INT_VARS
xf, yf = T.var("x", T.INT, FROZEN), T.var("y", T.INT, FROZEN)


def test_predicate_set_is_ordered_and_append_only():
    ps = PredicateSet([ge(x, 0), eq(x, 3)])
    assert ps.extend([eq(x, 3), ge(y, 1)]) == [ge(y, 1)]
    assert list(ps) == [ge(x, 0), eq(x, 3), ge(y, 1)]
    assert ps.index(ge(y, 1)) == 2
    assert not ps.add(T.TRUE)
    with pytest.raises(ContractViolation):
        ps.add(T.rename(ge(x, 0), CURRENT, T.NEXT))


def test_eq_formula_examples():
    assert eq_formula([], CURRENT, FROZEN) is T.TRUE
    lt = T.app("<", x, y)
    got = eq_formula([ge(x, 0), lt], CURRENT, FROZEN)
    assert got is T.mk_and(T.mk_iff(ge(x, 0), ge(xf, 0)), T.mk_iff(lt, T.app("<", xf, yf)))


@settings(max_examples=30, deadline=None)
@given(st.lists(linear_atoms(), min_size=1, max_size=5, unique=True), st.data())
def test_eq_monotone(big, data):
    small = data.draw(st.lists(st.sampled_from(big), unique=True))
    assert valid(T.mk_implies(eq_formula(big, CURRENT, FROZEN), eq_formula(small, CURRENT, FROZEN)))


def test_abs_rel_ind_s1_unsat(s1):
    c = Clause([Literal(ge(x, 0))])
    assert not is_sat(abs_rel_ind(T.TRUE, s1, c, [ge(x, 0)]))


def test_abs_rel_ind_decrement_sat(ctx):
    ts, _ = parse_vmt(counter_vmt(trans="(= x.next (- x 1))"))
    preds = [ge(x, 0)]
    c = Clause([Literal(ge(x, 0))])
    ctx.assert_formula(abs_rel_ind(T.TRUE, ts, c, preds))
    assert ctx.check().is_sat
    m = ctx.get_model([x, xf, T.var("x", T.INT, T.FROZEN_NEXT), T.var("x", T.INT, T.NEXT)])
    cube = extract_p_cube(m, preds)
    assert cube == Cube([Literal(ge(x, 0))])
    # re-asserting the cube with the model's values is consistent
    assert is_sat(cube.to_term(), eq(x, m[x]))


def test_abs_rel_ind_contract(s1):
    c = Clause([Literal(T.app("<", y, z))])
    with pytest.raises(ContractViolation):
        abs_rel_ind(T.TRUE, s1, c, [ge(x, 0)])


def test_abs_bmc_safe_counter(s1):
    for k in range(1, 5):
        assert not is_sat(abs_bmc_encode(s1, [ge(x, 0)], k))
    with pytest.raises(ValueError):
        abs_bmc_encode(s1, [ge(x, 0)], 0)


def test_abs_bmc_s3_spurious_path(s3):
    assert is_sat(abs_bmc_encode(s3, [eq(x, 0), eq(x, 3)], 2))
    assert not is_sat(bmc_unroll(s3, 2, bad_at(s3, 2)))


def test_abs_bmc_exact_for_boolean_system():
    b = T.var("b", T.BOOL)
    text = ("(declare-fun b () Bool)\n(declare-fun b.next () Bool)\n"
            "(define-fun .sv0 () Bool (! b :next b.next))\n"
            "(define-fun .init () Bool (! (not b) :init true))\n"
            "(define-fun .trans () Bool (! (= b.next (not b)) :trans true))\n"
            "(define-fun .p0 () Bool (! (not b) :invar-property 0))\n")
    ts, _ = parse_vmt(text)
    for k in range(1, 4):
        assert is_sat(abs_bmc_encode(ts, [b], k)) == is_sat(bmc_unroll(ts, k, bad_at(ts, k)))


def test_extract_p_cube_examples():
    preds = [ge(x, 0), eq(x, 3)]
    assert extract_p_cube({x: -1}, preds) == Cube([Literal(ge(x, 0), False),
                                                  Literal(eq(x, 3), False)])
    assert len(extract_p_cube({x: -1}, [])) == 0


@given(st.lists(linear_atoms(), max_size=4, unique=True), int_envs())
def test_extract_p_cube_is_the_satisfied_total_cube(preds, env):
    cube = extract_p_cube(env, preds)
    assert cube.atoms() == preds
    assert evaluate(cube.to_term(), env) is True


def test_explicit_abstraction_s1(s1, ctx):
    ea = explicit_abstraction(s1, [ge(x, 0)], ctx)
    xp = A.abs_var(0)
    assert ea.init_cubes == [(True,)]
    assert ea.trans_cubes == [((True,), (True,)), ((False,), (True,)), ((False,), (False,))]
    assert ea.init is xp


def test_explicit_abstraction_without_predicates(s1, ctx):
    assert explicit_abstraction(s1, [], ctx).init is T.TRUE


def test_explicit_abstraction_bound(s1, ctx):
    preds = [ge(x, i) for i in range(7)]
    with pytest.raises(OracleRefusal):
        explicit_abstraction(s1, preds, ctx)


@settings(max_examples=25, deadline=None)
@given(st.randoms(use_true_random=False))
def test_abstraction_commutes_with_negation(solver_config, rnd):
    ts, preds, frame, _ = random_instance(rnd)
    with SolverContext(solver_config) as c:
        ea = explicit_abstraction(ts, preds, c)
    assert ea.abstract(T.mk_not(frame)) is T.mk_not(ea.abstract(frame))


@settings(max_examples=40, deadline=None)
@given(st.randoms(use_true_random=False))
def test_implicit_matches_explicit_abstraction(solver_config, rnd):
    ts, preds, frame, clause = random_instance(rnd)
    with SolverContext(solver_config) as c:
        implicit = c.is_sat(abs_rel_ind(frame, ts, clause, preds))
        ea = explicit_abstraction(ts, preds, c)
    assert implicit == explicit_rel_ind_sat(ea, frame, clause)
