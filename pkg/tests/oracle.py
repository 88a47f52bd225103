"""Independent oracle: translate terms into z3 Python expressions.

The translation walks the term structure directly, so it shares neither the
SMT-LIB printer nor the solver process with the code under test.
"""

from __future__ import annotations

import z3
from hypothesis import strategies as st

from ic3ia import terms as T
from ic3ia.system import TransitionSystem
from ic3ia.terms import Clause, Literal

_BIN = {
    "bvadd": lambda a, b: a + b, "bvsub": lambda a, b: a - b, "bvmul": lambda a, b: a * b,
    "bvand": lambda a, b: a & b, "bvor": lambda a, b: a | b, "bvxor": lambda a, b: a ^ b,
    "bvudiv": z3.UDiv, "bvurem": z3.URem, "bvshl": lambda a, b: a << b,
    "bvlshr": z3.LShR, "bvashr": lambda a, b: a >> b,
    "bvult": z3.ULT, "bvule": z3.ULE, "bvugt": z3.UGT, "bvuge": z3.UGE,
    "bvslt": lambda a, b: a < b, "bvsle": lambda a, b: a <= b,
    "bvsgt": lambda a, b: a > b, "bvsge": lambda a, b: a >= b,
}


def _sort(s: T.Sort):
    if s.is_bool:
        return z3.BoolSort()
    if s.kind == "Int":
        return z3.IntSort()
    if s.kind == "Real":
        return z3.RealSort()
    return z3.BitVecSort(s.width)


def to_z3(t: T.Term):
    memo = {}
    for n in T.postorder(t):
        a = [memo[x] for x in n.args]
        op = n.op
        if op == "var":
            r = z3.Const(T.default_symbol(n), _sort(n.sort))
        elif op == "const":
            v = n.payload
            if n.sort.is_bool:
                r = z3.BoolVal(v)
            elif n.sort.kind == "Int":
                r = z3.IntVal(v)
            elif n.sort.kind == "Real":
                r = z3.RealVal(f"{v.numerator}/{v.denominator}")
            else:
                r = z3.BitVecVal(v, n.sort.width)
        elif op == "and":
            r = z3.And(*a)
        elif op == "or":
            r = z3.Or(*a)
        elif op == "not":
            r = z3.Not(a[0])
        elif op == "=>":
            r = z3.Implies(*a)
        elif op == "xor":
            r = z3.Xor(*a)
        elif op == "=":
            r = z3.And(*(a[i] == a[i + 1] for i in range(len(a) - 1)))
        elif op == "distinct":
            r = z3.Distinct(*a)
        elif op == "ite":
            r = z3.If(*a)
        elif op == "+":
            r = z3.Sum(*a)
        elif op == "-":
            r = -a[0] if len(a) == 1 else a[0] - z3.Sum(*a[1:])
        elif op == "*":
            r = z3.Product(*a)
        elif op in ("<=", "<", ">=", ">"):
            f = {"<=": lambda x, y: x <= y, "<": lambda x, y: x < y,
                 ">=": lambda x, y: x >= y, ">": lambda x, y: x > y}[op]
            r = z3.And(*(f(a[i], a[i + 1]) for i in range(len(a) - 1)))
        elif op == "div":
            r = a[0] / a[1]
        elif op == "mod":
            r = a[0] % a[1]
        elif op == "abs":
            r = z3.Abs(a[0])
        elif op == "to_real":
            r = z3.ToReal(a[0])
        elif op == "bvnot":
            r = ~a[0]
        elif op == "bvneg":
            r = -a[0]
        elif op == "extract":
            r = z3.Extract(n.payload[0], n.payload[1], a[0])
        elif op == "zero_extend":
            r = z3.ZeroExt(n.payload[0], a[0])
        elif op == "concat":
            r = z3.Concat(*a)
        elif op in _BIN:
            r = _BIN[op](*a)
        else:
            raise NotImplementedError(op)
        memo[n] = r
    return memo[t]


def is_sat(*parts: T.Term) -> bool:
    s = z3.Solver()
    for p in parts:
        s.add(to_z3(p))
    res = s.check()
    assert res != z3.unknown
    return res == z3.sat


def valid(t: T.Term) -> bool:
    return not is_sat(T.mk_not(t))


def equivalent(a: T.Term, b: T.Term) -> bool:
    return valid(T.mk_iff(a, b))


# -- hypothesis strategies ----------------------------------------------------

INT_VARS = [T.var(n, T.INT) for n in ("x", "y", "z")]


@st.composite
def linear_atoms(draw, variables=INT_VARS, max_coef=3, max_const=6):
    """Random atoms ``sum c_i v_i  OP  k`` over the given integer variables."""
    vs = draw(st.lists(st.sampled_from(variables), min_size=1, max_size=len(variables),
                       unique=True))
    terms = []
    for v in vs:
        c = draw(st.integers(-max_coef, max_coef).filter(bool))
        terms.append(v if c == 1 else T.app("*", T.int_const(c), v))
    lhs = terms[0] if len(terms) == 1 else T.app("+", *terms)
    op = draw(st.sampled_from(["<=", ">=", "=", "<", ">"]))
    return T.app(op, lhs, T.int_const(draw(st.integers(-max_const, max_const))))


@st.composite
def bool_formulas(draw, leaves, max_depth=3):
    if max_depth == 0 or draw(st.booleans()):
        return draw(leaves)
    op = draw(st.sampled_from(["and", "or", "not", "=>"]))
    if op == "not":
        return T.mk_not(draw(bool_formulas(leaves, max_depth - 1)))
    a = draw(bool_formulas(leaves, max_depth - 1))
    b = draw(bool_formulas(leaves, max_depth - 1))
    return {"and": T.mk_and, "or": T.mk_or, "=>": T.mk_implies}[op](a, b)


def int_envs(variables=INT_VARS, lo=-8, hi=8):
    return st.fixed_dictionaries({v: st.integers(lo, hi) for v in variables})




# -- random small systems for the implicit vs explicit comparison -------------

def _rand_lin(rng, vs, max_coef=2):
    picked = rng.sample(vs, rng.randint(1, len(vs)))
    parts = []
    for v in picked:
        c = rng.choice([c for c in range(-max_coef, max_coef + 1) if c])
        parts.append(v if c == 1 else T.app("*", T.int_const(c), v))
    return parts[0] if len(parts) == 1 else T.app("+", *parts)


def random_atom(rng, vs, max_const=4):
    op = rng.choice(["<=", ">=", "=", "<"])
    return T.app(op, _rand_lin(rng, vs), T.int_const(rng.randint(-max_const, max_const)))


def random_transition(rng, vs):
    """Mix of functional updates and bounded nondeterministic ones."""
    parts = []
    for v in vs:
        vn = T.rename(v, T.CURRENT, T.NEXT)
        rhs = T.app("+", _rand_lin(rng, vs), T.int_const(rng.randint(-2, 2)))
        kind = rng.random()
        if kind < 0.6:
            parts.append(T.mk_eq(vn, rhs))
        elif kind < 0.85:
            parts.append(T.app("<=", rhs, vn))
            parts.append(T.app("<=", vn, T.app("+", rhs, T.int_const(rng.randint(0, 3)))))
        else:
            guard = random_atom(rng, vs)
            parts.append(T.mk_eq(vn, T.mk_ite(guard, rhs, v)))
    return T.mk_and(*parts)


def random_p_formula(rng, preds, depth=2):
    if not preds:
        return T.TRUE
    if depth == 0 or rng.random() < 0.3:
        p = rng.choice(preds)
        return p if rng.random() < 0.5 else T.mk_not(p)
    op = rng.choice([T.mk_and, T.mk_or])
    return op(random_p_formula(rng, preds, depth - 1), random_p_formula(rng, preds, depth - 1))


def random_instance(rng):
    """(system, predicates, frame, clause) with 1-3 Int variables and 1-4 predicates."""
    vs = INT_VARS[:rng.randint(1, 3)]
    preds = []
    while len(preds) < rng.randint(1, 4):
        a = random_atom(rng, vs)
        if a not in preds:
            preds.append(a)
    init = T.mk_and(*(T.mk_eq(v, T.int_const(rng.randint(-2, 2))) for v in vs))
    ts = TransitionSystem(tuple(vs), init, random_transition(rng, vs), random_atom(rng, vs))
    lits = rng.sample(preds, rng.randint(1, len(preds)))
    clause = Clause(Literal(p, rng.random() < 0.5) for p in lits)
    frame = random_p_formula(rng, preds)
    return ts, preds, frame, clause


def explicit_rel_ind_sat(ea, frame, clause) -> bool:
    """Sat of F^ & c^ & T^ & ~c^' over an explicit abstraction, decided by z3."""
    c = clause.to_term()
    return is_sat(ea.abstract(frame), ea.abstract(c), ea.trans,
                  T.mk_not(ea.abstract(c, T.NEXT)))
