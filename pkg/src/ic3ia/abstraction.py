"""Implicit predicate abstraction encodings and an explicit-abstraction oracle.

The implicit encodings never build the abstract system: two concrete
states are tied to the same abstract state by asserting that every
predicate has the same truth value on both (``eq_formula``).  The explicit
abstraction is only a small-instance oracle for cross-checking.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping, Sequence

from . import terms as T
from .evaluate import evaluate
from .system import TransitionSystem
from .terms import (CURRENT, FROZEN, FROZEN_NEXT, NEXT, Clause, Cube, Literal, Term,
                    VarClass)


class ContractViolation(ValueError):
    """An input is not a formula over the current predicates."""


class OracleRefusal(RuntimeError):
    """The explicit abstraction would exceed its predicate bound."""


# Counts explicit_abstraction() invocations; the engine never calls it.
EXPLICIT_ABSTRACTION_CALLS = 0


class PredicateSet:
    """Ordered, append-only set of state predicates."""

    def __init__(self, preds: Iterable[Term] = ()):
        self._preds: list[Term] = []
        self._index: dict[Term, int] = {}
        self.extend(preds)

    def add(self, p: Term) -> bool:
        if not p.sort.is_bool:
            raise T.SortError(f"predicate {p} is not Boolean")
        if p.is_const:
            return False
        for v in T.free_vars(p):
            if v.varclass != CURRENT:
                raise ContractViolation(f"predicate {p} mentions non-current symbol {v}")
        if p in self._index:
            return False
        self._index[p] = len(self._preds)
        self._preds.append(p)
        return True

    def extend(self, preds: Iterable[Term]) -> list[Term]:
        return [p for p in preds if self.add(p)]

    def index(self, p: Term) -> int:
        return self._index[p]

    def __contains__(self, p) -> bool:
        return p in self._index

    def __iter__(self) -> Iterator[Term]:
        return iter(list(self._preds))

    def __len__(self) -> int:
        return len(self._preds)

    def __getitem__(self, i: int) -> Term:
        return self._preds[i]

    def as_set(self) -> frozenset:
        return frozenset(self._index)

    def copy(self) -> "PredicateSet":
        return PredicateSet(self._preds)

    def __repr__(self):
        return f"PredicateSet({', '.join(map(str, self._preds))})"


def _pred_list(preds) -> list[Term]:
    return list(preds)


def eq_formula(preds, a: VarClass, b: VarClass) -> Term:
    """Conjunction of p(X_a) <-> p(X_b) over the predicates, in order."""
    return T.mk_and(*(T.mk_iff(T.rename(p, CURRENT, a), T.rename(p, CURRENT, b))
                      for p in _pred_list(preds)))


def frozen_trans(ts: TransitionSystem) -> Term:
    return T.retag(ts.trans, {CURRENT: FROZEN, NEXT: FROZEN_NEXT})


def _as_term(x) -> Term:
    if isinstance(x, (Clause, Cube)):
        return x.to_term()
    return x


def abs_rel_ind(frame, ts: TransitionSystem, clause, preds) -> Term:
    """F(X) & c(X) & EQ(X,Xf) & T(Xf,Xf') & EQ(Xf',X') & ~c(X')."""
    f, c = _as_term(frame), _as_term(clause)
    pset = set(_pred_list(preds))
    for what, t in (("frame", f), ("clause", c)):
        if not T.is_p_formula(t, pset):
            bad = [a for a in T.atoms(t) if a not in pset]
            raise ContractViolation(f"{what} has atoms outside the predicates: "
                                    + ", ".join(map(str, bad)))
    return T.mk_and(f, c,
                    eq_formula(preds, CURRENT, FROZEN),
                    frozen_trans(ts),
                    eq_formula(preds, FROZEN_NEXT, NEXT),
                    T.mk_not(T.rename(c, CURRENT, NEXT)))


@dataclass
class AbsBmcParts:
    """Pieces of the abstract BMC encoding, with EQ conjuncts kept per predicate."""

    base: list[Term]
    eqs: dict[Term, list[Term]]

    def formula(self) -> Term:
        return T.mk_and(*self.base, *(e for es in self.eqs.values() for e in es))


def abs_bmc_parts(ts: TransitionSystem, preds, k: int,
                  step_cubes: Sequence | None = None,
                  negate_prop: bool = True) -> AbsBmcParts:
    if k < 1:
        raise ValueError("abstract BMC encoding needs at least one step")
    if step_cubes is not None and len(step_cubes) != k + 1:
        raise ValueError(f"expected {k + 1} step cubes, got {len(step_cubes)}")
    base = [T.rename(ts.init, CURRENT, T.step(0))]
    for h in range(1, k + 1):
        base.append(T.retag(ts.trans, {CURRENT: T.frozen_step(h - 1), NEXT: T.step(h)}))
    if negate_prop:
        base.append(T.mk_not(T.rename(ts.prop, CURRENT, T.frozen_step(k))))
    if step_cubes is not None:
        for i, cube in enumerate(step_cubes):
            if cube is not None:
                base.append(T.rename(_as_term(cube), CURRENT, T.step(i)))
    eqs = {}
    for p in _pred_list(preds):
        eqs[p] = [T.mk_iff(T.rename(p, CURRENT, T.step(h)),
                           T.rename(p, CURRENT, T.frozen_step(h))) for h in range(k + 1)]
    return AbsBmcParts(base, eqs)


def abs_bmc_encode(ts: TransitionSystem, preds, k: int,
                   step_cubes: Sequence | None = None,
                   negate_prop: bool = True) -> Term:
    """Abstract BMC of depth k: an abstract path from I to not-P."""
    return abs_bmc_parts(ts, preds, k, step_cubes, negate_prop).formula()


def extract_p_cube(model: Mapping[Term, object], preds, cls: VarClass = CURRENT) -> Cube:
    """The total predicate cube satisfied by ``model`` on the ``cls`` copy."""
    env = {}
    for v, val in model.items():
        if v.op == "var" and v.varclass == cls:
            env[T.var(v.name, v.sort, CURRENT)] = val
    lits = []
    for p in _pred_list(preds):
        lits.append(Literal(p, bool(evaluate(p, env))))
    return Cube(lits)


# ---------------------------------------------------------------------------
# Explicit abstraction (oracle)
# ---------------------------------------------------------------------------

@dataclass
class ExplicitAbstraction:
    preds: list[Term]
    abs_vars: list[Term]
    init_cubes: list[tuple[bool, ...]]
    trans_cubes: list[tuple[tuple[bool, ...], tuple[bool, ...]]]

    def _cube(self, bits, cls) -> Term:
        return T.mk_and(*(T.rename(x, CURRENT, cls) if b else T.mk_not(T.rename(x, CURRENT, cls))
                          for x, b in zip(self.abs_vars, bits)))

    @property
    def init(self) -> Term:
        return T.mk_or(*(self._cube(c, CURRENT) for c in self.init_cubes))

    @property
    def trans(self) -> Term:
        return T.mk_or(*(T.mk_and(self._cube(a, CURRENT), self._cube(b, NEXT))
                         for a, b in self.trans_cubes))

    def abstract(self, phi, cls: VarClass = CURRENT) -> Term:
        """Replace predicate atoms of a predicate formula by abstract variables."""
        phi = _as_term(phi)
        mapping = dict(zip(self.preds, self.abs_vars))
        if not T.is_p_formula(phi, mapping):
            raise ContractViolation(f"{phi} is not a formula over the predicates")

        def go(n: Term) -> Term:
            if n in mapping:
                return T.rename(mapping[n], CURRENT, cls)
            if n.is_const:
                return n
            return T._rebuild(n, tuple(go(a) for a in n.args))
        return go(phi)


def abs_var(i: int) -> Term:
    return T.var(f"$xp{i}", T.BOOL, CURRENT)


def _all_smt(ctx, formula: Term, project: list[Term]) -> list[tuple[bool, ...]]:
    found = []
    with ctx.scope():
        ctx.assert_formula(formula)
        while ctx.check().require():
            bits = tuple(bool(b) for b in ctx.get_values(project))
            found.append(bits)
            ctx.assert_formula(T.mk_or(*(T.mk_not(x) if b else x
                                         for x, b in zip(project, bits))))
            if not project:
                break
    # True before False at each position, earlier predicates most significant
    return sorted(found, reverse=True)


def explicit_abstraction(ts: TransitionSystem, preds, ctx, bound: int = 6) -> ExplicitAbstraction:
    """Enumerate the abstract initial states and transitions by All-SMT."""
    global EXPLICIT_ABSTRACTION_CALLS
    EXPLICIT_ABSTRACTION_CALLS += 1
    preds = _pred_list(preds)
    if len(preds) > bound:
        raise OracleRefusal(f"{len(preds)} predicates exceed the oracle bound {bound}")
    xs = [abs_var(i) for i in range(len(preds))]

    def h(state_cls, abs_cls):
        return T.mk_and(*(T.mk_iff(T.rename(x, CURRENT, abs_cls), T.rename(p, CURRENT, state_cls))
                          for x, p in zip(xs, preds)))

    init_cubes = _all_smt(ctx, T.mk_and(ts.init, h(CURRENT, CURRENT)), xs)
    nxt = [T.rename(x, CURRENT, NEXT) for x in xs]
    pairs = _all_smt(ctx, T.mk_and(ts.trans, h(CURRENT, CURRENT), h(NEXT, NEXT)), xs + nxt)
    n = len(xs)
    trans_cubes = [(bits[:n], bits[n:]) for bits in pairs]
    return ExplicitAbstraction(preds, xs, init_cubes, trans_cubes)
