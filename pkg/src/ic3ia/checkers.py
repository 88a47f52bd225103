"""Concrete reference engines (BMC, k-induction) and invariant validation.

These work on the concrete system only.  They serve as the ``bmc`` and
``kind`` CLI engines and as independent oracles in the test suite.
"""

from __future__ import annotations

from typing import Iterable

from . import terms as T
from .abstraction import eq_formula, frozen_trans
from .solver import SolverContext
from .system import (ConcretePath, TransitionSystem, at_step, extract_path, step_vars,
                     trans_at)
from .terms import CURRENT, FROZEN, FROZEN_NEXT, NEXT, Term


def bmc_check(ts: TransitionSystem, depth: int, ctx: SolverContext) -> ConcretePath | None:
    """A concrete path of exactly ``depth`` steps ending in a bad state, if any."""
    f = T.mk_and(at_step(ts.init, 0), *(trans_at(ts, i) for i in range(depth)),
                 T.mk_not(at_step(ts.prop, depth)))
    with ctx.scope():
        ctx.assert_formula(f)
        if ctx.check().require():
            return extract_path(ctx.get_model(step_vars(ts, depth)), ts, depth)
    return None


def bmc(ts: TransitionSystem, max_depth: int, ctx: SolverContext) -> ConcretePath | None:
    """Shortest counterexample of length at most ``max_depth``, incrementally."""
    with ctx.scope():
        ctx.assert_formula(at_step(ts.init, 0))
        for d in range(max_depth + 1):
            if d > 0:
                ctx.assert_formula(trans_at(ts, d - 1))
            bad = at_step(T.mk_not(ts.prop), d)
            with ctx.scope():
                ctx.assert_formula(bad)
                if ctx.check().require():
                    return extract_path(ctx.get_model(step_vars(ts, d)), ts, d)
    return None


def kind_step(ts: TransitionSystem, k: int, ctx: SolverContext) -> bool:
    """True when P holding on k consecutive states forces it on the next one."""
    parts = [at_step(ts.prop, i) for i in range(k)]
    parts += [trans_at(ts, i) for i in range(k)]
    parts.append(T.mk_not(at_step(ts.prop, k)))
    return not ctx.is_sat(T.mk_and(*parts))


def kind(ts: TransitionSystem, max_k: int, ctx: SolverContext):
    """k-induction: ("unsafe", path), ("safe", k) or ("unknown", max_k)."""
    for k in range(0, max_k + 1):
        path = bmc_check(ts, k, ctx)
        if path is not None:
            return "unsafe", path
        if k >= 1 and kind_step(ts, k, ctx):
            return "safe", k
    return "unknown", max_k


def invariant_checks(ts: TransitionSystem, inv: Term, ctx: SolverContext,
                     preds: Iterable[Term] | None = None) -> dict[str, bool]:
    """Initiation, consecution and safety of ``inv``.

    With ``preds`` the consecution check uses the implicit abstraction
    (which is stronger, since the abstraction over-approximates T);
    without, it uses the concrete transition relation.
    """
    if preds is None:
        step = ts.trans
    else:
        preds = list(preds)
        step = T.mk_and(eq_formula(preds, CURRENT, FROZEN), frozen_trans(ts),
                        eq_formula(preds, FROZEN_NEXT, NEXT))
    return {
        "initiation": not ctx.is_sat(T.mk_and(ts.init, T.mk_not(inv))),
        "consecution": not ctx.is_sat(T.mk_and(inv, step, T.mk_not(T.rename(inv, CURRENT, NEXT)))),
        "safety": not ctx.is_sat(T.mk_and(inv, T.mk_not(ts.prop))),
    }
