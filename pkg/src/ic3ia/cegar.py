"""Counterexample simulation, predicate refinement and predicate reduction."""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass, field
from typing import Sequence

from . import terms as T
from .abstraction import abs_bmc_encode, abs_bmc_parts
from .solver import NotSupported, SolverContext
from .system import (ConcretePath, TransitionSystem, extract_path, step_vars, trans_at)
from .terms import CURRENT, NEXT, Cube, Term

log = logging.getLogger(__name__)

REFINE_MODES = ("itp", "core", "wp")


class RefinementFailure(RuntimeError):
    """No refinement mode could remove the spurious counterexample."""


class NotApplicable(RuntimeError):
    """A refinement mode does not apply to this system."""


@dataclass
class AbstractCex:
    """Sequence of predicate cubes s_0 .. s_k forming an abstract path to a bad state."""

    steps: list[Cube]

    @property
    def k(self) -> int:
        return len(self.steps) - 1

    def __len__(self):
        return len(self.steps)


@dataclass
class Concrete:
    path: ConcretePath


@dataclass
class SpuriousAt:
    prefix_length: int
    core: set
    groups: list[Term]


@dataclass
class RefinementResult:
    new_predicates: list[Term]
    mode: str
    candidates: list[Term] = field(default_factory=list)


def step_groups(ts: TransitionSystem, cex: AbstractCex) -> list[Term]:
    """g_0 = I & s_0 at step 0; g_i = T(i-1,i) & s_i at step i; not-P joins the last."""
    k = cex.k
    groups = []
    for i, cube in enumerate(cex.steps):
        parts = [T.rename(ts.init, CURRENT, T.step(0))] if i == 0 else [trans_at(ts, i - 1)]
        parts.append(T.rename(cube.to_term(), CURRENT, T.step(i)))
        if i == k:
            parts.append(T.mk_not(T.rename(ts.prop, CURRENT, T.step(k))))
        groups.append(T.mk_and(*parts))
    return groups


def simulate(ts: TransitionSystem, cex: AbstractCex, ctx: SolverContext):
    """Bounded model check of the concrete system restricted to the cubes of ``cex``."""
    groups = step_groups(ts, cex)
    with ctx.scope():
        for i, g in enumerate(groups):
            ctx.assert_formula(g, label=f"g{i}")
        if ctx.check().require():
            model = ctx.get_model(step_vars(ts, cex.k))
            return Concrete(extract_path(model, ts, cex.k))
        core = ctx.get_core()
    prefix = 1 + max(int(lbl[1:]) for lbl in core) if core else len(groups)
    return SpuriousAt(prefix, core, groups)


def removal_check(ts: TransitionSystem, preds, cex: AbstractCex, ctx: SolverContext) -> bool:
    """True when ``cex`` is no longer an abstract path under ``preds``."""
    return not ctx.is_sat(abs_bmc_encode(ts, list(preds), cex.k, cex.steps))


def unindex(atom: Term) -> Term | None:
    """Map a step-indexed atom to the current-state copy; None if it spans steps."""
    classes = {v.varclass for v in T.free_vars(atom)}
    if not classes or None in classes:
        return None
    if len(classes) != 1:
        return None
    (cls,) = classes
    if cls.kind != "step":
        return None
    return T.rename(atom, cls, CURRENT)


def nested_atoms(t: Term) -> list[Term]:
    """Atoms of ``t`` plus the atoms of conditions buried in term-level ites."""
    out: list[Term] = []
    stack = [t]
    while stack:
        f = stack.pop()
        for a in T.atoms(f):
            if a not in out:
                out.append(a)
            for n in T.postorder(a):
                if n.op == "ite" and not n.sort.is_bool:
                    stack.append(n.args[0])
    return out


def fold_offsets(t: Term) -> Term:
    """Merge nested constant offsets: (x + c1) + c2 becomes x + (c1 + c2)."""
    memo: dict[Term, Term] = {}
    for node in T.postorder(t):
        args = tuple(memo[a] for a in node.args)
        n = node
        if any(x is not y for x, y in zip(args, node.args)):
            n = T._rebuild(node, args)
        if n.op in ("+", "bvadd") and len(n.args) == 2 and n.args[1].is_const:
            inner, c2 = n.args
            if inner.op == n.op and len(inner.args) == 2 and inner.args[1].is_const:
                base, c1 = inner.args
                if n.op == "+":
                    total = c1.payload + c2.payload
                    n = base if total == 0 else T.app("+", base, T.const(total, n.sort))
                else:
                    w = n.sort.width
                    total = (c1.payload + c2.payload) % (1 << w)
                    n = base if total == 0 else T.app("bvadd", base, T.bv_const(total, w))
        memo[node] = n
    return memo[t]


def functional_updates(ts: TransitionSystem) -> dict[Term, Term]:
    """x -> e(X) for a transition relation of the form AND_x (x' = e(X))."""
    updates: dict[Term, Term] = {}
    for c in T.conjuncts(ts.trans):
        if c.op != "=" or len(c.args) != 2:
            raise NotApplicable(f"conjunct {c} is not a next-state assignment")
        a, b = c.args
        for lhs, rhs in ((a, b), (b, a)):
            if lhs.op == "var" and lhs.varclass == NEXT and \
                    all(v.varclass != NEXT for v in T.free_vars(rhs)):
                cur = T.var(lhs.name, lhs.sort, CURRENT)
                if cur in updates:
                    raise NotApplicable(f"{lhs.name} assigned twice")
                updates[cur] = rhs
                break
        else:
            raise NotApplicable(f"conjunct {c} is not a next-state assignment")
    missing = [v for v in ts.state_vars if v not in updates]
    if missing:
        raise NotApplicable("no next-state assignment for " + ", ".join(v.name for v in missing))
    return updates


class Refiner:
    """Discovers predicates that rule out spurious abstract counterexamples."""

    def __init__(self, ts: TransitionSystem, ctx: SolverContext,
                 modes: Sequence[str] = REFINE_MODES, weaken: bool = True,
                 check_interpolants: bool = True):
        for m in modes:
            if m not in REFINE_MODES:
                raise ValueError(f"unknown refinement mode {m!r}")
        self.ts = ts
        self.ctx = ctx
        self.modes = tuple(modes)
        self.weaken = weaken
        self.check_interpolants = check_interpolants
        self.stats: Counter = Counter()
        self.interpolant_failures: list[str] = []

    # -- interpolation ------------------------------------------------------
    def interpolant_problems(self, a: Term, b: Term, itp: Term, shared: set) -> list[str]:
        problems = []
        if self.ctx.is_sat(T.mk_and(a, T.mk_not(itp))):
            problems.append("A does not entail the interpolant")
        if self.ctx.is_sat(T.mk_and(itp, b)):
            problems.append("interpolant is consistent with B")
        extra = [v for v in T.free_vars(itp) if v not in shared]
        if extra:
            problems.append("interpolant mentions non-shared symbols " + ", ".join(map(str, extra)))
        return problems

    def _weakenings(self, atom: Term) -> list[Term]:
        if atom.op != "=" or len(atom.args) != 2:
            return []
        a, b = atom.args
        if a.sort.is_numeric:
            return [T.app("<=", a, b), T.app(">=", a, b)]
        if a.sort.is_bv:
            return [T.app("bvule", a, b), T.app("bvuge", a, b)]
        return []

    def weaken_interpolant(self, a: Term, b: Term, itp: Term) -> Term:
        """Relax equalities into inequalities while the interpolant stays valid."""
        for atom in T.atoms(itp):
            for cand in self._weakenings(atom):
                trial = T.transform(itp, lambda n, atom=atom, cand=cand: cand if n is atom else None)
                self.stats["itp_weaken_tries"] += 1
                if not self.ctx.is_sat(T.mk_and(a, T.mk_not(trial))) and \
                        not self.ctx.is_sat(T.mk_and(trial, b)):
                    self.stats["itp_weakened"] += 1
                    itp = trial
                    break
        return itp

    def _itp_candidates(self, cex: AbstractCex, groups: list[Term]) -> tuple[list[Term], list[Term]]:
        if not self.ctx.supports_interpolants:
            raise NotSupported("interpolation disabled")
        strong: list[Term] = []
        weak: list[Term] = []
        used = 0
        # Sequence interpolants: each cut summarises the previous interpolant
        # and one more group, so consecutive interpolants chain through T.
        # After a failed cut the next one falls back to the whole prefix.
        carry: Term | None = None
        for j in range(cex.k):
            prefix = carry if carry is not None else T.mk_and(*groups[:j])
            a = T.mk_and(prefix, groups[j])
            b = T.mk_and(*groups[j + 1:])
            shared = set(T.free_vars(a)) & set(T.free_vars(b))
            carry = None
            try:
                itp = self.ctx.interpolate(a, b)
            except NotSupported as e:
                self.stats["itp_unavailable"] += 1
                log.info("no interpolant at cut %d: %s", j, e)
                continue
            self.stats["itp_computed"] += 1
            if self.check_interpolants:
                problems = self.interpolant_problems(a, b, itp, shared)
                self.stats["itp_checked"] += 1
                if problems:
                    self.stats["itp_rejected"] += 1
                    self.interpolant_failures.append(f"cut {j}: {itp}: {'; '.join(problems)}")
                    log.warning("discarding interpolant at cut %d: %s", j, "; ".join(problems))
                    continue
            w = self.weaken_interpolant(a, b, itp) if self.weaken else itp
            if w is not itp and self.check_interpolants:
                self.stats["itp_checked"] += 1
                if self.interpolant_problems(a, b, w, shared):
                    self.stats["itp_rejected"] += 1
                    w = itp
            self.stats["itp_used"] += 1
            used += 1
            carry = w
            for dest, src in ((strong, itp), (weak, w)):
                for atom in T.atoms(src):
                    u = unindex(atom)
                    if u is None:
                        log.warning("dropping interpolant atom %s spanning steps", atom)
                        continue
                    if u not in dest:
                        dest.append(u)
        if not used:
            raise NotSupported("no usable interpolant at any cut")
        return weak, strong

    # -- unsat core -----------------------------------------------------------
    def _core_candidates(self, cex: AbstractCex) -> list[Term]:
        ts, k = self.ts, cex.k
        with self.ctx.scope():
            self.ctx.assert_formula(T.rename(ts.init, CURRENT, T.step(0)), label="init")
            for i in range(k):
                self.ctx.assert_formula(trans_at(ts, i), label=f"t{i}")
            for i, cube in enumerate(cex.steps):
                self.ctx.assert_formula(T.rename(cube.to_term(), CURRENT, T.step(i)),
                                        label=f"s{i}")
            self.ctx.assert_formula(T.mk_not(T.rename(ts.prop, CURRENT, T.step(k))),
                                    label="bad")
            if self.ctx.check().require():
                raise RefinementFailure("counterexample is not spurious")
            core = self.ctx.get_core()
            formulas = [self.ctx.labelled(lbl) for lbl in sorted(core)
                        if lbl == "init" or lbl.startswith("t")]
        out: list[Term] = []
        for f in formulas:
            for atom in nested_atoms(f):
                u = unindex(atom)
                if u is not None and u not in out:
                    out.append(u)
        return out

    # -- weakest precondition ---------------------------------------------------
    def _wp_candidates(self, cex: AbstractCex) -> list[Term]:
        updates = functional_updates(self.ts)
        psi = T.mk_and(cex.steps[-1].to_term(), T.mk_not(self.ts.prop))
        out: list[Term] = []
        for j in range(cex.k - 1, -1, -1):
            pre = fold_offsets(T.substitute(psi, updates))
            for atom in T.atoms(pre):
                if atom not in out:
                    out.append(atom)
            psi = T.mk_and(cex.steps[j].to_term(), pre)
        return out

    # -- driver -----------------------------------------------------------------
    def refine(self, cex: AbstractCex, preds, groups: list[Term] | None = None) -> RefinementResult:
        """New predicates removing ``cex``; tries each mode in turn."""
        preds = list(preds)
        known = set(preds)
        if groups is None:
            groups = step_groups(self.ts, cex)
        tried: list[Term] = []
        for mode in self.modes:
            try:
                if mode == "itp":
                    weak, strong = self._itp_candidates(cex, groups)
                    attempts = [weak, weak + [p for p in strong if p not in weak]]
                elif mode == "core":
                    attempts = [self._core_candidates(cex)]
                else:
                    attempts = [self._wp_candidates(cex)]
            except (NotSupported, NotApplicable) as e:
                log.info("refinement mode %s unavailable: %s", mode, e)
                self.stats[f"mode_{mode}_unavailable"] += 1
                continue
            seen_attempt: list[Term] | None = None
            for cands in attempts:
                new = [p for p in cands if p not in known and not p.is_const]
                if not new or new == seen_attempt:
                    continue
                seen_attempt = new
                tried += [p for p in new if p not in tried]
                if removal_check(self.ts, preds + new, cex, self.ctx):
                    self.stats[f"mode_{mode}_ok"] += 1
                    return RefinementResult(new, mode, cands)
            self.stats[f"mode_{mode}_failed"] += 1
        if tried and removal_check(self.ts, preds + tried, cex, self.ctx):
            self.stats["mode_union_ok"] += 1
            return RefinementResult(tried, "+".join(self.modes), tried)
        raise RefinementFailure("no refinement mode removed the counterexample")


def reduce_predicates(ts: TransitionSystem, preds, new: Sequence[Term],
                      cex: AbstractCex, ctx: SolverContext) -> list[Term]:
    """Keep the new predicates whose EQ constraints occur in the unsat core."""
    preds, new = list(preds), list(new)
    if len(new) <= 1:
        return new
    parts = abs_bmc_parts(ts, preds + new, cex.k, cex.steps)
    with ctx.scope():
        for b in parts.base:
            ctx.assert_formula(b)
        for p in preds:
            for e in parts.eqs[p]:
                ctx.assert_formula(e)
        for i, p in enumerate(new):
            ctx.assert_formula(T.mk_and(*parts.eqs[p]), label=f"p{i}")
        if ctx.check().require():
            return new
        core = ctx.get_core()
    kept = [p for i, p in enumerate(new) if f"p{i}" in core]
    if not kept or not removal_check(ts, preds + kept, cex, ctx):
        return new
    return kept
