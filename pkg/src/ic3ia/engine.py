"""IC3 over the implicit predicate abstraction, with CEGAR refinement."""

from __future__ import annotations

import heapq
import itertools
import logging
import time
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from . import abstraction
from . import terms as T
from .abstraction import PredicateSet, eq_formula, extract_p_cube, frozen_trans
from .cegar import (REFINE_MODES, AbstractCex, Concrete, Refiner, RefinementFailure,
                    reduce_predicates, simulate, step_groups)
from .checkers import bmc_check, invariant_checks
from .solver import SolverConfig, SolverContext, UnknownResult
from .system import ConcretePath, TransitionSystem
from .terms import CURRENT, FROZEN, FROZEN_NEXT, NEXT, Clause, Cube, Literal, Term

log = logging.getLogger(__name__)


class BudgetExceeded(RuntimeError):
    pass


class InvariantViolation(AssertionError):
    """A trace invariant failed while checking was enabled."""


@dataclass
class EngineConfig:
    refine_modes: tuple[str, ...] = REFINE_MODES
    reduce_predicates: bool = True
    check_invariants: bool = False
    max_gen_rounds: int = 3
    budget_seconds: float | None = None
    max_refinements: int | None = None
    weaken_interpolants: bool = True
    check_interpolants: bool = True
    validate_invariant: bool = True
    solver: SolverConfig = field(default_factory=SolverConfig)


# always printed, so harness scripts can rely on the keys being present
REPORTED_COUNTERS = ("refinements", "predicates_added", "clauses_learned", "abstract_cex",
                     "spurious_cex", "invariant_checks", "invariant_violations",
                     "retention_checks", "retention_violations")


@dataclass
class Stats:
    counters: Counter = field(default_factory=Counter)
    times: defaultdict = field(default_factory=lambda: defaultdict(float))
    refinement_log: list[str] = field(default_factory=list)
    invariant_report: dict[str, bool] = field(default_factory=dict)

    def lines(self) -> list[str]:
        out = [f"{k}={v}" for k, v in sorted(self.counters.items())]
        out += [f"time_{k}={v:.3f}" for k, v in sorted(self.times.items())]
        return out


@dataclass
class Verdict:
    kind: str  # "safe", "unsafe" or "unknown"
    invariant: Term | None = None
    path: ConcretePath | None = None
    reason: str = ""
    predicates: list[Term] = field(default_factory=list)
    stats: Stats = field(default_factory=Stats)

    @property
    def is_safe(self) -> bool:
        return self.kind == "safe"

    @property
    def is_unsafe(self) -> bool:
        return self.kind == "unsafe"

    def __str__(self):
        return self.kind if not self.reason else f"{self.kind} ({self.reason})"


@dataclass(order=True)
class _Obligation:
    frame: int
    seq: int
    cube: Cube = field(compare=False)
    parent: "_Obligation | None" = field(compare=False, default=None)


class IC3IA:
    """IC3 run on the implicit predicate abstraction of a transition system.

    Frames are stored delta-encoded: ``frames[i]`` holds the clauses whose
    highest frame is ``i``, so F_i is the union of ``frames[i:]``.  F_0 is
    the initial condition and ``frames[0]`` stays empty.
    """

    def __init__(self, ts: TransitionSystem, config: EngineConfig | None = None,
                 predicates: Iterable[Term] = ()):
        self.ts = ts
        self.config = config or EngineConfig()
        seeds = list(T.atoms(ts.init)) + list(T.atoms(ts.prop)) + list(predicates)
        for p in seeds:
            ts.check_state_formula(p, "predicate")
        self.preds = PredicateSet(seeds)
        self.stats = Stats()
        self.frames: list[list[Clause]] = [[], []]
        self._neg: dict[Clause, frozenset] = {}
        self._seq = itertools.count()
        self._start = 0.0
        self._ctx: SolverContext | None = None
        self._aux: SolverContext | None = None
        self._checker: SolverContext | None = None
        self.refiner: Refiner | None = None

    # -- solver set-up ----------------------------------------------------------
    def _open(self):
        cfg = self.config.solver
        self._ctx = SolverContext(cfg, "ic3")
        self._aux = SolverContext(cfg, "cegar")
        self.refiner = Refiner(self.ts, self._aux, self.config.refine_modes,
                               weaken=self.config.weaken_interpolants,
                               check_interpolants=self.config.check_interpolants)
        ctx = self._ctx
        self.act_init = T.aux_var("$init")
        self.act_trans = T.aux_var("$trans")
        self.act_bad = T.aux_var("$bad")
        ctx.assert_formula(T.mk_implies(self.act_init, self.ts.init))
        ctx.assert_formula(T.mk_implies(self.act_trans, frozen_trans(self.ts)))
        ctx.assert_formula(T.mk_implies(self.act_bad, T.mk_not(self.ts.prop)))
        self.frame_acts: list[Term] = []
        self.cur: dict[Term, Term] = {}
        self.nxt: dict[Term, Term] = {}
        self._install_predicates(list(self.preds))
        for i in range(len(self.frames)):
            self._frame_act(i)

    def _close(self):
        for c in (self._ctx, self._aux, self._checker):
            if c is not None:
                c.close()

    def _install_predicates(self, preds: Sequence[Term]):
        ctx = self._ctx
        for p in preds:
            i = self.preds.index(p)
            c = T.aux_var(f"$c{i}")
            n = T.aux_var(f"$n{i}")
            self.cur[p], self.nxt[p] = c, n
            ctx.assert_formula(T.mk_iff(c, p))
            ctx.assert_formula(T.mk_iff(n, T.rename(p, CURRENT, NEXT)))
            ctx.assert_formula(T.mk_implies(self.act_trans, T.mk_and(
                T.mk_iff(p, T.rename(p, CURRENT, FROZEN)),
                T.mk_iff(T.rename(p, CURRENT, FROZEN_NEXT), T.rename(p, CURRENT, NEXT)))))

    def _frame_act(self, i: int) -> Term:
        while len(self.frame_acts) <= i:
            self.frame_acts.append(T.aux_var(f"$F{len(self.frame_acts)}"))
        return self.frame_acts[i]

    def _frame_assumptions(self, i: int) -> list[Term]:
        if i == 0:
            return [self.act_init]
        return [self._frame_act(j) for j in range(i, len(self.frames))]

    def _lit(self, lit: Literal, proxies: dict) -> Term:
        v = proxies[lit.atom]
        return v if lit.positive else T.mk_not(v)

    def _clause_term(self, c: Clause) -> Term:
        return T.mk_or(*(self._lit(l, self.cur) for l in c))

    # -- budget -------------------------------------------------------------------
    def _tick(self):
        b = self.config.budget_seconds
        if b is not None and time.monotonic() - self._start > b:
            raise BudgetExceeded(f"time budget of {b}s exhausted")

    # -- queries ------------------------------------------------------------------
    def _state_cube(self) -> Cube:
        model = self._ctx.get_model(self.ts.state_vars)
        return extract_p_cube(model, self.preds, CURRENT)

    def _bad_cube(self, k: int) -> Cube | None:
        self.stats.counters["bad_queries"] += 1
        if self._ctx.check(self._frame_assumptions(k) + [self.act_bad]).require():
            return self._state_cube()
        return None

    def intersects_init(self, cube: Cube) -> bool:
        self.stats.counters["init_queries"] += 1
        return self._ctx.check([self.act_init] + [self._lit(l, self.cur) for l in cube]).require()

    def _repair_initiation(self, lits: list[Literal], original: Cube) -> list[Literal]:
        """Add literals of ``original`` until the cube is disjoint from I.

        Each round takes an initial state inside the cube and adds the first
        literal of ``original`` that this state falsifies.
        """
        while self.intersects_init(Cube(lits)):
            init_state = set(self._state_cube())
            extra = next((l for l in original if l not in lits and l not in init_state), None)
            if extra is None:
                raise AssertionError("obligation cube intersects the initial states")
            lits.append(extra)
        return lits

    def rel_ind(self, i: int, cube: Cube) -> tuple[bool, Cube]:
        """Is ~cube inductive relative to F_i (over the abstraction)?

        Returns (True, reduced cube) when it is, using the unsat core on the
        next-state literals, and (False, predecessor cube) otherwise.
        """
        self.stats.counters["rel_ind_queries"] += 1
        ctx = self._ctx
        nlits = {self._lit(l, self.nxt): l for l in cube}
        with ctx.scope():
            ctx.assert_formula(T.mk_not(T.mk_and(*(self._lit(l, self.cur) for l in cube))))
            res = ctx.check(self._frame_assumptions(i) + [self.act_trans] + list(nlits))
            if res.require():
                return False, self._state_cube()
            core = ctx.get_core()
        kept = [l for t, l in nlits.items() if t in core]
        return True, Cube(kept) if kept else cube

    # -- frames -------------------------------------------------------------------
    def _neg_lits(self, c: Clause) -> frozenset:
        s = self._neg.get(c)
        if s is None:
            s = self._neg[c] = frozenset(~l for l in c)
        return s

    def is_blocked(self, cube: Cube, i: int) -> bool:
        lits = frozenset(cube)
        for j in range(i, len(self.frames)):
            for c in self.frames[j]:
                if self._neg_lits(c) <= lits:
                    return True
        return False

    def add_clause(self, c: Clause, i: int):
        for j in range(1, i + 1):
            self.frames[j] = [d for d in self.frames[j] if not c.subsumes(d)]
        self.frames[i].append(c)
        self._ctx.assert_formula(T.mk_implies(self._frame_act(i), self._clause_term(c)))
        self.stats.counters["clauses_learned"] += 1

    def frame_formula(self, i: int) -> Term:
        """F_i over the real predicates (I for i = 0)."""
        if i == 0:
            return self.ts.init
        return T.mk_and(*(c.to_term() for j in range(i, len(self.frames)) for c in self.frames[j]))

    def clause_multiset(self) -> Counter:
        return Counter((i, c) for i, fr in enumerate(self.frames) for c in fr)

    # -- generalisation -------------------------------------------------------------
    def generalize(self, clause: Clause, i: int, original: Cube | None = None) -> Clause:
        """Drop literals from a clause that is inductive relative to F_(i-1).

        ``original`` is the obligation cube the clause came from; its
        literals are added back if the clause alone fails initiation.
        """
        lits = list(clause.negate())
        if original is not None:
            lits = self._repair_initiation(lits, original)
        for _ in range(self.config.max_gen_rounds):
            changed = False
            for l in reversed(list(lits)):
                if len(lits) <= 1:
                    break
                if l not in lits:
                    continue
                cand = Cube([m for m in lits if m is not l])
                if self.intersects_init(cand):
                    continue
                ok, reduced = self.rel_ind(i - 1, cand)
                if ok:
                    lits = list(reduced) if not self.intersects_init(reduced) else list(cand)
                    changed = True
            if not changed:
                break
        return Cube(lits).negate()

    # -- blocking -------------------------------------------------------------------
    def _trace(self, po: _Obligation) -> AbstractCex:
        steps = []
        while po is not None:
            steps.append(po.cube)
            po = po.parent
        return AbstractCex(steps)

    def block(self, bad: Cube, k: int) -> AbstractCex | None:
        heap = [_Obligation(k, next(self._seq), bad)]
        while heap:
            self._tick()
            po = heapq.heappop(heap)
            self.stats.counters["obligations"] += 1
            i = po.frame
            if i == 0:
                return self._trace(po)
            if self.is_blocked(po.cube, i):
                if i < k:
                    heapq.heappush(heap, _Obligation(i + 1, next(self._seq), po.cube, po.parent))
                continue
            ok, res = self.rel_ind(i - 1, po.cube)
            if ok:
                c = self.generalize(res.negate(), i, po.cube)
                self.add_clause(c, i)
                if i < k:
                    heapq.heappush(heap, _Obligation(i + 1, next(self._seq), po.cube, po.parent))
            else:
                pred = _Obligation(i - 1, next(self._seq), res, po)
                if i - 1 == 0 or self.intersects_init(res):
                    return self._trace(pred)
                heapq.heappush(heap, po)
                heapq.heappush(heap, pred)
        return None

    # -- propagation ----------------------------------------------------------------
    def propagate(self) -> int | None:
        """Push clauses forward; returns i when F_i = F_(i+1)."""
        k = len(self.frames) - 1
        self.frames.append([])
        self._frame_act(k + 1)
        for i in range(1, k + 1):
            self._tick()
            for c in list(self.frames[i]):
                ok, _ = self.rel_ind(i, c.negate())
                if ok:
                    self.frames[i].remove(c)
                    self.frames[i + 1].append(c)
                    self._ctx.assert_formula(T.mk_implies(self._frame_act(i + 1),
                                                          self._clause_term(c)))
                    self.stats.counters["clauses_propagated"] += 1
            if not self.frames[i]:
                return i
        return None

    # -- trace invariants -------------------------------------------------------------
    def check_trace_invariants(self) -> list[str]:
        """Semantic checks of the frame invariants; returns the violations."""
        if self._checker is None:
            self._checker = SolverContext(self.config.solver, "checker")
        ctx = self._checker
        self.stats.counters["invariant_checks"] += 1
        problems = []
        if self.frames[0]:
            problems.append("F_0 is not the initial condition")
        pset = self.preds.as_set()
        for i, fr in enumerate(self.frames):
            for c in fr:
                if not all(l.atom in pset for l in c):
                    problems.append(f"clause {c} at frame {i} is not over the predicates")
        k = len(self.frames) - 1
        step = T.mk_and(eq_formula(self.preds, CURRENT, FROZEN), frozen_trans(self.ts),
                        eq_formula(self.preds, FROZEN_NEXT, NEXT))
        for i in range(k):
            fi, fj = self.frame_formula(i), self.frame_formula(i + 1)
            if ctx.is_sat(T.mk_and(fi, T.mk_not(fj))):
                problems.append(f"F_{i} does not entail F_{i + 1}")
            if ctx.is_sat(T.mk_and(fi, step, T.mk_not(T.rename(fj, CURRENT, NEXT)))):
                problems.append(f"F_{i} and T do not entail F_{i + 1}'")
            if ctx.is_sat(T.mk_and(fi, T.mk_not(self.ts.prop))):
                problems.append(f"F_{i} intersects the bad states")
        if problems:
            self.stats.counters["invariant_violations"] += len(problems)
        return problems

    def _maybe_check(self, where: str):
        if self.config.check_invariants:
            problems = self.check_trace_invariants()
            if problems:
                raise InvariantViolation(f"{where}: " + "; ".join(problems))

    # -- refinement -------------------------------------------------------------------
    def _refine(self, cex: AbstractCex, groups) -> None:
        before = self.clause_multiset()
        t0 = time.monotonic()
        res = self.refiner.refine(cex, self.preds, groups)
        new = res.new_predicates
        if self.config.reduce_predicates:
            new = reduce_predicates(self.ts, self.preds, new, cex, self._aux)
        added = self.preds.extend(new)
        if not added:
            raise RefinementFailure("refinement produced no new predicate")
        self._install_predicates(added)
        self.stats.times["refinement"] += time.monotonic() - t0
        c = self.stats.counters
        c["refinements"] += 1
        c["predicates_discovered"] += len(res.new_predicates)
        c["predicates_added"] += len(added)
        line = (f"refinement {c['refinements']}: cex length {len(cex)}, mode {res.mode}, "
                f"{len(res.new_predicates)} found, {len(added)} kept: "
                + ", ".join(map(str, added)))
        self.stats.refinement_log.append(line)
        log.info(line)
        c["retention_checks"] += 1
        if self.clause_multiset() != before:
            c["retention_violations"] += 1
        self._maybe_check("after refinement")
        mr = self.config.max_refinements
        if mr is not None and c["refinements"] >= mr:
            raise BudgetExceeded(f"refinement limit of {mr} reached")

    # -- main loop ------------------------------------------------------------------
    def _unsafe(self, path: ConcretePath) -> Verdict:
        problems = path.validate(self.ts)
        if problems:
            raise AssertionError("counterexample failed validation: " + "; ".join(problems))
        return Verdict("unsafe", path=path)

    def _safe(self, i: int) -> Verdict:
        inv = self.frame_formula(i + 1)
        if self.config.validate_invariant:
            if self._checker is None:
                self._checker = SolverContext(self.config.solver, "checker")
            report = invariant_checks(self.ts, inv, self._checker, preds=self.preds)
            self.stats.invariant_report = report
            if not all(report.values()):
                raise AssertionError(f"invariant failed validation: {report}")
        return Verdict("safe", invariant=inv)

    def _solve(self) -> Verdict:
        for depth in (0, 1):
            path = bmc_check(self.ts, depth, self._aux)
            if path is not None:
                return self._unsafe(path)
        self._maybe_check("start")
        while True:
            k = len(self.frames) - 1
            self.stats.counters["frames"] = k
            t0 = time.monotonic()
            while True:
                self._tick()
                bad = self._bad_cube(k)
                if bad is None:
                    break
                cex = self.block(bad, k)
                if cex is None:
                    continue
                self.stats.times["blocking"] += time.monotonic() - t0
                self.stats.counters["abstract_cex"] += 1
                sim = simulate(self.ts, cex, self._aux)
                if isinstance(sim, Concrete):
                    return self._unsafe(sim.path)
                self.stats.counters["spurious_cex"] += 1
                self._refine(cex, sim.groups)
                t0 = time.monotonic()
            self.stats.times["blocking"] += time.monotonic() - t0
            t0 = time.monotonic()
            fix = self.propagate()
            self.stats.times["propagation"] += time.monotonic() - t0
            self._maybe_check(f"iteration {k}")
            if fix is not None:
                self.stats.counters["frames"] = len(self.frames) - 1
                return self._safe(fix)

    def run(self) -> Verdict:
        self._start = time.monotonic()
        calls0 = abstraction.EXPLICIT_ABSTRACTION_CALLS
        try:
            self._open()
            v = self._solve()
        except UnknownResult as e:
            v = Verdict("unknown", reason=f"solver returned unknown: {e.reason}")
        except BudgetExceeded as e:
            v = Verdict("unknown", reason=str(e))
        except RefinementFailure as e:
            v = Verdict("unknown", reason=f"refinement failure: {e}")
        finally:
            self._close()
        c = self.stats.counters
        for key in REPORTED_COUNTERS:
            c.setdefault(key, 0)
        c["predicates"] = len(self.preds)
        c["explicit_abstraction_calls"] = abstraction.EXPLICIT_ABSTRACTION_CALLS - calls0
        if self.refiner is not None:
            c.update({f"refine_{k}": n for k, n in self.refiner.stats.items()})
        for ctx in (self._ctx, self._aux, self._checker):
            if ctx is not None:
                c[f"solver_checks_{ctx.name}"] = ctx.stats.checks
        self.stats.times["total"] = time.monotonic() - self._start
        v.predicates = list(self.preds)
        v.stats = self.stats
        return v


def check(ts: TransitionSystem, config: EngineConfig | None = None,
          predicates: Iterable[Term] = ()) -> Verdict:
    return IC3IA(ts, config, predicates).run()
