"""Symbolic transition systems, the VMT input format, and concrete unrollings."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from fractions import Fraction
from typing import Mapping, Sequence

from . import terms as T
from .evaluate import EvaluationError, evaluate
from .smtlib import (FunctionDef, Keyword, SList, SmtLibError, Symbol, TermBuilder,
                     parse_sexps, parse_sort, render, split_annotation)
from .terms import CURRENT, NEXT, Term, VarClass


class VmtParseError(SmtLibError):
    pass


class MissingAnnotationError(VmtParseError):
    pass


class DuplicateAnnotationError(VmtParseError):
    pass


class UndeclaredNextError(VmtParseError):
    pass


class NextSortMismatchError(VmtParseError):
    pass


class PathError(ValueError):
    pass


@dataclass(frozen=True)
class TransitionSystem:
    state_vars: tuple[Term, ...]
    init: Term
    trans: Term
    prop: Term
    next_names: Mapping[str, str] = field(default_factory=dict, compare=False)
    property_index: int = 0

    def __post_init__(self):
        names = [v.name for v in self.state_vars]
        if len(set(names)) != len(names):
            raise ValueError("duplicate state variable names")
        for v in self.state_vars:
            if v.op != "var" or v.varclass != CURRENT:
                raise ValueError(f"{v} is not a current-state variable")
        for what, t, allowed in (("init", self.init, {CURRENT}),
                                 ("trans", self.trans, {CURRENT, NEXT}),
                                 ("property", self.prop, {CURRENT})):
            if not t.sort.is_bool:
                raise T.SortError(f"{what} is not Boolean")
            for v in T.free_vars(t):
                if v.varclass not in allowed or T.var(v.name, v.sort) not in self._var_set:
                    raise ValueError(f"{what} mentions {v} outside the state variables")

    @cached_property
    def _var_set(self) -> frozenset:
        return frozenset(self.state_vars)

    def var(self, name: str) -> Term:
        for v in self.state_vars:
            if v.name == name:
                return v
        raise KeyError(name)

    def vars_at(self, cls: VarClass) -> list[Term]:
        return [T.var(v.name, v.sort, cls) for v in self.state_vars]

    def check_state_formula(self, t: Term, what: str = "formula"):
        for v in T.free_vars(t):
            if v.varclass != CURRENT or v not in self._var_set:
                raise ValueError(f"{what} mentions non-state symbol {v}")

    def next_name(self, name: str) -> str:
        return self.next_names.get(name, name + ".next")

    def vmt_namer(self, v: Term) -> str:
        name, cls = v.payload
        if cls == NEXT:
            return self.next_name(name)
        if cls in (CURRENT, None):
            return name
        return T.default_symbol(v)

    def with_property(self, prop: Term) -> "TransitionSystem":
        return TransitionSystem(self.state_vars, self.init, self.trans, prop,
                                self.next_names, self.property_index)


# ---------------------------------------------------------------------------
# VMT
# ---------------------------------------------------------------------------

def parse_vmt(text: str, property_index: int = 0) -> tuple[TransitionSystem, list[str]]:
    """Parse a VMT document; returns the system and a list of warnings."""
    warnings: list[str] = []
    decls: dict[str, tuple] = {}
    defs: dict[str, FunctionDef] = {}
    pairs: dict[str, tuple[str, int]] = {}
    inits: list[tuple[object, int]] = []
    transs: list[tuple[object, int]] = []
    props: dict[int, tuple[object, int]] = {}

    for cmd in parse_sexps(text):
        line = getattr(cmd, "line", None)
        if not isinstance(cmd, list) or not cmd or not isinstance(cmd[0], Symbol):
            raise VmtParseError(f"unexpected top-level form {render(cmd)}", line)
        head = str(cmd[0])
        if head in ("set-info", "set-option", "set-logic", "check-sat", "exit",
                    "get-model", "push", "pop"):
            continue
        if head in ("declare-fun", "declare-const"):
            name = str(cmd[1])
            if head == "declare-fun":
                if cmd[2]:
                    raise VmtParseError(f"{name}: only zero-arity symbols are supported", line)
                sort = parse_sort(cmd[3])
            else:
                sort = parse_sort(cmd[2])
            if name in decls or name in defs:
                raise VmtParseError(f"symbol {name!r} declared twice", line)
            decls[name] = (sort, line)
            continue
        if head == "define-fun":
            name = str(cmd[1])
            params = [(str(p[0]), parse_sort(p[1])) for p in cmd[2]]
            sort = parse_sort(cmd[3])
            body, attrs = split_annotation(cmd[4])
            if name in decls or name in defs:
                raise VmtParseError(f"symbol {name!r} defined twice", line)
            defs[name] = FunctionDef(params, body, sort)
            for key, val in attrs:
                if key == ":next":
                    if not isinstance(body, Symbol):
                        raise VmtParseError(":next must annotate a declared variable", line)
                    cur, nxt = str(body), str(val)
                    if cur not in decls:
                        raise UndeclaredNextError(f"current variable {cur!r} is not declared", line)
                    if nxt not in decls:
                        raise UndeclaredNextError(f"next variable {nxt!r} is not declared", line)
                    if decls[cur][0] != decls[nxt][0]:
                        raise NextSortMismatchError(
                            f"{cur} has sort {decls[cur][0]} but {nxt} has {decls[nxt][0]}", line)
                    if cur in pairs:
                        raise DuplicateAnnotationError(f"variable {cur!r} paired twice", line)
                    pairs[cur] = (nxt, line)
                elif key == ":init":
                    inits.append((body, line))
                elif key == ":trans":
                    transs.append((body, line))
                elif key == ":invar-property":
                    if not isinstance(val, int) or val < 0:
                        raise VmtParseError(":invar-property needs a non-negative integer", line)
                    if val in props:
                        raise DuplicateAnnotationError(f"property {val} defined twice", line)
                    props[val] = (body, line)
                else:
                    warnings.append(f"line {line}: ignoring annotation {key}")
            continue
        if head == "assert":
            raise VmtParseError("top-level assert is not supported; use :init or :trans", line)
        raise VmtParseError(f"unsupported command {head!r}", line)

    if len(inits) > 1:
        raise DuplicateAnnotationError("more than one :init annotation", inits[1][1])
    if len(transs) > 1:
        raise DuplicateAnnotationError("more than one :trans annotation", transs[1][1])
    if not inits:
        raise MissingAnnotationError("no :init annotation")
    if not transs:
        raise MissingAnnotationError("no :trans annotation")
    if property_index not in props:
        raise MissingAnnotationError(f"no :invar-property {property_index}")

    nexts = {nxt: cur for cur, (nxt, _) in pairs.items()}
    symbols: dict[str, Term] = {}
    state_vars = []
    for cur in pairs:
        sort = decls[cur][0]
        symbols[cur] = T.var(cur, sort, CURRENT)
        state_vars.append(symbols[cur])
    for nxt, cur in nexts.items():
        if nxt in pairs:
            raise VmtParseError(f"{nxt!r} is used both as current and next variable",
                                pairs[nxt][1])
        symbols[nxt] = T.var(cur, decls[cur][0], NEXT)

    def build(body, line, what, classes):
        def unresolved(name):
            if name in decls:
                raise UndeclaredNextError(
                    f"{what} mentions {name!r}, which has no :next pairing", line)
            return None
        builder = TermBuilder(symbols, defs, resolve=unresolved)
        t = builder.term(body)
        if not t.sort.is_bool:
            raise VmtParseError(f"{what} is not Boolean", line)
        for v in T.free_vars(t):
            if v.varclass not in classes:
                raise VmtParseError(f"{what} mentions next-state variable {v.name}", line)
        return t

    init = build(inits[0][0], inits[0][1], "init", {CURRENT})
    trans = build(transs[0][0], transs[0][1], "trans", {CURRENT, NEXT})
    pbody, pline = props[property_index]
    prop = build(pbody, pline, "property", {CURRENT})
    unused = [n for n in decls if n not in pairs and n not in nexts]
    for n in unused:
        warnings.append(f"line {decls[n][1]}: symbol {n!r} has no :next pairing")
    ts = TransitionSystem(tuple(state_vars), init, trans, prop,
                          {cur: nxt for cur, (nxt, _) in pairs.items()}, property_index)
    return ts, warnings


def to_vmt(ts: TransitionSystem) -> str:
    """Print ``ts`` in VMT form (re-parsable by :func:`parse_vmt`)."""
    fmt = lambda t: T.to_smtlib(t, ts.vmt_namer)
    q = T.quote_symbol
    lines = []
    for v in ts.state_vars:
        lines.append(f"(declare-fun {q(v.name)} () {v.sort.smtlib()})")
        lines.append(f"(declare-fun {q(ts.next_name(v.name))} () {v.sort.smtlib()})")
    for i, v in enumerate(ts.state_vars):
        lines.append(f"(define-fun .sv{i} () {v.sort.smtlib()} "
                     f"(! {q(v.name)} :next {q(ts.next_name(v.name))}))")
    lines.append(f"(define-fun .init () Bool (! {fmt(ts.init)} :init true))")
    lines.append(f"(define-fun .trans () Bool (! {fmt(ts.trans)} :trans true))")
    lines.append(f"(define-fun .prop{ts.property_index} () Bool "
                 f"(! {fmt(ts.prop)} :invar-property {ts.property_index}))")
    return "\n".join(lines) + "\n"


def parse_state_formula(text: str, ts: TransitionSystem) -> Term:
    """Parse one term over the current-state variables of ``ts``."""
    symbols = {v.name: v for v in ts.state_vars}
    sx = parse_sexps(text)
    if len(sx) != 1:
        raise SmtLibError(f"expected one term, got {len(sx)}")
    return TermBuilder(symbols).term(sx[0])


def format_definition(name: str, t: Term, ts: TransitionSystem) -> str:
    """Declarations of the state variables plus ``(define-fun name () Bool t)``."""
    q = T.quote_symbol
    lines = [f"(declare-fun {q(v.name)} () {v.sort.smtlib()})" for v in ts.state_vars]
    lines.append(f"(define-fun {q(name)} () Bool {T.to_smtlib(t, ts.vmt_namer)})")
    return "\n".join(lines) + "\n"


def parse_definition(text: str, ts: TransitionSystem) -> Term:
    """Read back a formula written by :func:`format_definition`."""
    symbols = {v.name: v for v in ts.state_vars}
    body = None
    for sx in parse_sexps(text):
        line = getattr(sx, "line", None)
        if not isinstance(sx, list) or not sx:
            raise SmtLibError("expected a command", line)
        if sx[0] == "declare-fun":
            if str(sx[1]) not in symbols:
                raise SmtLibError(f"{sx[1]} is not a state variable", line)
            continue
        if sx[0] == "define-fun" and len(sx) == 5 and not sx[2]:
            if body is not None:
                raise SmtLibError("more than one definition", line)
            body = sx[4]
            continue
        raise SmtLibError(f"unexpected command {render(sx)[:40]}", line)
    if body is None:
        raise SmtLibError("no definition found")
    return TermBuilder(symbols).term(body)


# ---------------------------------------------------------------------------
# Unrollings and paths
# ---------------------------------------------------------------------------

def at_step(t: Term, i: int) -> Term:
    return T.rename(t, CURRENT, T.step(i))


def trans_at(ts: TransitionSystem, i: int) -> Term:
    return T.retag(ts.trans, {CURRENT: T.step(i), NEXT: T.step(i + 1)})


def bmc_unroll(ts: TransitionSystem, k: int,
               step_constraints: Sequence[Term | None] | None = None) -> Term:
    """I(X^0) & T(X^0,X^1) & ... & T(X^k-1,X^k) & constraint_i(X^i)."""
    if k < 0:
        raise ValueError("depth must be non-negative")
    parts = [at_step(ts.init, 0)]
    parts += [trans_at(ts, i) for i in range(k)]
    if step_constraints is not None:
        if len(step_constraints) > k + 1:
            raise ValueError("more step constraints than steps")
        for i, c in enumerate(step_constraints):
            if c is None:
                continue
            ts.check_state_formula(c, f"step constraint {i}")
            parts.append(at_step(c, i))
    return T.mk_and(*parts)


def bad_at(ts: TransitionSystem, k: int) -> list[Term | None]:
    """Step-constraint list putting not-P at the last of k+1 steps."""
    return [None] * k + [T.mk_not(ts.prop)]


@dataclass
class ConcretePath:
    states: list[dict[Term, object]]

    def __len__(self):
        return len(self.states)

    def validate(self, ts: TransitionSystem, violating: bool = True) -> list[str]:
        """Problems found by direct evaluation; empty when the path is valid."""
        problems = []
        if not self.states:
            return ["empty path"]
        try:
            if not evaluate(ts.init, self.states[0]):
                problems.append("state 0 violates init")
            for i in range(len(self.states) - 1):
                env = dict(self.states[i])
                for v in ts.state_vars:
                    env[T.var(v.name, v.sort, NEXT)] = self.states[i + 1][v]
                if not evaluate(ts.trans, env):
                    problems.append(f"step {i}->{i + 1} violates trans")
            if violating and evaluate(ts.prop, self.states[-1]):
                problems.append("last state satisfies the property")
        except (EvaluationError, KeyError) as e:
            problems.append(f"cannot evaluate: {e}")
        return problems

    def format_witness(self, ts: TransitionSystem) -> str:
        lines = []
        for s in self.states:
            lines.append(" ".join(f"{v.name}={format_value(s[v], v.sort)}"
                                  for v in ts.state_vars))
        return "\n".join(lines) + "\n"


def format_value(v, sort: T.Sort) -> str:
    if sort.is_bool:
        return "true" if v else "false"
    if sort.is_bv:
        return "#b" + format(v, f"0{sort.width}b")
    if isinstance(v, Fraction) and v.denominator != 1:
        return f"{v.numerator}/{v.denominator}"
    if isinstance(v, Fraction):
        return str(v.numerator)
    return str(v)


def parse_witness(text: str, ts: TransitionSystem) -> ConcretePath:
    """Read a witness written by :meth:`ConcretePath.format_witness`."""
    states = []
    for line in text.splitlines():
        if not line.strip():
            continue
        state = {}
        for item in line.split():
            name, _, val = item.partition("=")
            v = ts.var(name)
            if v.sort.is_bool:
                state[v] = val == "true"
            elif v.sort.is_bv:
                state[v] = int(val[2:], 2)
            elif v.sort.kind == "Real":
                state[v] = Fraction(val)
            else:
                state[v] = int(val)
        states.append(state)
    return ConcretePath(states)


def extract_path(model: Mapping[Term, object], ts: TransitionSystem, k: int) -> ConcretePath:
    states = []
    for i in range(k + 1):
        state = {}
        for v in ts.state_vars:
            sv = T.var(v.name, v.sort, T.step(i))
            if sv not in model:
                raise PathError(f"model has no value for {sv}")
            state[v] = model[sv]
        states.append(state)
    return ConcretePath(states)


def step_vars(ts: TransitionSystem, k: int) -> list[Term]:
    return [T.var(v.name, v.sort, T.step(i)) for i in range(k + 1) for v in ts.state_vars]
