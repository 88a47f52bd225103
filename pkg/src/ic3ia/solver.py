"""Client for an external SMT solver speaking SMT-LIB v2 over a pipe.

One :class:`SolverContext` wraps one solver process.  The binary and its
arguments are configuration; the default is ``z3 -in``.  Every command is
acknowledged (``:print-success``) so protocol errors surface at the
command that caused them.
"""

from __future__ import annotations

import logging
import shutil
import subprocess
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from . import terms as T
from .evaluate import evaluate
from .smtlib import (SmtLibError, Symbol, TermBuilder, is_complete, parse_sexps,
                     parse_value, render)
from .terms import Term

log = logging.getLogger(__name__)
wire_log = logging.getLogger(__name__ + ".wire")

DEFAULT_COMMAND = ("z3", "-in")
DEFAULT_INTERPOLANT_TEMPLATE = "(get-interpolant {a} {b})"


class SolverError(RuntimeError):
    """Protocol, IO or solver-reported error; fatal for the current run."""


class UsageError(RuntimeError):
    """A query was issued out of order (e.g. get_model after unsat)."""


class NotSupported(RuntimeError):
    """The requested capability is disabled or unavailable."""


class UnknownResult(RuntimeError):
    """The solver answered unknown where an exact answer is required."""

    def __init__(self, reason: str):
        self.reason = reason
        super().__init__(f"solver returned unknown: {reason}")


@dataclass(frozen=True)
class SatResult:
    status: str  # "sat", "unsat" or "unknown"
    reason: str = ""

    @property
    def is_sat(self) -> bool:
        return self.status == "sat"

    @property
    def is_unsat(self) -> bool:
        return self.status == "unsat"

    def require(self) -> bool:
        """Return True for sat, False for unsat, raise on unknown."""
        if self.status == "unknown":
            raise UnknownResult(self.reason)
        return self.status == "sat"

    def __str__(self):
        return self.status if self.status != "unknown" else f"unknown({self.reason})"


SAT = SatResult("sat")
UNSAT = SatResult("unsat")


class Model(Mapping[Term, object]):
    """Assignment from variables to Python values."""

    def __init__(self, values: Mapping[Term, object]):
        self._values = dict(values)

    def __getitem__(self, v: Term):
        return self._values[v]

    def __iter__(self):
        return iter(self._values)

    def __len__(self):
        return len(self._values)

    def eval(self, t: Term):
        return evaluate(t, self._values)

    def __repr__(self):
        items = ", ".join(f"{k}={v}" for k, v in self._values.items())
        return f"Model({items})"


@dataclass
class SolverConfig:
    command: Sequence[str] = DEFAULT_COMMAND
    logic: str | None = None
    interpolants: bool = True
    interpolant_template: str = DEFAULT_INTERPOLANT_TEMPLATE
    timeout_ms: int | None = None

    def available(self) -> bool:
        return shutil.which(self.command[0]) is not None


@dataclass
class ContextStats:
    checks: int = 0
    sat: int = 0
    unsat: int = 0
    unknown: int = 0
    interpolants: int = 0
    commands: int = 0


class SolverContext:
    """Incremental solver session with scopes, labels, models and cores."""

    def __init__(self, config: SolverConfig | None = None, name: str = "solver"):
        self.config = config or SolverConfig()
        self.name = name
        self.stats = ContextStats()
        self._declared: dict[str, Term] = {}
        self._labels: list[dict[str, Term]] = [{}]
        self._wire: dict[str, str] = {}
        self._label_seq = 0
        self._last: SatResult | None = None
        self._last_assumptions: dict[str, Term] = {}
        self._closed = False
        try:
            self._proc = subprocess.Popen(
                list(self.config.command), stdin=subprocess.PIPE,
                stdout=subprocess.PIPE, stderr=subprocess.PIPE, text=True,
                bufsize=1)
        except OSError as e:
            raise SolverError(f"cannot start solver {self.config.command!r}: {e}") from e
        self._command("(set-option :print-success true)")
        self._command("(set-option :produce-models true)")
        self._command("(set-option :produce-unsat-cores true)")
        self._command("(set-option :global-declarations true)")
        if self.config.timeout_ms:
            self._command(f"(set-option :timeout {int(self.config.timeout_ms)})")
        if self.config.logic:
            self._command(f"(set-logic {self.config.logic})")

    # -- protocol ---------------------------------------------------------
    def _write(self, text: str):
        if self._closed:
            raise SolverError(f"{self.name}: context is closed")
        try:
            if wire_log.isEnabledFor(logging.DEBUG):
                wire_log.debug("%s < %s", self.name, text)
            self._proc.stdin.write(text + "\n")
            self._proc.stdin.flush()
        except (BrokenPipeError, OSError) as e:
            raise SolverError(f"{self.name}: solver pipe closed: {self._stderr()}") from e
        self.stats.commands += 1

    def _read(self):
        buf = ""
        while True:
            line = self._proc.stdout.readline()
            if not line:
                raise SolverError(f"{self.name}: solver exited: {self._stderr()}")
            buf += line
            if is_complete(buf):
                break
        if wire_log.isEnabledFor(logging.DEBUG):
            wire_log.debug("%s > %s", self.name, buf.rstrip())
        try:
            sx = parse_sexps(buf)
        except SmtLibError as e:
            raise SolverError(f"{self.name}: unparsable response {buf!r}") from e
        if len(sx) != 1:
            raise SolverError(f"{self.name}: expected one response, got {buf!r}")
        resp = sx[0]
        if isinstance(resp, list) and resp and resp[0] == "error":
            raise SolverError(f"{self.name}: solver error: {' '.join(map(str, resp[1:]))}")
        return resp

    def _stderr(self) -> str:
        try:
            if self._proc.poll() is not None:
                return self._proc.stderr.read().strip()
        except OSError:
            pass
        return ""

    def _command(self, text: str):
        self._write(text)
        resp = self._read()
        if resp != "success":
            raise SolverError(f"{self.name}: unexpected reply {render(resp)!r} to {text[:80]}")

    def _query(self, text: str):
        self._write(text)
        return self._read()

    # -- declarations -------------------------------------------------------
    def declare(self, v: Term):
        name = T.default_symbol(v)
        old = self._declared.get(name)
        if old is not None:
            if old is not v:
                raise SolverError(f"{self.name}: symbol {name!r} redeclared with sort {v.sort}")
            return
        self._command(f"(declare-fun {T.quote_symbol(name)} () {v.sort.smtlib()})")
        self._declared[name] = v

    def _ensure_declared(self, t: Term):
        for v in T.free_vars(t):
            if self._declared.get(T.default_symbol(v)) is not v:
                self.declare(v)

    def text(self, t: Term) -> str:
        self._ensure_declared(t)
        return T.to_smtlib(t)

    # -- assertions and scopes ---------------------------------------------
    @property
    def depth(self) -> int:
        return len(self._labels) - 1

    def push(self):
        self._command("(push 1)")
        self._labels.append({})
        self._last = None

    def pop(self):
        if self.depth == 0:
            raise UsageError(f"{self.name}: pop at scope depth 0")
        self._command("(pop 1)")
        self._labels.pop()
        self._last = None

    @contextmanager
    def scope(self):
        self.push()
        try:
            yield self
        finally:
            if not self._closed:
                self.pop()

    def _all_labels(self) -> dict[str, Term]:
        out: dict[str, Term] = {}
        for d in self._labels:
            out.update(d)
        return out

    def assert_formula(self, t: Term, label: str | None = None):
        if not t.sort.is_bool:
            raise T.SortError(f"assert: non-Boolean term {t}")
        body = self.text(t)
        if label is None:
            self._command(f"(assert {body})")
        else:
            if label in self._all_labels() or label in self._declared:
                raise UsageError(f"{self.name}: label {label!r} already in use")
            # names stay defined after pop under global declarations
            self._label_seq += 1
            wire = f"{label}!{self._label_seq}"
            self._command(f"(assert (! {body} :named {T.quote_symbol(wire)}))")
            self._labels[-1][label] = t
            self._wire[wire] = label
        self._last = None

    def check(self, assumptions: Iterable[Term] = ()) -> SatResult:
        """Check the assertions together with the given Boolean literals."""
        assumptions = list(assumptions)
        self._last_assumptions = {}
        if assumptions:
            parts = []
            for a in assumptions:
                lit = a.args[0] if a.op == "not" else a
                if lit.op != "var" or not lit.sort.is_bool:
                    raise UsageError(f"assumption {a} is not a Boolean literal")
                txt = self.text(a)
                parts.append(txt)
                self._last_assumptions[txt] = a
            resp = self._query(f"(check-sat-assuming ({' '.join(parts)}))")
        else:
            resp = self._query("(check-sat)")
        self.stats.checks += 1
        if resp == "sat":
            self.stats.sat += 1
            res = SAT
        elif resp == "unsat":
            self.stats.unsat += 1
            res = UNSAT
        elif resp == "unknown":
            self.stats.unknown += 1
            reason = self._query("(get-info :reason-unknown)")
            text = str(reason[1]) if isinstance(reason, list) and len(reason) > 1 else render(reason)
            res = SatResult("unknown", text)
        else:
            raise SolverError(f"{self.name}: unexpected check-sat reply {render(resp)!r}")
        self._last = res
        return res

    def is_sat(self, t: Term | None = None, assumptions: Iterable[Term] = ()) -> bool:
        """One-shot satisfiability of ``t`` in a fresh scope; unknown raises."""
        if t is None:
            return self.check(assumptions).require()
        with self.scope():
            self.assert_formula(t)
            return self.check(assumptions).require()

    # -- models, cores, interpolants ----------------------------------------
    def get_values(self, ts: Sequence[Term]) -> list:
        if self._last is None or not self._last.is_sat:
            raise UsageError(f"{self.name}: values requested without a sat result")
        if not ts:
            return []
        body = " ".join(self.text(t) for t in ts)
        resp = self._query(f"(get-value ({body}))")
        if not isinstance(resp, list) or len(resp) != len(ts):
            raise SolverError(f"{self.name}: malformed get-value reply")
        return [parse_value(pair[1], t.sort) for pair, t in zip(resp, ts)]

    def get_model(self, variables: Sequence[Term] | None = None) -> Model:
        """Values for ``variables`` (default: every declared symbol)."""
        if variables is None:
            variables = list(self._declared.values())
        variables = list(variables)
        return Model(dict(zip(variables, self.get_values(variables))))

    def get_core(self) -> set:
        """Labels and assumption literals in the unsat core of the last check."""
        if self._last is None or not self._last.is_unsat:
            raise UsageError(f"{self.name}: unsat core requested without an unsat result")
        resp = self._query("(get-unsat-core)")
        labels = self._all_labels()
        out: set = set()
        for item in resp:
            txt = render(item)
            if isinstance(item, Symbol) and self._wire.get(str(item)) in labels:
                out.add(self._wire[str(item)])
            elif txt in self._last_assumptions:
                out.add(self._last_assumptions[txt])
            else:
                raise SolverError(f"{self.name}: core element {txt!r} not recognised")
        return out

    def labelled(self, label: str) -> Term:
        return self._all_labels()[label]

    @property
    def supports_interpolants(self) -> bool:
        return bool(self.config.interpolants)

    def get_interpolant(self, a_labels: Sequence[str], b_labels: Sequence[str]) -> Term:
        """Interpolant between the labelled groups A and B of the last unsat check."""
        if not self.supports_interpolants:
            raise NotSupported(f"{self.name}: interpolation disabled")
        if self._last is None or not self._last.is_unsat:
            raise UsageError(f"{self.name}: interpolant requested without an unsat result")
        labels = self._all_labels()
        a = T.mk_and(*(labels[x] for x in a_labels))
        b = T.mk_and(*(labels[x] for x in b_labels))
        return self.interpolate(a, b)

    def interpolate(self, a: Term, b: Term) -> Term:
        """Ask the solver for an interpolant of the formulas ``a`` and ``b``."""
        if not self.supports_interpolants:
            raise NotSupported(f"{self.name}: interpolation disabled")
        cmd = self.config.interpolant_template.format(a=self.text(a), b=self.text(b))
        self._write(cmd)
        try:
            resp = self._read()
        except SolverError as e:
            raise NotSupported(str(e)) from e
        self.stats.interpolants += 1
        if isinstance(resp, Symbol) and resp in ("sat", "unknown", "unsupported"):
            raise NotSupported(f"{self.name}: solver answered {resp} to an interpolation query")
        if isinstance(resp, list) and resp and resp[0] == "interpolants":
            resp = resp[1]
        builder = TermBuilder(resolve=self._declared.get)
        try:
            itp = builder.term(resp)
        except SmtLibError as e:
            raise NotSupported(f"{self.name}: cannot read interpolant: {e}") from e
        if not itp.sort.is_bool:
            raise NotSupported(f"{self.name}: non-Boolean interpolant")
        return itp

    # -- lifecycle ----------------------------------------------------------
    def close(self):
        if self._closed:
            return
        self._closed = True
        try:
            self._proc.stdin.write("(exit)\n")
            self._proc.stdin.flush()
        except OSError:
            pass
        try:
            self._proc.wait(timeout=2)
        except subprocess.TimeoutExpired:
            self._proc.kill()
            self._proc.wait()
        for f in (self._proc.stdin, self._proc.stdout, self._proc.stderr):
            try:
                f.close()
            except OSError:
                pass

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def __del__(self):
        try:
            self.close()
        except Exception:
            pass
