"""SMT-LIB v2 s-expression reading and conversion to terms."""

from __future__ import annotations

from fractions import Fraction
from typing import Callable, Iterable, Mapping

from . import terms as T
from .terms import Sort, Term


class SmtLibError(ValueError):
    def __init__(self, msg: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {msg}" if line is not None else msg)


class Symbol(str):
    """A (possibly |quoted|) symbol; the quotes are stripped."""


class Keyword(str):
    pass


class String(str):
    pass


class Decimal(Fraction):
    pass


class BVLiteral(tuple):
    @property
    def value(self) -> int:
        return self[0]

    @property
    def width(self) -> int:
        return self[1]


class SList(list):
    line: int | None = None


# ---------------------------------------------------------------------------
# Reading
# ---------------------------------------------------------------------------

_DELIMS = set("() \t\r\n;\"|")


def _atom(tok: str, line: int):
    if tok[0].isdigit():
        try:
            if "." in tok:
                return Decimal(tok)
            return int(tok)
        except ValueError:
            raise SmtLibError(f"bad numeral {tok!r}", line) from None
    if tok.startswith("#b"):
        bits = tok[2:]
        if not bits or set(bits) - {"0", "1"}:
            raise SmtLibError(f"bad binary literal {tok!r}", line)
        return BVLiteral((int(bits, 2), len(bits)))
    if tok.startswith("#x"):
        digits = tok[2:]
        try:
            return BVLiteral((int(digits, 16), 4 * len(digits)))
        except ValueError:
            raise SmtLibError(f"bad hex literal {tok!r}", line) from None
    if tok.startswith(":"):
        return Keyword(tok)
    return Symbol(tok)


def parse_sexps(text: str) -> list:
    """Parse every top-level s-expression in ``text``."""
    out: list = []
    stack: list[SList] = []
    i, n, line = 0, len(text), 1

    def emit(x):
        if stack:
            stack[-1].append(x)
        else:
            out.append(x)

    while i < n:
        c = text[i]
        if c == "\n":
            line += 1
            i += 1
        elif c in " \t\r":
            i += 1
        elif c == ";":
            while i < n and text[i] != "\n":
                i += 1
        elif c == "(":
            lst = SList()
            lst.line = line
            stack.append(lst)
            i += 1
        elif c == ")":
            if not stack:
                raise SmtLibError("unbalanced ')'", line)
            lst = stack.pop()
            emit(lst)
            i += 1
        elif c == "|":
            j = text.find("|", i + 1)
            if j < 0:
                raise SmtLibError("unterminated quoted symbol", line)
            body = text[i + 1:j]
            line += body.count("\n")
            emit(Symbol(body))
            i = j + 1
        elif c == '"':
            j = i + 1
            buf = []
            while True:
                if j >= n:
                    raise SmtLibError("unterminated string", line)
                if text[j] == '"':
                    if j + 1 < n and text[j + 1] == '"':
                        buf.append('"')
                        j += 2
                        continue
                    break
                if text[j] == "\n":
                    line += 1
                buf.append(text[j])
                j += 1
            emit(String("".join(buf)))
            i = j + 1
        else:
            j = i
            while j < n and text[j] not in _DELIMS:
                j += 1
            emit(_atom(text[i:j], line))
            i = j
    if stack:
        raise SmtLibError("unbalanced '('", stack[-1].line)
    return out


def is_complete(text: str) -> bool:
    """True when ``text`` holds at least one balanced top-level expression."""
    depth = 0
    seen = False
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c == ";":
            while i < n and text[i] != "\n":
                i += 1
            continue
        if c == "|":
            j = text.find("|", i + 1)
            if j < 0:
                return False
            i = j + 1
            seen = True
            continue
        if c == '"':
            j = i + 1
            while True:
                if j >= n:
                    return False
                if text[j] == '"':
                    if j + 1 < n and text[j + 1] == '"':
                        j += 2
                        continue
                    break
                j += 1
            i = j + 1
            seen = True
            continue
        if c == "(":
            depth += 1
            seen = True
        elif c == ")":
            depth -= 1
        elif not c.isspace():
            seen = True
        i += 1
    return seen and depth <= 0


# ---------------------------------------------------------------------------
# Sorts and terms
# ---------------------------------------------------------------------------

def parse_sort(sx) -> Sort:
    if isinstance(sx, Symbol):
        if sx in ("Bool", "Int", "Real"):
            return Sort(str(sx))
    elif (isinstance(sx, list) and len(sx) == 3 and sx[0] == "_"
          and sx[1] == "BitVec" and isinstance(sx[2], int)):
        return T.bv_sort(sx[2])
    raise SmtLibError(f"unsupported sort {render(sx)}", getattr(sx, "line", None))


def render(sx) -> str:
    """Print an s-expression back to text (for diagnostics and round trips)."""
    if isinstance(sx, list):
        return "(" + " ".join(render(x) for x in sx) + ")"
    if isinstance(sx, Symbol):
        return T.quote_symbol(sx)
    if isinstance(sx, String):
        return '"' + sx.replace('"', '""') + '"'
    if isinstance(sx, BVLiteral):
        return "#b" + format(sx.value, f"0{sx.width}b")
    if isinstance(sx, Decimal):
        if sx.denominator == 1:
            return f"{sx.numerator}.0"
        return f"(/ {sx.numerator}.0 {sx.denominator}.0)"
    return str(sx)


def split_annotation(sx) -> tuple[object, list[tuple[str, object]]]:
    """Strip ``(! t :k v ...)`` wrappers, returning ``t`` and the attributes."""
    attrs: list[tuple[str, object]] = []
    while isinstance(sx, list) and sx and sx[0] == "!":
        body = sx[1]
        rest = sx[2:]
        i = 0
        while i < len(rest):
            k = rest[i]
            if not isinstance(k, Keyword):
                raise SmtLibError(f"expected keyword in annotation, got {render(k)}",
                                  getattr(sx, "line", None))
            v = None
            if i + 1 < len(rest) and not isinstance(rest[i + 1], Keyword):
                v = rest[i + 1]
                i += 1
            attrs.append((str(k), v))
            i += 1
        sx = body
    return sx, attrs


_INDEXED = {"extract", "zero_extend", "sign_extend", "rotate_left", "rotate_right", "repeat"}


class FunctionDef:
    def __init__(self, params: list[tuple[str, Sort]], body, sort: Sort):
        self.params = params
        self.body = body
        self.sort = sort


class TermBuilder:
    """Converts s-expressions into terms using a symbol environment.

    ``symbols`` maps names to terms (declared constants, zero-arity
    definitions).  ``functions`` holds parameterised definitions, expanded
    at their use sites.
    """

    def __init__(self, symbols: Mapping[str, Term] | None = None,
                 functions: Mapping[str, FunctionDef] | None = None,
                 resolve: Callable[[str], Term | None] | None = None):
        self.symbols: dict[str, Term] = dict(symbols or {})
        self.functions: dict[str, FunctionDef] = dict(functions or {})
        self.resolve = resolve

    def lookup(self, name: str, scope: Mapping[str, Term], line) -> Term:
        if name in scope:
            return scope[name]
        if name in self.symbols:
            return self.symbols[name]
        if self.resolve is not None:
            t = self.resolve(name)
            if t is not None:
                return t
        raise SmtLibError(f"unknown symbol {name!r}", line)

    def term(self, sx, scope: Mapping[str, Term] | None = None) -> Term:
        scope = scope or {}
        line = getattr(sx, "line", None)
        try:
            return self._term(sx, scope)
        except T.SortError as e:
            raise SmtLibError(f"sort error: {e}", line) from None

    def _term(self, sx, scope) -> Term:
        line = getattr(sx, "line", None)
        if isinstance(sx, Symbol):
            if sx == "true":
                return T.TRUE
            if sx == "false":
                return T.FALSE
            if sx in self.functions and not self.functions[sx].params:
                f = self.functions[sx]
                return self._term(f.body, {})
            return self.lookup(sx, scope, line)
        if isinstance(sx, Decimal):
            return T.real_const(Fraction(sx))
        if isinstance(sx, bool):
            return T.TRUE if sx else T.FALSE
        if isinstance(sx, int):
            return T.int_const(sx)
        if isinstance(sx, BVLiteral):
            return T.bv_const(sx.value, sx.width)
        if not isinstance(sx, list) or not sx:
            raise SmtLibError(f"unexpected expression {render(sx)}", line)
        head = sx[0]
        if head == "!":
            body, _ = split_annotation(sx)
            return self._term(body, scope)
        if head == "_" and len(sx) == 3 and isinstance(sx[1], Symbol) \
                and sx[1].startswith("bv") and sx[1][2:].isdigit():
            return T.bv_const(int(sx[1][2:]), sx[2])
        if head == "let":
            inner = dict(scope)
            for binding in sx[1]:
                name, val = binding
                inner[str(name)] = self._term(val, scope)
            return self._term(sx[2], inner)
        if isinstance(head, list):
            if len(head) >= 3 and head[0] == "_" and head[1] in _INDEXED:
                args = [self._term(a, scope) for a in sx[1:]]
                return T.app(str(head[1]), *args, params=tuple(head[2:]))
            raise SmtLibError(f"unsupported head {render(head)}", line)
        if not isinstance(head, Symbol):
            raise SmtLibError(f"bad application head {render(head)}", line)
        args = [self._term(a, scope) for a in sx[1:]]
        if head in self.functions:
            f = self.functions[head]
            if len(args) != len(f.params):
                raise SmtLibError(f"{head}: expected {len(f.params)} arguments", line)
            inner = {}
            for (pname, psort), a in zip(f.params, args):
                if a.sort != psort:
                    raise SmtLibError(f"{head}: argument {pname} has sort {a.sort}", line)
                inner[pname] = a
            return self._term(f.body, inner)
        op = str(head)
        if op == "and":
            return T.mk_and(*args)
        if op == "or":
            return T.mk_or(*args)
        if op == "not":
            if len(args) != 1:
                raise SmtLibError("not takes one argument", line)
            return T.mk_not(args[0])
        if op == "-" and len(args) == 1 and args[0].is_const:
            return T.const(-args[0].payload, args[0].sort)
        if op == "/" and len(args) == 2 and all(a.is_const for a in args):
            return T.real_const(Fraction(args[0].payload) / Fraction(args[1].payload))
        if op == "xor" and len(args) == 2 and args[0].sort.is_bool:
            return T.app("xor", *args)
        if op not in T.SUPPORTED_OPS:
            raise SmtLibError(f"unsupported operator {op!r}", line)
        return T.app(op, *args)


def parse_value(sx, sort: Sort | None = None):
    """Parse a constant as printed by a solver in get-value output."""
    if isinstance(sx, Symbol) and sx in ("true", "false"):
        return sx == "true"
    if isinstance(sx, BVLiteral):
        return sx.value
    if isinstance(sx, Decimal):
        return Fraction(sx)
    if isinstance(sx, int) and not isinstance(sx, bool):
        return Fraction(sx) if sort is not None and sort.kind == "Real" else sx
    if isinstance(sx, list) and sx:
        if sx[0] == "-" and len(sx) == 2:
            return -parse_value(sx[1], sort)
        if sx[0] == "/" and len(sx) == 3:
            return Fraction(parse_value(sx[1], sort)) / Fraction(parse_value(sx[2], sort))
        if sx[0] == "_" and len(sx) == 3 and str(sx[1]).startswith("bv"):
            return int(str(sx[1])[2:])
    raise SmtLibError(f"unsupported value {render(sx)}", getattr(sx, "line", None))


def symbols_in(sx) -> Iterable[str]:
    if isinstance(sx, Symbol):
        yield str(sx)
    elif isinstance(sx, list):
        for x in sx:
            yield from symbols_in(x)
