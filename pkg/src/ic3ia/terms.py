"""Sorted first-order terms, variable classes, and cube/clause algebra.

Terms are immutable and interned: two terms built from the same operator,
arguments, sort and payload are the same Python object, so equality is
identity and structural at the same time.  Only Boolean constants are
folded at construction time; arithmetic is kept exactly as written.
"""

from __future__ import annotations

import threading
import weakref
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Iterator, Mapping, Sequence


class SortError(TypeError):
    """Raised when an operator is applied to arguments of the wrong sort."""


class RenameError(ValueError):
    """Raised when a renaming meets a variable of an unexpected class."""


# ---------------------------------------------------------------------------
# Sorts
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Sort:
    kind: str  # "Bool", "Int", "Real" or "BitVec"
    width: int | None = None

    def __post_init__(self):
        if self.kind not in ("Bool", "Int", "Real", "BitVec"):
            raise SortError(f"unknown sort kind {self.kind!r}")
        if self.kind == "BitVec":
            if self.width is None or self.width < 1:
                raise SortError("bit-vector width must be >= 1")
        elif self.width is not None:
            raise SortError(f"sort {self.kind} takes no width")

    @property
    def is_bool(self) -> bool:
        return self.kind == "Bool"

    @property
    def is_numeric(self) -> bool:
        return self.kind in ("Int", "Real")

    @property
    def is_bv(self) -> bool:
        return self.kind == "BitVec"

    def smtlib(self) -> str:
        if self.kind == "BitVec":
            return f"(_ BitVec {self.width})"
        return self.kind

    def __str__(self):
        return self.smtlib()


BOOL = Sort("Bool")
INT = Sort("Int")
REAL = Sort("Real")


def bv_sort(width: int) -> Sort:
    return Sort("BitVec", width)


# ---------------------------------------------------------------------------
# Variable classes
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class VarClass:
    """Tag saying which copy of the state variables an occurrence belongs to."""

    kind: str  # cur, next, frozen, frozen_next, step, frozen_step
    index: int = 0

    def __post_init__(self):
        if self.kind not in _CLASS_SUFFIX:
            raise ValueError(f"unknown variable class {self.kind!r}")
        if self.index < 0:
            raise ValueError("step index must be non-negative")

    def suffix(self) -> str:
        fmt = _CLASS_SUFFIX[self.kind]
        return fmt.format(self.index)

    def __repr__(self):
        if self.kind in ("step", "frozen_step"):
            return f"{self.kind}({self.index})"
        return self.kind


_CLASS_SUFFIX = {
    "cur": "",
    "next": "'",
    "frozen": "~f",
    "frozen_next": "~f'",
    "step": "@{}",
    "frozen_step": "~f@{}",
}

CURRENT = VarClass("cur")
NEXT = VarClass("next")
FROZEN = VarClass("frozen")
FROZEN_NEXT = VarClass("frozen_next")


def step(n: int) -> VarClass:
    return VarClass("step", n)


def frozen_step(n: int) -> VarClass:
    return VarClass("frozen_step", n)


# ---------------------------------------------------------------------------
# Terms
# ---------------------------------------------------------------------------

_TABLE: "weakref.WeakValueDictionary[tuple, Term]" = weakref.WeakValueDictionary()
_TABLE_LOCK = threading.Lock()


class Term:
    """An interned, immutable term.

    ``op`` is ``"var"``, ``"const"`` or an SMT-LIB function symbol.  For
    variables ``payload`` is ``(name, varclass)`` where ``varclass`` is None
    for symbols that are not state variables (labels, proxies).  For
    constants it is the Python value; for indexed operators such as
    ``extract`` it is the tuple of indices.
    """

    __slots__ = ("op", "args", "sort", "payload", "_hash", "__weakref__")

    def __new__(cls, op: str, args: tuple, sort: Sort, payload=()):
        key = (op, args, sort, payload, type(payload))
        with _TABLE_LOCK:
            t = _TABLE.get(key)
            if t is None:
                t = object.__new__(cls)
                t.op = op
                t.args = args
                t.sort = sort
                t.payload = payload
                t._hash = hash(key)
                _TABLE[key] = t
        return t

    def __hash__(self):
        return self._hash

    def __reduce__(self):
        return (Term, (self.op, self.args, self.sort, self.payload))

    # convenience --------------------------------------------------------
    @property
    def is_var(self) -> bool:
        return self.op == "var"

    @property
    def is_const(self) -> bool:
        return self.op == "const"

    @property
    def name(self) -> str:
        if self.op != "var":
            raise AttributeError("only variables have a name")
        return self.payload[0]

    @property
    def varclass(self) -> VarClass | None:
        if self.op != "var":
            raise AttributeError("only variables have a class")
        return self.payload[1]

    def __repr__(self):
        return f"Term({to_smtlib(self)})"

    def __str__(self):
        return to_smtlib(self)


def var(name: str, sort: Sort, cls: VarClass | None = CURRENT) -> Term:
    return Term("var", (), sort, (name, cls))


def aux_var(name: str, sort: Sort = BOOL) -> Term:
    """A symbol outside the state space; renaming never touches it."""
    return Term("var", (), sort, (name, None))


def const(value, sort: Sort) -> Term:
    if sort.is_bool:
        value = bool(value)
    elif sort.kind == "Int":
        if isinstance(value, Fraction):
            if value.denominator != 1:
                raise SortError(f"{value} is not an integer")
            value = value.numerator
        value = int(value)
    elif sort.kind == "Real":
        value = Fraction(value)
    else:
        value = int(value) % (1 << sort.width)
    return Term("const", (), sort, value)


TRUE = const(True, BOOL)
FALSE = const(False, BOOL)


def int_const(v: int) -> Term:
    return const(v, INT)


def real_const(v) -> Term:
    return const(Fraction(v), REAL)


def bv_const(v: int, width: int) -> Term:
    return const(v, bv_sort(width))


# -- operator signatures -----------------------------------------------------

BOOL_CONNECTIVES = frozenset({"and", "or", "not", "=>", "xor"})

_ARITH = {"+", "-", "*"}
_CMP = {"<=", "<", ">=", ">"}
_BV_BINARY = {
    "bvadd", "bvsub", "bvmul", "bvudiv", "bvurem", "bvsdiv", "bvsrem",
    "bvsmod", "bvand", "bvor", "bvxor", "bvnand", "bvnor", "bvxnor",
    "bvshl", "bvlshr", "bvashr",
}
_BV_UNARY = {"bvnot", "bvneg"}
_BV_CMP = {"bvult", "bvule", "bvugt", "bvuge", "bvslt", "bvsle", "bvsgt", "bvsge"}
_BV_INDEXED = {"extract", "zero_extend", "sign_extend", "rotate_left",
               "rotate_right", "repeat"}

SUPPORTED_OPS = (BOOL_CONNECTIVES | _ARITH | _CMP | _BV_BINARY | _BV_UNARY
                 | _BV_CMP | _BV_INDEXED
                 | {"=", "distinct", "ite", "/", "div", "mod", "abs",
                    "to_real", "to_int", "is_int", "concat", "bvcomp"})


def _coerce_numeric(args: Sequence[Term]) -> tuple[tuple[Term, ...], Sort]:
    for a in args:
        if not a.sort.is_numeric:
            raise SortError(f"expected numeric argument, got {a.sort}: {a}")
    if all(a.sort == INT for a in args):
        return tuple(args), INT
    out = []
    for a in args:
        if a.sort == INT:
            a = real_const(a.payload) if a.is_const else Term("to_real", (a,), REAL)
        out.append(a)
    return tuple(out), REAL


def _same_sort(op: str, args: Sequence[Term]) -> Sort:
    s = args[0].sort
    for a in args[1:]:
        if a.sort != s:
            raise SortError(f"{op}: mixed argument sorts {s} and {a.sort}")
    return s


def app(op: str, *args: Term, params: tuple = ()) -> Term:
    """Build a well-sorted application, raising SortError otherwise."""
    if op not in SUPPORTED_OPS:
        raise SortError(f"unsupported operator {op!r}")
    if not args:
        raise SortError(f"{op}: needs at least one argument")
    for a in args:
        if not isinstance(a, Term):
            raise TypeError(f"{op}: argument {a!r} is not a Term")
    if op in BOOL_CONNECTIVES:
        for a in args:
            if not a.sort.is_bool:
                raise SortError(f"{op}: non-Boolean argument {a}")
        if op == "not" and len(args) != 1:
            raise SortError("not: exactly one argument")
        return Term(op, tuple(args), BOOL)
    if op in ("=", "distinct"):
        if len(args) < 2:
            raise SortError(f"{op}: needs two arguments")
        if all(a.sort.is_numeric for a in args) and len({a.sort for a in args}) > 1:
            args, _ = _coerce_numeric(args)
        _same_sort(op, args)
        return Term(op, tuple(args), BOOL)
    if op == "ite":
        if len(args) != 3 or not args[0].sort.is_bool:
            raise SortError("ite: (ite Bool s s)")
        c, a, b = args
        if a.sort.is_numeric and b.sort.is_numeric and a.sort != b.sort:
            (a, b), _ = _coerce_numeric((a, b))
        return Term("ite", (c, a, b), _same_sort("ite", (a, b)))
    if op in _ARITH:
        args, s = _coerce_numeric(args)
        return Term(op, args, s)
    if op in _CMP:
        if len(args) < 2:
            raise SortError(f"{op}: needs two arguments")
        args, _ = _coerce_numeric(args)
        return Term(op, args, BOOL)
    if op == "/":
        args, _ = _coerce_numeric(args)
        if len(args) < 2:
            raise SortError("/: needs two arguments")
        args = tuple(real_const(a.payload) if a.is_const and a.sort == INT else a for a in args)
        if any(a.sort != REAL for a in args):
            args = tuple(Term("to_real", (a,), REAL) if a.sort == INT else a for a in args)
        return Term("/", args, REAL)
    if op in ("div", "mod"):
        if len(args) < 2 or any(a.sort != INT for a in args):
            raise SortError(f"{op}: Int arguments required")
        return Term(op, tuple(args), INT)
    if op == "abs":
        if len(args) != 1 or args[0].sort != INT:
            raise SortError("abs: one Int argument")
        return Term(op, tuple(args), INT)
    if op == "to_real":
        if len(args) != 1 or args[0].sort != INT:
            raise SortError("to_real: one Int argument")
        return Term(op, tuple(args), REAL)
    if op in ("to_int", "is_int"):
        if len(args) != 1 or args[0].sort != REAL:
            raise SortError(f"{op}: one Real argument")
        return Term(op, tuple(args), INT if op == "to_int" else BOOL)
    # bit-vectors
    for a in args:
        if not a.sort.is_bv:
            raise SortError(f"{op}: non bit-vector argument {a}")
    if op in _BV_BINARY:
        if len(args) < 2:
            raise SortError(f"{op}: needs two arguments")
        return Term(op, tuple(args), _same_sort(op, args))
    if op in _BV_UNARY:
        if len(args) != 1:
            raise SortError(f"{op}: one argument")
        return Term(op, tuple(args), args[0].sort)
    if op in _BV_CMP:
        if len(args) != 2:
            raise SortError(f"{op}: two arguments")
        _same_sort(op, args)
        return Term(op, tuple(args), BOOL)
    if op == "bvcomp":
        if len(args) != 2:
            raise SortError("bvcomp: two arguments")
        _same_sort(op, args)
        return Term(op, tuple(args), bv_sort(1))
    if op == "concat":
        return Term(op, tuple(args), bv_sort(sum(a.sort.width for a in args)))
    # indexed
    params = tuple(int(p) for p in params)
    if len(args) != 1:
        raise SortError(f"{op}: one argument")
    w = args[0].sort.width
    if op == "extract":
        hi, lo = params
        if not (0 <= lo <= hi < w):
            raise SortError(f"extract {hi} {lo} out of range for width {w}")
        return Term(op, tuple(args), bv_sort(hi - lo + 1), params)
    (n,) = params
    if n < 0 or (op == "repeat" and n < 1):
        raise SortError(f"{op}: bad index {n}")
    if op in ("zero_extend", "sign_extend"):
        return Term(op, tuple(args), bv_sort(w + n), params)
    if op == "repeat":
        return Term(op, tuple(args), bv_sort(w * n), params)
    return Term(op, tuple(args), args[0].sort, params)


def mk_not(t: Term) -> Term:
    if t is TRUE:
        return FALSE
    if t is FALSE:
        return TRUE
    if t.op == "not":
        return t.args[0]
    return app("not", t)


def mk_and(*args: Term) -> Term:
    if len(args) == 1 and not isinstance(args[0], Term):
        args = tuple(args[0])
    out = []
    seen = set()
    for a in args:
        if a is FALSE:
            return FALSE
        if a is TRUE or a in seen:
            continue
        seen.add(a)
        out.append(a)
    if not out:
        return TRUE
    if len(out) == 1:
        return out[0]
    return app("and", *out)


def mk_or(*args: Term) -> Term:
    if len(args) == 1 and not isinstance(args[0], Term):
        args = tuple(args[0])
    out = []
    seen = set()
    for a in args:
        if a is TRUE:
            return TRUE
        if a is FALSE or a in seen:
            continue
        seen.add(a)
        out.append(a)
    if not out:
        return FALSE
    if len(out) == 1:
        return out[0]
    return app("or", *out)


def mk_implies(a: Term, b: Term) -> Term:
    if a is TRUE:
        return b
    if a is FALSE or b is TRUE:
        return TRUE
    return app("=>", a, b)


def mk_eq(a: Term, b: Term) -> Term:
    return app("=", a, b)


def mk_iff(a: Term, b: Term) -> Term:
    if not (a.sort.is_bool and b.sort.is_bool):
        raise SortError("iff needs Boolean arguments")
    return app("=", a, b)


def mk_ite(c: Term, a: Term, b: Term) -> Term:
    return app("ite", c, a, b)


# ---------------------------------------------------------------------------
# Traversal helpers
# ---------------------------------------------------------------------------

def postorder(t: Term) -> Iterator[Term]:
    """Yield every distinct subterm of ``t`` once, children before parents."""
    seen: set[Term] = set()
    stack: list[tuple[Term, bool]] = [(t, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            yield node
            continue
        if node in seen:
            continue
        seen.add(node)
        stack.append((node, True))
        for a in reversed(node.args):
            if a not in seen:
                stack.append((a, False))


def transform(t: Term, leaf: Callable[[Term], Term | None]) -> Term:
    """Rebuild ``t`` bottom-up; ``leaf`` may replace any node (None = keep)."""
    memo: dict[Term, Term] = {}
    for node in postorder(t):
        rep = leaf(node)
        if rep is None:
            if node.args:
                new_args = tuple(memo[a] for a in node.args)
                if any(x is not y for x, y in zip(new_args, node.args)):
                    rep = _rebuild(node, new_args)
                else:
                    rep = node
            else:
                rep = node
        memo[node] = rep
    return memo[t]


def _rebuild(node: Term, args: tuple[Term, ...]) -> Term:
    if node.op == "not":
        return mk_not(args[0])
    if node.op == "and":
        return mk_and(*args)
    if node.op == "or":
        return mk_or(*args)
    return app(node.op, *args, params=node.payload if node.op in _BV_INDEXED else ())


def free_vars(t: Term) -> list[Term]:
    """Variables of ``t`` in first-occurrence order."""
    return [n for n in postorder(t) if n.op == "var"]


def state_vars_of(t: Term) -> list[Term]:
    return [v for v in free_vars(t) if v.payload[1] is not None]


def substitute(t: Term, mapping: Mapping[Term, Term]) -> Term:
    """Replace variables according to ``mapping`` (sort-preserving)."""
    for k, v in mapping.items():
        if k.sort != v.sort:
            raise SortError(f"substitution changes sort of {k}")
    if not mapping:
        return t
    return transform(t, lambda n: mapping.get(n) if n.op == "var" else None)


def retag(t: Term, mapping: Mapping[VarClass, VarClass]) -> Term:
    """Move state variables between classes; classes not in ``mapping`` stay."""
    def leaf(n: Term):
        if n.op == "var":
            cls = n.payload[1]
            if cls is not None and cls in mapping:
                return var(n.payload[0], n.sort, mapping[cls])
        return None
    return transform(t, leaf)


def rename(t: Term, frm: VarClass, to: VarClass) -> Term:
    """Retag every state variable of class ``frm`` as class ``to``.

    All state-variable occurrences must be of class ``frm``.
    """
    for v in free_vars(t):
        cls = v.payload[1]
        if cls is not None and cls != frm:
            raise RenameError(
                f"variable {v.payload[0]!r} has class {cls!r}, expected {frm!r}")
    if frm == to:
        return t
    return retag(t, {frm: to})


def atoms(t: Term) -> list[Term]:
    """Maximal non-connective Boolean subterms, in first-occurrence order."""
    if not t.sort.is_bool:
        raise SortError(f"atoms: expected a Boolean term, got sort {t.sort}")
    out: list[Term] = []
    seen: set[Term] = set()
    stack = [t]
    while stack:
        n = stack.pop()
        if n in seen:
            continue
        seen.add(n)
        if n.op == "const":
            continue
        if _is_connective(n):
            stack.extend(reversed(n.args))
        else:
            out.append(n)
    return out


def _is_connective(n: Term) -> bool:
    if n.op in BOOL_CONNECTIVES:
        return True
    if n.op in ("=", "distinct") and n.args[0].sort.is_bool:
        return True
    if n.op == "ite" and n.sort.is_bool:
        return True
    return False


def is_p_formula(t: Term, preds: Iterable[Term]) -> bool:
    allowed = preds if isinstance(preds, (set, frozenset)) else set(preds)
    return all(a in allowed for a in atoms(t))


def conjuncts(t: Term) -> list[Term]:
    """Flatten nested conjunctions."""
    out = []
    stack = [t]
    while stack:
        n = stack.pop()
        if n.op == "and":
            stack.extend(reversed(n.args))
        elif n is not TRUE:
            out.append(n)
    return out


# ---------------------------------------------------------------------------
# Literals, cubes, clauses
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Literal:
    atom: Term
    positive: bool = True

    def __invert__(self) -> "Literal":
        return Literal(self.atom, not self.positive)

    def to_term(self) -> Term:
        return self.atom if self.positive else mk_not(self.atom)

    def __str__(self):
        return str(self.to_term())


class _LiteralSet:
    __slots__ = ("lits", "_set")

    def __init__(self, lits: Iterable[Literal]):
        lits = tuple(lits)
        seen: dict[Term, bool] = {}
        for lit in lits:
            if not lit.atom.sort.is_bool:
                raise SortError(f"literal atom {lit.atom} is not Boolean")
            if lit.atom in seen:
                raise ValueError(f"duplicate atom {lit.atom} in {type(self).__name__}")
            seen[lit.atom] = lit.positive
        self.lits = lits
        self._set = frozenset(lits)

    def __iter__(self):
        return iter(self.lits)

    def __len__(self):
        return len(self.lits)

    def __contains__(self, lit):
        return lit in self._set

    def __eq__(self, other):
        return type(other) is type(self) and other._set == self._set

    def __hash__(self):
        return hash((type(self).__name__, self._set))

    @property
    def literal_set(self) -> frozenset:
        return self._set

    def atoms(self) -> list[Term]:
        return [lit.atom for lit in self.lits]

    def without(self, lit: Literal):
        return type(self)(x for x in self.lits if x != lit)

    def __repr__(self):
        return f"{type(self).__name__}({', '.join(map(str, self.lits))})"


class Cube(_LiteralSet):
    """Conjunction of literals."""

    __slots__ = ()

    def to_term(self) -> Term:
        return mk_and(*(lit.to_term() for lit in self.lits))

    def negate(self) -> "Clause":
        return Clause(~lit for lit in self.lits)


class Clause(_LiteralSet):
    """Disjunction of literals."""

    __slots__ = ()

    def to_term(self) -> Term:
        return mk_or(*(lit.to_term() for lit in self.lits))

    def negate(self) -> Cube:
        return Cube(~lit for lit in self.lits)

    def subsumes(self, other: "Clause") -> bool:
        return self._set <= other._set


def negate_cube(c: Cube) -> Clause:
    return c.negate()


def negate_clause(c: Clause) -> Cube:
    return c.negate()


# ---------------------------------------------------------------------------
# Printing
# ---------------------------------------------------------------------------

_SIMPLE_CHARS = set("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ"
                    "0123456789~!@$%^&*_-+=<>.?/")
_RESERVED = {"!", "_", "as", "let", "exists", "forall", "match", "par",
             "assert", "true", "false", "BINARY", "DECIMAL", "HEXADECIMAL",
             "NUMERAL", "STRING"}


def quote_symbol(name: str) -> str:
    if (name and all(c in _SIMPLE_CHARS for c in name) and not name[0].isdigit()
            and name not in _RESERVED):
        return name
    if "|" in name or "\\" in name:
        raise ValueError(f"symbol {name!r} cannot be quoted")
    return f"|{name}|"


def default_symbol(v: Term) -> str:
    name, cls = v.payload
    if cls is None:
        return name
    return name + cls.suffix()


def format_const(t: Term) -> str:
    v, s = t.payload, t.sort
    if s.is_bool:
        return "true" if v else "false"
    if s.kind == "Int":
        return str(v) if v >= 0 else f"(- {-v})"
    if s.kind == "Real":
        neg = v < 0
        a = -v if neg else v
        if a.denominator == 1:
            txt = f"{a.numerator}.0"
        else:
            txt = f"(/ {a.numerator}.0 {a.denominator}.0)"
        return f"(- {txt})" if neg else txt
    return "#b" + format(v, f"0{s.width}b")


def to_smtlib(t: Term, namer: Callable[[Term], str] | None = None) -> str:
    """Render ``t`` in SMT-LIB v2 syntax."""
    namer = namer or default_symbol
    memo: dict[Term, str] = {}
    for n in postorder(t):
        if n.op == "var":
            s = quote_symbol(namer(n))
        elif n.op == "const":
            s = format_const(n)
        else:
            head = n.op
            if n.op in _BV_INDEXED:
                head = "(_ " + n.op + " " + " ".join(map(str, n.payload)) + ")"
            s = "(" + head + " " + " ".join(memo[a] for a in n.args) + ")"
        memo[n] = s
    return memo[t]
