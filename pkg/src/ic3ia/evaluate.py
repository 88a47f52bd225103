"""Local evaluation of ground terms under a variable assignment.

Values are Python ``bool`` for Bool, ``int`` for Int, ``Fraction`` for Real
and unsigned ``int`` for bit-vectors.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Mapping

from .terms import Term, postorder


class EvaluationError(ValueError):
    """The term uses an operator or variable that cannot be evaluated."""


def _signed(v: int, w: int) -> int:
    return v - (1 << w) if v >> (w - 1) else v


def _int_div(a: int, b: int) -> int:
    # SMT-LIB Euclidean division: remainder always non-negative
    if b == 0:
        raise EvaluationError("division by zero is solver-defined")
    q = a // b if b > 0 else -(a // -b)
    if a - b * q < 0:
        q += 1 if b < 0 else -1
    return q


def _bv_sdiv(a, b, w):
    sa, sb = _signed(a, w), _signed(b, w)
    if sb == 0:
        return (1 << w) - 1 if sa >= 0 else 1
    q = abs(sa) // abs(sb)
    if (sa < 0) != (sb < 0):
        q = -q
    return q % (1 << w)


def _bv_srem(a, b, w):
    sa, sb = _signed(a, w), _signed(b, w)
    if sb == 0:
        return a
    r = abs(sa) % abs(sb)
    return (-r if sa < 0 else r) % (1 << w)


def _bv_smod(a, b, w):
    sa, sb = _signed(a, w), _signed(b, w)
    if sb == 0:
        return a
    # Python's % takes the divisor's sign, as bvsmod does
    return (sa % sb) % (1 << w)


def _apply(op: str, t: Term, vals: list):
    s = t.sort
    if op == "not":
        return not vals[0]
    if op == "and":
        return all(vals)
    if op == "or":
        return any(vals)
    if op == "=>":
        res = vals[-1]
        for v in reversed(vals[:-1]):
            res = (not v) or res
        return res
    if op == "xor":
        r = False
        for v in vals:
            r ^= bool(v)
        return r
    if op == "=":
        return all(v == vals[0] for v in vals[1:])
    if op == "distinct":
        return len(set(vals)) == len(vals)
    if op == "ite":
        return vals[1] if vals[0] else vals[2]
    if op == "+":
        return sum(vals[1:], vals[0])
    if op == "-":
        if len(vals) == 1:
            return -vals[0]
        r = vals[0]
        for v in vals[1:]:
            r -= v
        return r
    if op == "*":
        r = vals[0]
        for v in vals[1:]:
            r *= v
        return r
    if op == "/":
        r = Fraction(vals[0])
        for v in vals[1:]:
            if v == 0:
                raise EvaluationError("division by zero is solver-defined")
            r /= v
        return r
    if op in ("<=", "<", ">=", ">"):
        cmp = {"<=": lambda a, b: a <= b, "<": lambda a, b: a < b,
               ">=": lambda a, b: a >= b, ">": lambda a, b: a > b}[op]
        return all(cmp(a, b) for a, b in zip(vals, vals[1:]))
    if op == "div":
        r = vals[0]
        for v in vals[1:]:
            r = _int_div(r, v)
        return r
    if op == "mod":
        a, b = vals
        return a - b * _int_div(a, b)
    if op == "abs":
        return abs(vals[0])
    if op == "to_real":
        return Fraction(vals[0])
    if op == "to_int":
        return vals[0].numerator // vals[0].denominator
    if op == "is_int":
        return vals[0].denominator == 1
    # bit-vectors
    a0 = t.args[0].sort
    w = a0.width
    mask = (1 << w) - 1 if w else 0
    if op == "bvadd":
        return sum(vals) & mask
    if op == "bvsub":
        r = vals[0]
        for v in vals[1:]:
            r -= v
        return r & mask
    if op == "bvmul":
        r = 1
        for v in vals:
            r *= v
        return r & mask
    if op == "bvudiv":
        a, b = vals
        return mask if b == 0 else a // b
    if op == "bvurem":
        a, b = vals
        return a if b == 0 else a % b
    if op == "bvsdiv":
        return _bv_sdiv(vals[0], vals[1], w)
    if op == "bvsrem":
        return _bv_srem(vals[0], vals[1], w)
    if op == "bvsmod":
        return _bv_smod(vals[0], vals[1], w)
    if op in ("bvand", "bvor", "bvxor", "bvnand", "bvnor", "bvxnor"):
        r = vals[0]
        for v in vals[1:]:
            if op in ("bvand", "bvnand"):
                r &= v
            elif op in ("bvor", "bvnor"):
                r |= v
            else:
                r ^= v
        if op in ("bvnand", "bvnor", "bvxnor"):
            r = ~r & mask
        return r
    if op == "bvnot":
        return ~vals[0] & mask
    if op == "bvneg":
        return -vals[0] & mask
    if op == "bvshl":
        a, b = vals
        return (a << b) & mask if b < w else 0
    if op == "bvlshr":
        a, b = vals
        return a >> b if b < w else 0
    if op == "bvashr":
        a, b = vals
        sa = _signed(a, w)
        return (sa >> min(b, w)) & mask
    if op in ("bvult", "bvule", "bvugt", "bvuge"):
        a, b = vals
        return {"bvult": a < b, "bvule": a <= b, "bvugt": a > b, "bvuge": a >= b}[op]
    if op in ("bvslt", "bvsle", "bvsgt", "bvsge"):
        a, b = _signed(vals[0], w), _signed(vals[1], w)
        return {"bvslt": a < b, "bvsle": a <= b, "bvsgt": a > b, "bvsge": a >= b}[op]
    if op == "bvcomp":
        return int(vals[0] == vals[1])
    if op == "concat":
        r = 0
        for arg, v in zip(t.args, vals):
            r = (r << arg.sort.width) | v
        return r
    if op == "extract":
        hi, lo = t.payload
        return (vals[0] >> lo) & ((1 << (hi - lo + 1)) - 1)
    if op == "zero_extend":
        return vals[0]
    if op == "sign_extend":
        return _signed(vals[0], w) & ((1 << s.width) - 1)
    if op == "repeat":
        r = 0
        for _ in range(t.payload[0]):
            r = (r << w) | vals[0]
        return r
    if op in ("rotate_left", "rotate_right"):
        n = t.payload[0] % w
        if op == "rotate_right":
            n = (w - n) % w
        v = vals[0]
        return ((v << n) | (v >> (w - n))) & mask if n else v
    raise EvaluationError(f"cannot evaluate operator {op!r}")


def evaluate(t: Term, env: Mapping[Term, object]):
    """Evaluate ``t`` with every variable looked up in ``env``."""
    memo: dict[Term, object] = {}
    for n in postorder(t):
        if n.op == "var":
            try:
                memo[n] = env[n]
            except KeyError:
                raise EvaluationError(f"no value for variable {n}") from None
        elif n.op == "const":
            memo[n] = n.payload
        else:
            memo[n] = _apply(n.op, n, [memo[a] for a in n.args])
    return memo[t]
