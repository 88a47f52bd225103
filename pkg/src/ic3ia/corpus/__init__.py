"""Bundled benchmark systems with known verdicts, and a scalable generator."""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources

from ..system import TransitionSystem, parse_vmt


@dataclass(frozen=True)
class Entry:
    name: str
    property_index: int
    expected: str  # "safe" or "unsafe"
    cex_length: int | None = None  # states in the shortest counterexample
    theory: str = "LIA"


MANIFEST: tuple[Entry, ...] = (
    Entry("s1_counter", 0, "safe"),
    Entry("s2_counter_unsafe", 0, "unsafe", 4),
    Entry("s3_even", 0, "safe"),
    Entry("sat_counter_safe", 0, "safe"),
    Entry("sat_counter_unsafe", 0, "unsafe", 8),
    Entry("down_counter", 0, "safe"),
    Entry("step3_gap", 0, "safe"),
    Entry("two_var_sum", 0, "safe"),
    Entry("diff_bound", 0, "safe"),
    Entry("peterson_safe", 0, "safe"),
    Entry("peterson_broken", 0, "unsafe", 5),
    Entry("lock_safe", 0, "safe"),
    Entry("lock_broken", 0, "unsafe", 5),
    Entry("semaphore_mutex", 0, "safe"),
    Entry("two_proc_counter", 0, "safe"),
    Entry("two_proc_counter_unsafe", 0, "unsafe", 2),
    Entry("multi_prop", 0, "safe"),
    Entry("multi_prop", 1, "unsafe", 6),
    Entry("thermostat", 0, "safe", theory="LRA"),
    Entry("timed_switch", 0, "safe", theory="LRA"),
    Entry("lra_half_steps", 0, "unsafe", 5, theory="LRA"),
    Entry("lra_drift", 0, "safe", theory="LRA"),
    Entry("bv_wrap_counter", 0, "safe", theory="BV"),
    Entry("bv_overflow", 0, "unsafe", 16, theory="BV"),
    Entry("bv_step2_bounded", 0, "safe", theory="BV"),
    Entry("bv_lockstep", 0, "safe", theory="BV"),
    Entry("bool_toggle", 0, "safe", theory="Bool"),
)


def names() -> list[str]:
    return sorted({e.name for e in MANIFEST})


def source(name: str) -> str:
    return resources.files(__name__).joinpath(f"{name}.vmt").read_text()


def path(name: str) -> str:
    """Filesystem path of a bundled file (the package is installed unzipped)."""
    return str(resources.files(__name__).joinpath(f"{name}.vmt"))


def load(name: str, property_index: int = 0) -> TransitionSystem:
    ts, _ = parse_vmt(source(name), property_index)
    return ts


def saturating_counters(n: int, bound: int = 5) -> str:
    """VMT text for n independent counters, each saturating at ``bound``.

    The property bounds every counter, so the proof needs one clause (and
    predicates) per counter.
    """
    if n < 1:
        raise ValueError("need at least one counter")
    lines = [f"; {n} independent saturating counters"]
    for i in range(n):
        lines.append(f"(declare-fun x{i} () Int)")
        lines.append(f"(declare-fun x{i}.next () Int)")
    for i in range(n):
        lines.append(f"(define-fun .sv{i} () Int (! x{i} :next x{i}.next))")
    init = " ".join(f"(= x{i} 0)" for i in range(n))
    trans = " ".join(f"(= x{i}.next (ite (< x{i} {bound}) (+ x{i} 1) x{i}))" for i in range(n))
    prop = " ".join(f"(<= x{i} {bound})" for i in range(n))
    lines.append(f"(define-fun .init () Bool (! (and {init} true) :init true))")
    lines.append(f"(define-fun .trans () Bool (! (and {trans} true) :trans true))")
    lines.append(f"(define-fun .prop () Bool (! (and {prop} true) :invar-property 0))")
    return "\n".join(lines) + "\n"
