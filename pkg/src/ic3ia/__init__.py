"""IC3 with implicit predicate abstraction for SMT transition systems."""

from .abstraction import PredicateSet, abs_bmc_encode, abs_rel_ind, eq_formula, explicit_abstraction
from .cegar import AbstractCex, Refiner, reduce_predicates, simulate
from .engine import IC3IA, EngineConfig, Verdict, check
from .solver import SolverConfig, SolverContext
from .system import ConcretePath, TransitionSystem, parse_vmt, to_vmt

__all__ = [
    "AbstractCex", "ConcretePath", "EngineConfig", "IC3IA", "PredicateSet", "Refiner",
    "SolverConfig", "SolverContext", "TransitionSystem", "Verdict", "abs_bmc_encode",
    "abs_rel_ind", "check", "eq_formula", "explicit_abstraction", "parse_vmt",
    "reduce_predicates", "simulate", "to_vmt",
]
