import shutil

import pytest

from ic3ia import terms as T
from ic3ia.solver import SolverConfig, SolverContext
from ic3ia.system import parse_vmt

if shutil.which("z3") is None:
    pytest.skip("z3 executable not found", allow_module_level=True)


def counter_vmt(init="(= x 0)", trans="(= x.next (+ x 1))", prop="(>= x 0)"):
    return ("(declare-fun x () Int)\n(declare-fun x.next () Int)\n"
            "(define-fun .sv0 () Int (! x :next x.next))\n"
            f"(define-fun .init () Bool (! {init} :init true))\n"
            f"(define-fun .trans () Bool (! {trans} :trans true))\n"
            f"(define-fun .p0 () Bool (! {prop} :invar-property 0))\n")


S1_TEXT = counter_vmt()
S2_TEXT = counter_vmt(prop="(not (= x 3))")
S3_TEXT = counter_vmt(trans="(= x.next (+ x 2))", prop="(not (= x 3))")


@pytest.fixture(scope="session")
def solver_config():
    return SolverConfig()


@pytest.fixture
def ctx(solver_config):
    c = SolverContext(solver_config, "test")
    yield c
    c.close()


@pytest.fixture(scope="session")
def s1():
    return parse_vmt(S1_TEXT)[0]


@pytest.fixture(scope="session")
def s2():
    return parse_vmt(S2_TEXT)[0]


@pytest.fixture(scope="session")
def s3():
    return parse_vmt(S3_TEXT)[0]


def ge(v, n):
    return T.app(">=", v, T.int_const(n))


def eq(v, n):
    return T.app("=", v, T.int_const(n))


# one line per acceptance criterion, filled in by test_acceptance.py
ACCEPTANCE: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[n])
