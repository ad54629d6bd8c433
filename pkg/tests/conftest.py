import os
import sys
from typing import Sequence

import pytest

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
if ROOT not in sys.path:
    sys.path.insert(0, ROOT)

SAMPLES = os.path.join(ROOT, "samples")

from kernel_syntax import (And, Atom, BOT, Exists, Forall, Formula, FunApp, Implies, Or, Signature,  # noqa: E402
                           TOP, Theory, Var)
from sexpr_format import parse_theory  # noqa: E402


def sample(name: str) -> str:
    return os.path.join(SAMPLES, name)


def read_sample(name: str) -> str:
    with open(sample(name), "r", encoding="utf-8") as f:
        return f.read()


@pytest.fixture(scope="session")
def arith() -> Theory:
    return parse_theory(read_sample("arith.theory"))


@pytest.fixture(scope="session")
def arith_norule() -> Theory:
    return parse_theory(read_sample("arith_norule.theory"))


@pytest.fixture(scope="session")
def prop_theory() -> Theory:
    return parse_theory(read_sample("prop.theory"))


@pytest.fixture
def x() -> Var:
    return Var("x", "nat")


@pytest.fixture
def y() -> Var:
    return Var("y", "nat")


@pytest.fixture
def z() -> Var:
    return Var("z", "nat")


@pytest.fixture(scope="session")
def empty_theory() -> Theory:
    return Theory(Signature())


def random_formula(rng, depth: int, variables: Sequence[Var]) -> Formula:
    """arith 签名上的随机公式；量词只绑定 variables 里的变量"""
    terms = [FunApp("0")] + list(variables)
    if depth == 0 or rng.random() < 0.2:
        roll = rng.random()
        if roll < 0.1:
            return TOP
        if roll < 0.2:
            return BOT
        t = rng.choice(terms)
        for _ in range(rng.randint(0, 2)):
            t = FunApp("s", (t,)) if rng.random() < 0.5 else FunApp("+", (t, rng.choice(terms)))
        return Atom("P", (t,))
    kind = rng.choice(("and", "or", "imp", "forall", "exists"))
    if kind == "forall":
        return Forall(rng.choice(variables), random_formula(rng, depth - 1, variables))
    if kind == "exists":
        return Exists(rng.choice(variables), random_formula(rng, depth - 1, variables))
    ctor = {"and": And, "or": Or, "imp": Implies}[kind]
    return ctor(random_formula(rng, depth - 1, variables), random_formula(rng, depth - 1, variables))
