import random

import pytest

from conftest import random_formula
from kernel_syntax import (And, Atom, BOT, Exists, Forall, FunApp, Implies, RewriteRule, Signature, SortCheckError,
                           TOP, Theory, Var, alpha_eq, conj, enumerate_terms, free_vars, fresh_name, iff,
                           ordered_free_vars, subst_formula, subst_in_formula, subst_term, term_vars,
                           universal_closure)


def R(*args):
    return Atom("R", tuple(args))


def test_substitution_renames_bound_variable_on_capture(x, y):
    a = Forall(y, R(x, y))
    out = subst_formula(a, {x: y})
    y1 = Var("y1", "nat")
    assert out == Forall(y1, R(y, y1))
    assert free_vars(out) == {y}


def test_substitution_skips_bound_occurrences(x, y):
    a = And(R(x), Forall(x, R(x)))
    assert subst_formula(a, {x: y}) == And(R(y), Forall(x, R(x)))


def test_substitution_is_simultaneous(x, y):
    a = R(x, y)
    assert subst_formula(a, {x: y, y: x}) == R(y, x)


def test_subst_in_formula_checks_sorts(x):
    other = Var("u", "tree")
    with pytest.raises(SortCheckError):
        subst_in_formula(R(x), x, other)


def test_alpha_equivalence(x, y):
    z = Var("z", "nat")
    assert alpha_eq(Forall(x, R(x)), Forall(z, R(z)))
    assert not alpha_eq(Forall(x, R(x, y)), Forall(y, R(y, y)))
    assert not alpha_eq(Forall(x, R(x)), Exists(x, R(x)))


def test_fresh_name():
    assert fresh_name("x", set()) == "x"
    assert fresh_name("x", {"x", "x1"}) == "x2"
    assert fresh_name("x3", {"x3"}) == "x1"


def test_ordered_free_vars_follow_first_occurrence(x, y):
    a = Implies(R(y), And(R(x), R(y)))
    assert ordered_free_vars(a) == [y, x]
    assert universal_closure(a) == Forall(y, Forall(x, a))


def test_connective_helpers():
    assert conj([]) == TOP
    assert conj([R(), BOT]) == And(R(), BOT)
    assert iff(R(), BOT) == And(Implies(R(), BOT), Implies(BOT, R()))


def test_signature_rejects_ill_sorted_terms(arith):
    sig = arith.signature
    assert sig.sort_of(FunApp("s", (FunApp("0"),))) == "nat"
    with pytest.raises(SortCheckError) as err:
        sig.sort_of(FunApp("s", ()))
    assert err.value.symbol == "s"
    with pytest.raises(SortCheckError):
        sig.check_formula(Atom("Q", ()))


def test_rule_with_extra_rhs_variable_is_rejected(arith, x, y):
    rule = RewriteRule("term", FunApp("+", (x, FunApp("0"))), y)
    with pytest.raises(SortCheckError):
        rule.validate(arith.signature)


def test_theory_axioms_must_be_closed(x):
    sig = Signature(("nat",), {}, {"P": ("nat",)})
    with pytest.raises(SortCheckError):
        Theory(sig, (), (Atom("P", (x,)),)).validate()


def test_enumerate_terms_by_size(arith):
    zero = FunApp("0")
    terms = enumerate_terms(arith.signature, 3)
    assert terms == [zero, FunApp("s", (zero,)), FunApp("s", (FunApp("s", (zero,)),)), FunApp("+", (zero, zero))]


def test_enumerate_terms_uses_variables(arith, x):
    terms = enumerate_terms(arith.signature, 2, [x])
    assert terms == [x, FunApp("0"), FunApp("s", (x,)), FunApp("s", (FunApp("0"),))]


def _random_formulas(count, seed=7):
    rng = random.Random(seed)
    pool = [Var("x", "nat"), Var("y", "nat"), Var("z", "nat")]
    return [random_formula(rng, 4, pool) for _ in range(count)]


def test_substitution_free_variables_on_random_formulas(x, y, z):
    replacements = [FunApp("s", (y,)), FunApp("+", (z, FunApp("0"))), FunApp("0"), y]
    for a in _random_formulas(300):
        for t in replacements:
            out = subst_in_formula(a, x, t)
            expected = free_vars(a) - {x}
            if x in free_vars(a):
                expected |= term_vars(t)
            else:
                assert alpha_eq(out, a)
            assert free_vars(out) == expected, (a, t, out)


def test_substitutions_commute_on_random_formulas(x, y, z):
    t, u = FunApp("s", (y,)), FunApp("+", (z, FunApp("0")))
    for a in _random_formulas(300, seed=11):
        left = subst_in_formula(subst_in_formula(a, x, t), y, u)
        right = subst_in_formula(subst_in_formula(a, y, u), x, subst_term(t, {y: u}))
        assert alpha_eq(left, right), a
