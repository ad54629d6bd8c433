import os
import random

import pytest

from conftest import read_sample
from kernel_syntax import And, Atom, BOT, Exists, Forall, FunApp, Implies, Or, Sequent, TOP, Var, subst_in_formula
from proof_checker import check, congruent, normal_form
from proof_terms import (App, Axiom, Case, ExElim, Fst, InjL, InjR, Lam, Pair, Snd, TLam, TApp, TOP_I, Witness,
                         enumerate_proofs, reducts, size)
from sexpr_format import parse_proof, parse_theory, read_formula

SEED = int(os.getenv("KERNEL_SEED", "20240917"))

ZERO = FunApp("0")


def P(t):
    return Atom("P", (t,))


def s(t):
    return FunApp("s", (t,))


def test_rewriting_decides_congruence(arith, arith_norule, y):
    a = P(FunApp("+", (y, ZERO)))
    assert normal_form(a, arith.rules) == P(y)
    assert congruent(a, P(y), arith.rules)
    assert not congruent(a, P(y), arith_norule.rules)


def test_congruence_works_under_binders(arith):
    a = read_formula("(forall (x nat) (P (+ x 0)))", arith.signature)
    b = read_formula("(forall (z nat) (P z))", arith.signature)
    assert congruent(a, b, arith.rules)


def test_plus_zero_needs_the_rule(arith, arith_norule):
    doc = parse_proof(read_sample("plus_zero.proof"), arith.signature)
    ok = check(arith, doc.sequent, doc.term)
    assert ok.accepted
    assert ok.derivation.render()[0] == "[⇒-intro] (imp (P (+ y 0)) (P y))"

    bad = check(arith_norule, doc.sequent, doc.term)
    assert not bad.accepted
    assert bad.error_kind == "RuleMismatchError"


def test_swap_conjunction(arith):
    doc = parse_proof(read_sample("swap.proof"), arith.signature)
    result = check(arith, doc.sequent, doc.term)
    assert result.accepted
    d = result.derivation
    assert d.rule == "∧-intro"
    assert [p.rule for p in d.premises] == ["∧-elim2", "∧-elim1"]


def test_prop_rule_turns_atom_into_top(prop_theory):
    seq = Sequent((), P(ZERO))
    assert check(prop_theory, seq, TOP_I).accepted
    assert not check(prop_theory, Sequent((), P(ZERO)), Lam("a", Axiom("a"))).accepted


def test_quantifier_rules(arith, x, y):
    seq = Sequent((("h", Forall(x, P(x))),), Exists(y, P(s(y))))
    p = Witness(ZERO, TApp(Axiom("h"), s(ZERO)))
    assert check(arith, seq, p).accepted

    seq = Sequent((("h", Exists(y, P(s(y)))),), Exists(y, P(y)))
    p = ExElim(Axiom("h"), x, "c", Witness(s(x), Axiom("c")))
    assert check(arith, seq, p).accepted


def test_eigenvariable_condition(arith, x):
    seq = Sequent((("h", P(x)),), Forall(x, P(x)))
    result = check(arith, seq, TLam(x, Axiom("h")))
    assert not result.accepted
    assert result.error_kind == "EigenvariableError"


def test_undeclared_proof_variable(arith):
    result = check(arith, Sequent((), Implies(TOP, TOP)), Lam("a", Axiom("b")))
    assert not result.accepted
    assert result.error_kind == "ScopeError"


def test_cut_arguments_are_synthesized(arith):
    seq = Sequent((("h", And(TOP, P(ZERO))),), P(ZERO))
    p = App(Lam("a", Fst(Pair(Axiom("a"), Axiom("a")))), Snd(Axiom("h")))
    result = check(arith, seq, p)
    assert result.accepted
    assert result.derivation.rule == "⇒-elim"

    result = check(arith, seq, App(Lam("a", Axiom("a")), Lam("b", Axiom("b"))))
    assert not result.accepted
    assert result.error_kind == "RuleMismatchError"


def test_eliminations_of_introductions_follow_the_goal(arith, x):
    h = (("h", P(ZERO)),)
    result = check(arith, Sequent(h, P(ZERO)), Fst(Pair(Axiom("h"), TOP_I)))
    assert result.accepted
    assert result.derivation.rule == "∧-elim1"
    assert check(arith, Sequent(h, P(ZERO)), Snd(Pair(Lam("c", Axiom("c")), Axiom("h")))).accepted

    result = check(arith, Sequent((), Implies(P(ZERO), P(ZERO))), TApp(TLam(x, Lam("a", Axiom("a"))), ZERO))
    assert result.accepted
    assert result.derivation.rule == "∀-elim"
    assert check(arith, Sequent((), Implies(P(s(ZERO)), P(s(ZERO)))),
                 TApp(TLam(x, Lam("a", Axiom("a"))), s(ZERO))).accepted

    result = check(arith, Sequent(h, P(ZERO)), Case(InjL(Axiom("h")), "a", Axiom("a"), "b", Axiom("b")))
    assert result.accepted
    assert result.derivation.rule == "∨-elim"
    assert check(arith, Sequent(h, P(ZERO)), Case(InjR(Axiom("h")), "a", Axiom("h"), "b", Axiom("b"))).accepted

    assert check(arith, Sequent(h, P(ZERO)), ExElim(Witness(ZERO, Axiom("h")), x, "c", Axiom("c"))).accepted


def test_eliminations_of_introductions_still_reject(arith, x):
    h = (("h", P(ZERO)),)
    assert not check(arith, Sequent(h, P(s(ZERO))), Fst(Pair(Axiom("h"), TOP_I))).accepted
    assert not check(arith, Sequent(h, TOP), Case(InjL(Axiom("h")), "a", Axiom("a"), "b", Axiom("b"))).accepted
    wrong_sort = check(arith, Sequent(h, P(ZERO)), TApp(TLam(Var("z", "tree"), Axiom("h")), ZERO))
    assert not wrong_sort.accepted


def test_check_result_is_a_model(arith):
    result = check(arith, Sequent((), TOP), TOP_I)
    assert result.model_dump(exclude={"derivation"}) == {"accepted": True, "errors": [], "error_kind": None}
    rejected = check(arith, Sequent((), BOT), TOP_I)
    assert rejected.error_kind == "RuleMismatchError"
    assert len(rejected.errors) == 1


def test_fuel_exhaustion_is_reported():
    loop = parse_theory("(theory (sort nat) (fun 0 () nat) (fun s (nat) nat) (pred P (nat))"
                        " (rule term (s x) (s (s x))))")
    result = check(loop, Sequent((), Implies(P(s(ZERO)), P(s(ZERO)))), Lam("a", Axiom("a")), fuel=50)
    assert not result.accepted
    assert result.error_kind == "FuelExhaustedError"


def _propositional_goals():
    p0 = P(ZERO)
    return [
        Sequent((("b", And(p0, TOP)),), Implies(TOP, p0)),
        Sequent((("b", Implies(TOP, p0)),), And(p0, TOP)),
        Sequent((), Implies(p0, And(TOP, p0))),
    ]


def test_subject_reduction_on_sampled_proofs(prop_theory):
    rng = random.Random(SEED)
    corpus = list(enumerate_proofs(6, ("a", "b"), ("var", "top", "lam", "app", "pair", "fst", "snd")))
    small = [p for p in corpus if size(p) <= 4]
    large = [p for p in corpus if size(p) > 4]
    sample = small + rng.sample(large, min(400, len(large)))
    checked = 0
    for seq in _propositional_goals():
        for p in sample:
            if not check(prop_theory, seq, p).accepted:
                continue
            checked += 1
            for r in reducts(p):
                assert check(prop_theory, seq, r).accepted, (seq, p, r)
    assert checked > 0


class _CutProofs:
    """在 arith 里随机生成能被接受的证明，随处插入五种切；切掉的参数一律可推断"""

    HYPS = (("h", P(ZERO)), ("k", P(s(ZERO))))
    CUT_FORMULAS = (TOP, P(ZERO), P(s(ZERO)), And(TOP, P(ZERO)), And(P(ZERO), P(s(ZERO))))
    DETOURS = ("fst", "snd", "app", "case", "tapp", "exelim")

    def __init__(self, theory, rng):
        self.theory = theory
        self.rng = rng
        self.counter = 0

    def fresh(self, base):
        self.counter += 1
        return f"{base}{self.counter}"

    def inferable(self, formula, ctx):
        if formula == TOP:
            return TOP_I
        names = [n for n, f in ctx if f == formula]
        if names:
            return Axiom(self.rng.choice(names))
        left, right = self.inferable(formula.left, ctx), self.inferable(formula.right, ctx)
        return Pair(left, right)

    def terms(self, tctx):
        return [ZERO, s(ZERO)] + sorted(tctx, key=lambda v: v.name)

    def gen(self, goal, ctx, tctx, depth):
        if depth > 0 and self.rng.random() < 0.4:
            return self.detour(goal, ctx, tctx, depth - 1)
        return self.intro(goal, ctx, tctx, depth - 1)

    def intro(self, goal, ctx, tctx, depth):
        names = [n for n, f in ctx if congruent(f, goal, self.theory.rules)]
        if names and (isinstance(goal, Atom) or self.rng.random() < 0.5):
            return Axiom(self.rng.choice(names))
        if goal == TOP:
            return TOP_I
        if isinstance(goal, Implies):
            a = self.fresh("a")
            body = self.gen(goal.right, ctx + ((a, goal.left),), tctx, depth)
            return None if body is None else Lam(a, body)
        if isinstance(goal, And):
            left, right = self.gen(goal.left, ctx, tctx, depth), self.gen(goal.right, ctx, tctx, depth)
            return None if left is None or right is None else Pair(left, right)
        if isinstance(goal, Or):
            sides = [(InjL, goal.left), (InjR, goal.right)]
            self.rng.shuffle(sides)
            for inj, side in sides:
                p = self.gen(side, ctx, tctx, depth)
                if p is not None:
                    return inj(p)
            return None
        if isinstance(goal, Forall):
            u = Var(self.fresh("u"), goal.var.sort)
            body = self.gen(subst_in_formula(goal.body, goal.var, u), ctx, tctx | {u}, depth)
            return None if body is None else TLam(u, body)
        if isinstance(goal, Exists):
            terms = self.terms(tctx)
            self.rng.shuffle(terms)
            for t in terms:
                body = self.gen(subst_in_formula(goal.body, goal.var, t), ctx, tctx, depth)
                if body is not None:
                    return Witness(t, body)
        return None

    def detour(self, goal, ctx, tctx, depth):
        kind = self.rng.choice(self.DETOURS)
        cut = self.rng.choice(self.CUT_FORMULAS)
        arg = self.inferable(cut, ctx)
        if kind in ("fst", "snd"):
            main = self.gen(goal, ctx, tctx, depth)
            if main is None:
                return None
            return Fst(Pair(main, arg)) if kind == "fst" else Snd(Pair(arg, main))
        if kind == "app":
            a = self.fresh("a")
            body = self.gen(goal, ctx + ((a, cut),), tctx, depth)
            return None if body is None else App(Lam(a, body), arg)
        if kind == "case":
            a, b = self.fresh("a"), self.fresh("a")
            other = self.rng.choice([goal, TOP, cut])
            inj = self.rng.choice([InjL, InjR])
            left_hyp, right_hyp = (cut, other) if inj is InjL else (other, cut)
            left = self.gen(goal, ctx + ((a, left_hyp),), tctx, depth)
            right = self.gen(goal, ctx + ((b, right_hyp),), tctx, depth)
            if left is None or right is None:
                return None
            return Case(inj(arg), a, left, b, right)
        u = Var(self.fresh("u"), "nat")
        t = self.rng.choice(self.terms(tctx))
        if kind == "tapp":
            body = self.gen(goal, ctx, tctx | {u}, depth)
            return None if body is None else TApp(TLam(u, body), t)
        c = self.fresh("a")
        body = self.gen(goal, ctx + ((c, cut),), tctx | {u}, depth)
        return None if body is None else ExElim(Witness(t, arg), u, c, body)

    def sample(self, goals, count, depth=3):
        out = []
        for _ in range(count * 20):
            goal = self.rng.choice(goals)
            p = self.gen(goal, self.HYPS, frozenset(), depth)
            if p is not None:
                out.append((Sequent(self.HYPS, goal), p))
            if len(out) == count:
                break
        return out


def _first_order_goals():
    x = Var("x", "nat")
    p0, p1 = P(ZERO), P(s(ZERO))
    return [
        p0,
        P(FunApp("+", (s(ZERO), ZERO))),
        Implies(p0, And(p0, TOP)),
        Or(BOT, p1),
        And(Implies(p0, p0), Or(p1, BOT)),
        Forall(x, Implies(P(x), P(FunApp("+", (x, ZERO))))),
        Exists(x, P(s(x))),
        Forall(x, Or(TOP, P(x))),
        Implies(Forall(x, P(x)), p1),
        Exists(x, Implies(P(x), P(x))),
    ]


def _assert_subject_reduction(theory, samples):
    cuts = 0
    for seq, p in samples:
        result = check(theory, seq, p)
        assert result.accepted, (seq, p, result.errors)
        for r in reducts(p):
            cuts += 1
            assert check(theory, seq, r).accepted, (seq, p, r)
    assert cuts > 0


def test_generated_cuts_are_accepted_and_reduce_to_accepted_proofs(arith):
    samples = _CutProofs(arith, random.Random(SEED)).sample(_first_order_goals(), 150)
    assert len(samples) == 150
    _assert_subject_reduction(arith, samples)


@pytest.mark.slow
def test_subject_reduction_on_a_thousand_generated_proofs(arith):
    samples = _CutProofs(arith, random.Random(SEED + 1)).sample(_first_order_goals(), 1000, depth=4)
    assert len(samples) == 1000
    kinds = {type(p).__name__ for _, p in samples}
    assert {"Case", "ExElim", "TApp", "App"} & kinds
    _assert_subject_reduction(arith, samples)
