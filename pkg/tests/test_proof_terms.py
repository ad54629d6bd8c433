import pytest

from kernel_syntax import FunApp, KernelSyntaxError, SortCheckError, Var
from proof_terms import (App, Axiom, BotE, Case, ExElim, Fst, InjL, InjR, Lam, Pair, Snd, TLam, TApp, TOP_I, Witness,
                         alpha_eq_proof, enumerate_proofs, is_normal, normalize, omega, reachable, reducts, redn, size,
                         sn_check, step, subst_proof, subst_term_in_proof, var_index, var_name)

a, b, c = Axiom("a"), Axiom("b"), Axiom("c")


def test_var_naming_is_a_bijection():
    assert [var_index(n) for n in ("a", "z", "a0", "b0", "a1")] == [0, 25, 26, 27, 52]
    assert all(var_index(var_name(i)) == i for i in range(200))
    with pytest.raises(KernelSyntaxError):
        var_index("alpha")


def test_size_counts_constructors(x):
    assert size(TOP_I) == 1
    assert size(Lam("a", App(a, b))) == 4
    assert size(TApp(a, FunApp("s", (x,)))) == 2


@pytest.mark.parametrize("redex, rule, contractum", [
    (App(Lam("a", Pair(a, b)), c), "beta", Pair(c, b)),
    (Fst(Pair(a, b)), "fst", a),
    (Snd(Pair(a, b)), "snd", b),
    (Case(InjL(c), "a", Pair(a, a), "b", b), "case-inl", Pair(c, c)),
    (Case(InjR(c), "a", a, "b", Fst(b)), "case-inr", Fst(c)),
])
def test_propositional_cuts(redex, rule, contractum):
    (s,) = step(redex)
    assert s.rule == rule
    assert s.position == ()
    assert s.target == contractum


def test_quantifier_cuts(x):
    zero = FunApp("0")
    body = TApp(a, FunApp("s", (x,)))
    (s,) = step(TApp(TLam(x, body), zero))
    assert s.rule == "forall"
    assert s.target == TApp(a, FunApp("s", (zero,)))

    (s,) = step(ExElim(Witness(zero, c), x, "a", TApp(a, x)))
    assert s.rule == "exists"
    assert s.target == TApp(c, zero)


def test_substitution_avoids_capture():
    out = subst_proof(Lam("b", App(a, b)), "a", b)
    assert isinstance(out, Lam)
    assert out.var != "b"
    assert alpha_eq_proof(out, Lam("c", App(b, c)))


def test_substitution_stops_at_shadowing_binder():
    p = Pair(a, Lam("a", a))
    assert subst_proof(p, "a", TOP_I) == Pair(TOP_I, Lam("a", a))


def test_term_substitution_avoids_capture(x, y):
    p = TLam(y, TApp(a, FunApp("+", (x, y))))
    out = subst_term_in_proof(p, x, y)
    assert isinstance(out, TLam)
    assert out.var != y
    assert out.body == TApp(a, FunApp("+", (y, out.var)))


def test_term_substitution_checks_sorts(arith, x):
    with pytest.raises(SortCheckError):
        subst_term_in_proof(TApp(a, x), x, Var("t", "tree"), arith.signature)


def test_alpha_equivalence_of_proofs(x, y):
    assert alpha_eq_proof(Lam("a", a), Lam("b", b))
    assert not alpha_eq_proof(Lam("a", b), Lam("b", b))
    assert alpha_eq_proof(TLam(x, TApp(a, x)), TLam(y, TApp(a, y)))
    assert alpha_eq_proof(Case(c, "a", a, "b", b), Case(c, "b", b, "a", a))


def test_reducts_cover_every_position():
    inner = Fst(Pair(a, b))
    p = App(Lam("c", Pair(c, c)), inner)
    out = reducts(p)
    assert Pair(inner, inner) in out
    assert App(Lam("c", Pair(c, c)), a) in out
    assert len(out) == 2
    assert not is_normal(p)
    assert is_normal(BotE(a))


def test_redn_and_reachable():
    p = Fst(Pair(Snd(Pair(a, b)), c))
    assert redn(p, 2) == frozenset({b})
    seen, complete = reachable(p, 5)
    assert complete
    assert b in seen and len(seen) == 4
    _, complete = reachable(p, 1)
    assert not complete


def test_sn_of_normal_and_reducible_terms():
    assert str(sn_check(Lam("a", a), 10)) == "StronglyNormalizing 0"
    verdict = sn_check(App(Lam("a", Fst(a)), Pair(b, c)), 10)
    assert verdict.is_sn
    assert verdict.longest == 2


def test_omega_cycles():
    verdict = sn_check(omega(), 10)
    assert verdict.status == "CycleFound"
    assert omega() in verdict.cycle


def test_weak_but_not_strong_normalization():
    p = App(Lam("a", TOP_I), omega())
    assert TOP_I in reducts(p)
    assert sn_check(p, 10).status == "CycleFound"


def test_bound_exceeded():
    p = a
    for _ in range(6):
        p = Fst(Pair(p, b))
    verdict = sn_check(p, 3)
    assert str(verdict) == "BoundExceeded 3"
    assert sn_check(p, 6).is_sn
    with pytest.raises(ValueError):
        sn_check(p, 0)


def test_normalize_is_leftmost_outermost():
    p = App(Lam("a", TOP_I), omega())
    trace = normalize(p, limit=5)
    assert trace.normal
    assert trace.result == TOP_I
    assert [s.rule for s in trace.steps] == ["beta"]

    stuck = normalize(omega(), limit=3)
    assert not stuck.normal
    assert len(stuck.steps) == 3


def test_enumeration_is_by_size():
    terms = list(enumerate_proofs(2, ("a",), ("var", "top", "lam", "fst")))
    assert terms == [a, TOP_I, Lam("a", a), Fst(a), Lam("a", TOP_I), Fst(TOP_I)]
    assert len(set(enumerate_proofs(3, ("a", "b")))) == len(list(enumerate_proofs(3, ("a", "b"))))


PROP_CONSTRUCTORS = ("var", "top", "lam", "app", "pair", "fst", "snd", "inl", "inr", "case")


def _subst_commutes(corpus):
    rhos = [App(b, c), Lam("c", b)]
    sigmas = [Pair(c, c), Lam("a", a), TOP_I]
    for p in corpus:
        for rho in rhos:
            for sigma in sigmas:
                left = subst_proof(subst_proof(p, "a", rho), "b", sigma)
                right = subst_proof(subst_proof(p, "b", sigma), "a", subst_proof(rho, "b", sigma))
                assert alpha_eq_proof(left, right), (p, rho, sigma)


def test_proof_substitutions_commute():
    _subst_commutes(enumerate_proofs(4, ("a", "b", "c"), PROP_CONSTRUCTORS))


@pytest.mark.slow
def test_proof_substitutions_commute_up_to_size_six():
    _subst_commutes(enumerate_proofs(6, ("a", "b"), PROP_CONSTRUCTORS))


def test_term_substitutions_commute(x, y):
    t, u = FunApp("s", (y,)), FunApp("0")
    corpus = enumerate_proofs(5, ("a",), ("var", "lam", "app", "tlam", "tapp", "wit", "exelim"),
                              terms=(x, y, t), term_binders=(x, y))
    for p in corpus:
        left = subst_term_in_proof(subst_term_in_proof(p, x, t), y, u)
        right = subst_term_in_proof(subst_term_in_proof(p, y, u), x, FunApp("s", (u,)))
        assert alpha_eq_proof(left, right), p


def test_proof_and_term_substitutions_commute(x):
    t = FunApp("s", (FunApp("0"),))
    rho = TApp(b, x)
    corpus = enumerate_proofs(5, ("a", "b"), ("var", "lam", "app", "tlam", "tapp", "exelim"),
                              terms=(x,), term_binders=(x,))
    for p in corpus:
        left = subst_term_in_proof(subst_proof(p, "a", rho), x, t)
        right = subst_proof(subst_term_in_proof(p, x, t), "a", subst_term_in_proof(rho, x, t))
        assert alpha_eq_proof(left, right), p


def _one_step_agrees(corpus):
    for p in corpus:
        assert redn(p, 1) == frozenset(s.target for s in step(p)), p
        assert redn(p, 0) == frozenset({p})


def test_one_step_reducts_match_step():
    _one_step_agrees(enumerate_proofs(4, ("a", "b"), PROP_CONSTRUCTORS))


@pytest.mark.slow
def test_one_step_reducts_match_step_up_to_size_eight():
    _one_step_agrees(enumerate_proofs(8, ("a",), ("var", "lam", "app", "pair", "fst")))


def test_omega_only_reaches_itself():
    assert redn(omega(), 5) == frozenset({omega()})
    assert reducts(omega()) == [omega()]


def _sn_verdicts_are_sound(corpus, bound):
    for p in corpus:
        verdict = sn_check(p, bound)
        if not verdict.is_sn:
            continue
        assert verdict.longest <= bound
        assert redn(p, verdict.longest), p
        assert not redn(p, verdict.longest + 1), p


def test_sn_verdicts_bound_every_reduction_sequence():
    _sn_verdicts_are_sound(enumerate_proofs(5, ("a",), ("var", "top", "lam", "app", "pair", "fst", "inl", "case")), 10)


@pytest.mark.slow
def test_sn_verdicts_bound_every_reduction_sequence_up_to_size_seven():
    _sn_verdicts_are_sound(enumerate_proofs(7, ("a",), ("var", "lam", "app", "pair", "fst")), 20)
