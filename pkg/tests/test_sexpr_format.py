import pytest

from conftest import read_sample
from kernel_syntax import (Atom, FunApp, Implies, KernelSyntaxError, SortCheckError, TOP, Var, alpha_eq)
from proof_terms import App, Axiom, Lam, TLam, TApp
from sexpr_format import (parse_proof, parse_theory, print_formula, print_proof, print_theory, read_formula,
                          read_proof_term, read_sexpr, read_sexprs)


def test_reader_ignores_comments():
    forms = read_sexprs("; header\n(a b) ; trailing\n(c)")
    assert len(forms) == 2
    assert forms[0].head() == "a"


def test_reader_reports_position():
    with pytest.raises(KernelSyntaxError) as err:
        read_sexpr("(a\n  (b c)")
    assert err.value.line is not None


def test_formula_sorts_are_inferred(arith):
    a = read_formula("(imp (P (+ y 0)) (P y))", arith.signature)
    y = Var("y", "nat")
    assert a == Implies(Atom("P", (FunApp("+", (y, FunApp("0"))),)), Atom("P", (y,)))


def test_formula_round_trip(arith):
    text = "(forall (x nat) (imp (not (P x)) (exists (y nat) (and (P (s y)) top))))"
    a = read_formula(text, arith.signature)
    assert print_formula(a) == text
    assert alpha_eq(read_formula(print_formula(a), arith.signature), a)


def test_unknown_predicate_is_a_sort_error(arith):
    with pytest.raises(SortCheckError):
        read_formula("(Q 0)", arith.signature)


def test_theory_file(arith):
    assert arith.signature.sorts == ("nat",)
    assert set(arith.signature.functions) == {"0", "s", "+"}
    (rule,) = arith.rules
    assert rule.kind == "term"
    again = parse_theory(print_theory(arith))
    assert again.signature.functions == arith.signature.functions
    assert again.rules == arith.rules


def test_theory_rejects_unknown_declaration():
    with pytest.raises(KernelSyntaxError):
        parse_theory("(theory (sort nat) (lemma foo))")


def test_proof_document(arith):
    doc = parse_proof(read_sample("plus_zero.proof"), arith.signature)
    assert doc.sequent.hypotheses == ()
    assert doc.term == Lam("a", Axiom("a"))


def test_proof_terms_print_and_read(arith):
    x = Var("x", "nat")
    p = TLam(x, App(Lam("a", Axiom("a")), TApp(Axiom("b"), FunApp("s", (x,)))))
    text = print_proof(p)
    assert text == "(tlam (x nat) (app (lam a (var a)) (tapp (var b) (s x))))"
    assert read_proof_term(text, arith.signature) == p


def test_bare_symbols_in_proof_terms():
    assert read_proof_term("(app a topI)") == App(Axiom("a"), read_proof_term("topI"))
    assert read_formula("top", parse_theory("(theory)").signature) == TOP
