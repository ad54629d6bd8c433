import os
import random

import pytest

from kernel_syntax import FunApp
from proof_terms import (App, Axiom, Fst, Lam, Pair, Snd, TApp, TLam, canonical_proof, enumerate_proofs, reducts,
                         redn, size, subst_proof, subst_term_in_proof)
from builtin_relations import RELATIONS, SUBSTITUTIONS, builtin_relations, shared_relations
from tree_codec import (Codebook, Tree, TreeLang, decode_proof, encode_proof, encode_proof_var, encode_term, list_items,
                        numeral, tree_list)

SEED = int(os.getenv("KERNEL_SEED", "20240917"))

a, b, c = Axiom("a"), Axiom("b"), Axiom("c")


@pytest.fixture(scope="module")
def book(arith):
    return Codebook.from_signature(arith.signature)


@pytest.fixture(scope="module")
def rel(book):
    return shared_relations(book)


def _decoded_set(t, book):
    return {canonical_proof(decode_proof(x, book)) for x in list_items(t)}


def test_every_relation_is_registered(rel):
    for name in RELATIONS + SUBSTITUTIONS:
        assert name in rel


def test_arithmetic(rel):
    assert rel.holds("Nat", [numeral(3)])
    assert not rel.holds("Nat", [Tree("Nil")])
    assert rel.holds("Le", [numeral(2), numeral(3)])
    assert not rel.holds("Le", [numeral(3), numeral(2)])
    assert rel.holds("Eq", [tree_list([numeral(1)]), tree_list([numeral(1)])])
    assert not rel.holds("Eq", [numeral(1), numeral(2)])


def test_sorts_and_terms(rel, book, x):
    assert rel.holds("Sort", [book.sort_code("nat")])
    assert not rel.holds("Sort", [Tree("Sortc", (numeral(1),))])
    enc = encode_term(FunApp("s", (x,)), book)
    assert rel.holds("Term", [enc, book.sort_code("nat")])
    bad = Tree("FunApp", (numeral(1), tree_list([])))
    assert not rel.holds("Term", [bad, book.sort_code("nat")])
    assert rel.holds("TermVar", [encode_term(x, book)])


def test_proofs_and_eliminations(rel, book):
    assert rel.holds("Proof", [encode_proof(Lam("a", a), book)])
    assert rel.holds("ProofVar", [encode_proof_var("b")])
    assert not rel.holds("Proof", [numeral(0)])
    assert rel.holds("Elim", [encode_proof(App(a, a), book)])
    assert not rel.holds("Elim", [encode_proof(Lam("a", a), book)])


def test_one_step_reduction(rel, book):
    p = encode_proof(Fst(Pair(a, b)), book)
    assert rel.holds("Red", [p, encode_proof(a, book)])
    assert not rel.holds("Red", [p, encode_proof(b, book)])


def test_n_step_reduction(rel, book):
    p = Fst(Pair(Snd(Pair(a, b)), c))
    enc = encode_proof(p, book)
    assert rel.holds("Redn", [enc, numeral(2), encode_proof(b, book)])
    assert not rel.holds("Redn", [enc, numeral(1), encode_proof(b, book)])
    assert rel.holds("Redn", [enc, numeral(0), enc])
    assert redn(p, 2) == frozenset({b})


def test_substitution_renames_like_the_kernel(rel, book, x, y):
    body = Lam("b", App(a, b))
    out = rel.eval("PSubst", [encode_proof(body, book), encode_proof_var("a"), encode_proof(b, book)])
    assert decode_proof(out, book) == subst_proof(body, "a", b)

    q = TLam(y, TApp(a, FunApp("s", (x,))))
    out = rel.eval("TSubst", [encode_proof(q, book), encode_term(x, book), encode_term(y, book)])
    expected = subst_term_in_proof(q, x, y)
    assert expected.var.name == "z"
    assert decode_proof(out, book) == expected


def test_registry_requires_standard_constructors():
    with pytest.raises(ValueError):
        builtin_relations(lang=TreeLang((("0", 0), ("s", 1))))


@pytest.mark.slow
def test_reducts_agree_with_the_kernel(rel, book, x):
    terms = (FunApp("0"), x)
    for p in enumerate_proofs(4, ("a", "b"), terms=terms, term_binders=(x,)):
        got = rel.eval("Reducts", [encode_proof(p, book)])
        assert got.ctor in ("Cons", "Nil")
        assert _decoded_set(got, book) == {canonical_proof(r) for r in reducts(p)}, p
        assert rel.holds("Proof", [encode_proof(p, book)]) is True


PROP_CONSTRUCTORS = ("var", "top", "lam", "app", "pair", "fst", "snd", "inl", "inr", "case")


def _sweep(max_size, constructors, extra, seed=SEED, **kwargs):
    """全部小项，外加从最大两层里抽出的 extra 个"""
    corpus = list(enumerate_proofs(max_size, ("a",), constructors, **kwargs))
    small = [p for p in corpus if size(p) <= max_size - 2]
    large = [p for p in corpus if size(p) > max_size - 2]
    return small + random.Random(seed).sample(large, min(extra, len(large)))


@pytest.mark.slow
def test_reduction_relations_agree_with_the_kernel(rel, book):
    stranger = encode_proof(Axiom("c"), book)
    for p in _sweep(6, PROP_CONSTRUCTORS, 300):
        enc = encode_proof(p, book)
        one = rel.eval("Reducts", [enc])
        assert _decoded_set(one, book) == {canonical_proof(r) for r in reducts(p)}, p
        for r in list_items(one):
            assert rel.holds("Red", [enc, r]), p
        if p not in reducts(p):
            assert not rel.holds("Red", [enc, enc]), p
        assert not rel.holds("Red", [enc, stranger])
        for n in range(5):
            reached = rel.eval("Reach", [numeral(n), tree_list([enc])])
            assert _decoded_set(reached, book) == {canonical_proof(r) for r in redn(p, n)}, (p, n)
            for r in list_items(reached):
                assert rel.holds("Redn", [enc, numeral(n), r]), (p, n)
            assert not rel.holds("Redn", [enc, numeral(n), stranger])
            if not list_items(reached):
                break


@pytest.mark.slow
def test_substitution_relations_agree_with_the_kernel(rel, book, x, y):
    rhos = (b, Lam("b", a), App(a, b))
    for p in _sweep(6, PROP_CONSTRUCTORS, 300):
        enc = encode_proof(p, book)
        for rho in rhos:
            out = rel.eval("PSubst", [enc, encode_proof_var("a"), encode_proof(rho, book)])
            assert canonical_proof(decode_proof(out, book)) == canonical_proof(subst_proof(p, "a", rho)), (p, rho)

    terms = (x, y, FunApp("s", (y,)))
    replacements = (FunApp("0"), y, FunApp("+", (y, x)))
    corpus = _sweep(5, ("var", "lam", "app", "tlam", "tapp", "wit", "exelim"), 300, terms=terms, term_binders=(y,))
    for p in corpus:
        enc = encode_proof(p, book)
        for t in replacements:
            out = rel.eval("TSubst", [enc, encode_term(x, book), encode_term(t, book)])
            assert canonical_proof(decode_proof(out, book)) == canonical_proof(subst_term_in_proof(p, x, t)), (p, t)
