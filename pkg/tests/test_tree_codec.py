import os
import random

import pytest

from kernel_syntax import FunApp, MalformedEncodingError, Var
from proof_terms import App, Axiom, ExElim, Lam, TLam, TApp, Witness, enumerate_proofs
from tree_codec import (Codebook, NIL, STANDARD_LANG, Tree, TreeLang, ZERO, as_int, decode_proof, decode_term,
                        encode_proof, encode_term, enumerate_trees, list_items, numeral, term_to_tree, tree_list,
                        tree_to_term, try_decode_proof)


SEED = int(os.getenv("KERNEL_SEED", "20240917"))


def test_numerals():
    assert numeral(0) == ZERO
    assert as_int(numeral(7)) == 7
    assert as_int(Tree("s", (NIL,))) is None


def test_lists():
    items = [numeral(1), numeral(2)]
    assert list_items(tree_list(items)) == items
    assert list_items(tree_list([])) == []
    assert list_items(Tree("Cons", (ZERO, ZERO))) is None


def test_language_needs_zero_and_successor():
    with pytest.raises(ValueError):
        TreeLang((("0", 0),))
    with pytest.raises(ValueError):
        TreeLang((("0", 0), ("s", 1), ("s", 2)))
    lang = TreeLang((("0", 0), ("s", 1)))
    assert list(enumerate_trees(lang, 3)) == [numeral(0), numeral(1), numeral(2)]


def test_language_check():
    STANDARD_LANG.check(encode_proof(Lam("a", Axiom("a"))))
    with pytest.raises(MalformedEncodingError):
        STANDARD_LANG.check(Tree("ImpI", (ZERO,)))
    with pytest.raises(MalformedEncodingError):
        STANDARD_LANG.check(Tree("Leaf"))


def test_term_encoding(arith, x):
    book = Codebook.from_signature(arith.signature)
    t = FunApp("s", (x,))
    enc = encode_term(t, book)
    assert enc == Tree("FunApp", (numeral(1), tree_list([Tree("TVar", (numeral(23), Tree("Sortc", (ZERO,))))])))
    assert decode_term(enc, book) == t


def test_proof_encoding_is_injective(arith, x):
    book = Codebook.from_signature(arith.signature)
    zero = FunApp("0")
    proofs = list(enumerate_proofs(4, ("a", "b"), terms=(zero, x), term_binders=(x,)))
    codes = {encode_proof(p, book) for p in proofs}
    assert len(codes) == len(set(proofs))
    for p in (TLam(x, TApp(Axiom("a"), x)), ExElim(Axiom("a"), x, "b", Witness(zero, Axiom("b")))):
        assert decode_proof(encode_proof(p, book), book) == p


def test_variable_names_survive_encoding():
    p = Lam("b0", App(Axiom("b0"), Axiom("z")))
    assert decode_proof(encode_proof(p)) == p


def test_decoding_rejects_junk():
    assert try_decode_proof(ZERO) is None
    assert try_decode_proof(Tree("ImpI", (Tree("Nil"), Tree("TopI")))) is None
    with pytest.raises(MalformedEncodingError):
        decode_proof(Tree("ForallE", (Tree("TopI"), ZERO)))


def test_sort_codes_must_exist(arith):
    book = Codebook.from_signature(arith.signature)
    with pytest.raises(MalformedEncodingError):
        encode_term(Var("t", "tree"), book)
    assert book.signature().functions == arith.signature.functions


def test_trees_as_closed_terms():
    t = encode_proof(Lam("a", Axiom("a")))
    term = tree_to_term(t)
    assert term.symbol == "ImpI"
    assert term_to_tree(term) == t
    assert term_to_tree(FunApp("Plus", (tree_to_term(ZERO),))) is None
    assert term_to_tree(FunApp("s", ())) is None


def test_decoding_inverts_encoding_on_a_thousand_proofs(arith, x, y):
    book = Codebook.from_signature(arith.signature)
    terms = (FunApp("0"), x, FunApp("+", (y, FunApp("s", (x,)))))
    corpus = list(enumerate_proofs(4, ("a", "b", "c1"), terms=terms, term_binders=(x, y)))
    sample = random.Random(SEED).sample(corpus, 1000)
    for p in sample:
        assert decode_proof(encode_proof(p, book), book) == p
        assert try_decode_proof(encode_proof(p, book), book) == p
