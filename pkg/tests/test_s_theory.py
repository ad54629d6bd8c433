import pytest

from conftest import read_sample
from kernel_syntax import (And, Atom, BOT, Forall, FormulaTemplate, FunApp, Implies, PrimRecDefinitionError,
                           free_vars)
from builtin_relations import shared_relations
from primrec import parse_prdefs
from s_theory import (EQ, derived_relation, emit_s_axioms, eq, expand_derived, induction_axiom, injectivity_axioms,
                      non_confusion_axioms, rel, s_signature, tvar)
from tree_codec import TreeLang

SMALL_LANG = TreeLang((("0", 0), ("s", 1), ("Nil", 0), ("Cons", 2), ("Leaf", 0)))


def test_constructor_axiom_counts():
    assert len(injectivity_axioms(SMALL_LANG)) == 5
    assert len(non_confusion_axioms(SMALL_LANG)) == 20
    theory = emit_s_axioms(SMALL_LANG, [])
    # reflexivity, symmetry, transitivity, congruence for s and Cons
    assert len(theory.axioms) == 5 + 5 + 20
    assert all(not free_vars(ax) for ax in theory.axioms)


def test_equality_axioms_are_reflexivity_symmetry_transitivity():
    x, y, z = tvar("x"), tvar("y"), tvar("z")
    axioms = emit_s_axioms(SMALL_LANG, []).axioms
    assert axioms[0] == Forall(x, eq(x, x))
    assert axioms[1] == Forall(x, Forall(y, Implies(eq(x, y), eq(y, x))))
    assert axioms[2] == Forall(x, Forall(y, Forall(z, Implies(And(eq(x, y), eq(y, z)), eq(x, z)))))


def test_non_confusion_shape():
    x1, y1 = tvar("x1"), tvar("y1")
    axioms = non_confusion_axioms(TreeLang((("0", 0), ("s", 1))))
    assert Forall(y1, Implies(eq(FunApp("0"), FunApp("s", (y1,))), BOT)) in axioms
    assert Forall(x1, Implies(eq(FunApp("s", (x1,)), FunApp("0")), BOT)) in axioms


def test_prdef_clauses_become_equations():
    defs = parse_prdefs(read_sample("plus.prdef"))
    theory = emit_s_axioms(SMALL_LANG, defs)
    assert len(theory.axioms) == 5 + 1 + 5 + 20 + 5
    assert "Plus" in theory.signature.functions


def test_induction_instances():
    x = tvar("x")
    inst = FormulaTemplate((x,), eq(x, x))
    ax = induction_axiom(SMALL_LANG, inst)
    assert not free_vars(ax)
    assert isinstance(ax, Implies)
    assert ax.right == Forall(x, eq(x, x))
    theory = emit_s_axioms(SMALL_LANG, [], instances=[inst])
    assert theory.axioms[-1] == ax
    with pytest.raises(PrimRecDefinitionError):
        induction_axiom(SMALL_LANG, FormulaTemplate((x, tvar("y")), eq(x, x)))


def test_derived_relations_expand_to_equations():
    p = tvar("p")
    sn = expand_derived(Atom("SN", (p,)))
    assert isinstance(sn, And)
    assert sn.left == rel("Proof", p)
    red = derived_relation("Red*").instantiate([p, p])
    assert free_vars(red) == {p}
    with pytest.raises(KeyError):
        derived_relation("Red")


def test_definition_axioms_are_optional():
    plain = emit_s_axioms(SMALL_LANG, [])
    full = emit_s_axioms(SMALL_LANG, [], with_definitions=True)
    assert len(full.axioms) == len(plain.axioms) + 2
    assert "SN" in full.signature.predicates
    assert "SN" not in plain.signature.predicates


def test_signature_from_registry():
    sig = s_signature(shared_relations())
    assert sig.sorts == ("tree",)
    assert sig.functions["Redn"] == (("tree",) * 3, "tree")
    assert set(sig.predicates) == {EQ, "Red*", "SN"}
