import pytest

from conftest import read_sample
from kernel_syntax import (And, Atom, BOT, CoverageError, Forall, FunApp, Implies, Or, Sequent, SortCheckError,
                           StatementKindError, TOP, Theory, Var, conjuncts, free_vars)
from builtin_relations import builtin_relations
from primrec import parse_prdefs
from proof_terms import Axiom, Lam
from realizer import (RealizabilitySpec, congruent_pairs, cr_formula, emit_realizability_obligations,
                      parse_realizability, realize, realize_sequent, red_star, sn, statement)
from s_theory import rel, s_signature, tvar
from sexpr_format import print_formula, read_formula
from tree_codec import Codebook, encode_proof, numeral, tree_to_term

PI = tvar("pi")


@pytest.fixture(scope="module")
def u_sig():
    reg = builtin_relations()
    reg.register_all(parse_prdefs(read_sample("plus.prdef")))
    return s_signature(reg)


@pytest.fixture(scope="module")
def spec(arith, u_sig):
    return parse_realizability(read_sample("arith_realize.interp"), arith.signature, u_sig)


def test_top_is_realized_by_normalizing_proofs():
    assert realize(RealizabilitySpec(), TOP) == Atom("SN", (PI,))
    assert print_formula(realize(RealizabilitySpec(), TOP)) == "(SN pi)"


def test_implication_clause():
    al, pr, ph = tvar("_al1"), tvar("_pr1"), tvar("_ph1")
    inner = Forall(ph, Implies(sn(ph), sn(FunApp("PSubst", (pr, al, ph)))))
    expected = And(sn(PI), Forall(al, Forall(pr, Implies(red_star(PI, FunApp("ImpI", (al, pr))), inner))))
    assert realize(RealizabilitySpec(), Implies(TOP, TOP)) == expected


def test_bottom_clause():
    assert print_formula(realize(RealizabilitySpec(), BOT)) == "(SN pi)"


def test_conjunction_clause():
    p, q = tvar("_p1"), tvar("_q1")
    out = realize(RealizabilitySpec(), And(TOP, BOT))
    assert out == And(sn(PI), Forall(p, Forall(q, Implies(red_star(PI, FunApp("AndI", (p, q))), And(sn(p), sn(q))))))
    assert print_formula(out) == ("(and (SN pi) (forall (_p1 tree) (forall (_q1 tree) (imp (Red* pi (AndI _p1 _q1))"
                                  " (and (SN _p1) (SN _q1))))))")


def test_disjunction_clause():
    out = realize(RealizabilitySpec(), Or(TOP, BOT))
    assert print_formula(out) == ("(and (SN pi) (and (forall (_p1 tree) (imp (Red* pi (OrI1 _p1)) (SN _p1)))"
                                  " (forall (_q1 tree) (imp (Red* pi (OrI2 _q1)) (SN _q1)))))")


def test_nested_clauses_use_fresh_depths():
    out = realize(RealizabilitySpec(), And(Implies(TOP, TOP), TOP))
    text = print_formula(out)
    assert "(forall (_al2 tree) (forall (_pr2 tree) (imp (Red* _p1 (ImpI _al2 _pr2))" in text
    assert "(forall (_ph2 tree) (imp (SN _ph2) (SN (PSubst _pr2 _al2 _ph2))))" in text


def test_atoms_use_the_template(spec, arith):
    a = read_formula("(P (s 0))", arith.signature)
    assert realize(spec, a) == sn(PI)


def test_universal_clause_guards_terms(spec, arith):
    a = read_formula("(forall (x nat) (P x))", arith.signature)
    out = realize(spec, a)
    v, pr, t = tvar("_v1"), tvar("_pr1"), tvar("_t1")
    sort_code = tree_to_term(Codebook.from_signature(arith.signature).sort_code("nat"))
    guard = And(rel("Nat", tvar("x")), rel("Term", t, sort_code))
    inner = Forall(tvar("x"), Forall(t, Implies(guard, sn(FunApp("TSubst", (pr, v, t))))))
    assert out == And(sn(PI), Forall(v, Forall(pr, Implies(red_star(PI, FunApp("ForallI", (v, pr))), inner))))


def test_existential_clause_has_no_term_guard(spec, arith):
    a = read_formula("(exists (x nat) (P x))", arith.signature)
    out = realize(spec, a)
    assert print_formula(out) == ("(and (SN pi) (forall (_pr1 tree) (forall (_t1 tree) (imp (Red* pi (ExistsI _t1 _pr1))"
                                  " (exists (x tree) (and (= (Nat x) (s 0)) (SN _pr1)))))))")
    assert "Term" not in print_formula(out)
    assert free_vars(out) == {PI}


def test_reserved_names_are_rejected(spec, arith):
    a = Forall(Var("_x", "nat"), Atom("P", (Var("_x", "nat"),)))
    with pytest.raises(SortCheckError):
        realize(spec, a)
    with pytest.raises(SortCheckError):
        realize(spec, read_formula("(P x)", arith.signature), tvar("x"))


def test_sequent_realizer_wraps_hypotheses(spec, arith):
    p0 = read_formula("(P 0)", arith.signature)
    seq = Sequent((("h", p0),), p0)
    wrapped = FunApp("ImpI", (tree_to_term(numeral(7)), PI))
    assert realize_sequent(spec, seq) == realize(spec, Implies(p0, p0), wrapped)


def test_candidate_conditions_have_four_parts():
    parts = conjuncts(cr_formula(sn(PI), PI))
    assert [print_formula(p) for p in parts] == [
        "(forall (_cp tree) (imp (SN _cp) (and (= (Proof _cp) (s 0)) (SN _cp))))",
        "(forall (_ca tree) (imp (= (ProofVar _ca) (s 0)) (SN (Axiom _ca))))",
        "(forall (_cp tree) (forall (_cq tree) (imp (and (SN _cp) (= (Red _cp _cq) (s 0))) (SN _cq))))",
        "(forall (_cp tree) (imp (and (= (Elim _cp) (s 0)) (forall (_cq tree) (imp (= (Red _cp _cq) (s 0)) (SN _cq))))"
        " (SN _cp)))",
    ]
    assert all(not free_vars(p) for p in parts)


def test_obligations(spec, arith, u_sig):
    obs = emit_realizability_obligations(spec, arith, Theory(u_sig))
    assert [o.tag for o in obs] == ["non-empty", "function", "function", "function", "predicate", "congruence"]
    assert obs[-1].provenance == "(P (+ x 0)) ≡ (P x)"
    assert all(not free_vars(o.formula) for o in obs)


def test_missing_realizability_template(arith, u_sig):
    spec = parse_realizability(read_sample("arith_realize.interp"), arith.signature, u_sig)
    spec.realpreds.pop("P")
    with pytest.raises(CoverageError):
        emit_realizability_obligations(spec, arith, Theory(u_sig))


def test_prop_rule_gives_one_pair(prop_theory):
    (rule,) = prop_theory.rules
    assert congruent_pairs(rule, prop_theory.signature) == [(rule.lhs, TOP)]


def test_statement_kinds(spec, arith):
    y = Var("y", "nat")
    typing = statement("typing", spec, FunApp("s", (y,)), arith.signature)
    assert typing.formula == Forall(tvar("y"), Implies(rel("Nat", tvar("y")), rel("Nat", FunApp("s", (tvar("y"),)))))

    norm = statement("normalization-of-realizers", spec, TOP)
    assert norm.kind == "normalization"
    assert norm.formula == Forall(PI, Implies(sn(PI), sn(PI)))

    seq = Sequent((), Implies(TOP, TOP))
    exist = statement("existence", spec, (seq, Lam("a", Axiom("a"))))
    code = tree_to_term(encode_proof(Lam("a", Axiom("a")), spec.codebook))
    assert exist.formula == realize(spec, Implies(TOP, TOP), code)
    assert not free_vars(exist.formula)

    with pytest.raises(StatementKindError):
        statement("soundness", spec, TOP)
    with pytest.raises(StatementKindError):
        statement("sequent-normalization", spec, TOP)
