import pytest

from conftest import read_sample
from kernel_syntax import FunApp, PrimRecDefinitionError, UnregisteredSymbolError, Var
from primrec import (PrRegistry, StuckEvaluation, clause_equations, eval_pr, parse_prdef, parse_prdefs, print_prdef)
from sexpr_format import read_sexpr
from tree_codec import STANDARD_LANG, Tree, ZERO, as_int, numeral

IF_DEF = "(prdef If 3 (rec 1) (clause 0 (arg 3)) (clause _ (arg 2)))"


def _registry(*texts):
    reg = PrRegistry()
    for text in texts:
        reg.register_all(parse_prdefs(text))
    return reg


def test_plus_on_numerals():
    reg = _registry(read_sample("plus.prdef"))
    assert as_int(reg.eval("Plus", [numeral(3), numeral(2)])) == 5
    assert reg.eval("Plus", [numeral(4), Tree("Nil")]) == ZERO


def test_recursion_with_changing_parameter():
    reg = _registry(read_sample("plus.prdef"),
                    "(prdef Rev 2 (rec 1) (clause s (rec 1 (s (arg 2)))) (clause _ (arg 2)))")
    assert as_int(reg.eval("Rev", [numeral(3), numeral(1)])) == 4


def test_conditional_is_lazy_sugar_for_if():
    reg = _registry(IF_DEF, "(prdef IsZero 1 (rec 1) (clause 0 1) (clause _ (if (arg 1) 0 1)))")
    assert reg.holds("IsZero", [ZERO])
    assert not reg.holds("IsZero", [numeral(2)])
    assert reg.holds("IsZero", [Tree("Nil")]) is False


def test_eval_pr_registers_definitions():
    reg = PrRegistry()
    d = parse_prdef(read_sexpr(read_sample("plus.prdef")))
    assert as_int(eval_pr(d, [numeral(1), numeral(1)], reg)) == 2
    assert "Plus" in reg
    assert as_int(eval_pr("Plus", [numeral(0), numeral(3)], reg)) == 3


def test_stuck_on_opaque_constructor():
    reg = _registry(read_sample("plus.prdef"))
    with pytest.raises(StuckEvaluation) as err:
        reg.eval("Plus", [ZERO, Tree("c0")])
    assert err.value.function == "Plus"


@pytest.mark.parametrize("text", [
    "(prdef Bad 1 (rec 1) (clause 0 0))",
    "(prdef Bad 1 (rec 2) (clause _ 0))",
    "(prdef Bad 1 (rec 1) (clause _ (rec 1)))",
    "(prdef Bad 1 (rec 1) (clause s (rec 2)) (clause _ 0))",
    "(prdef Bad 1 (rec 1) (clause Leaf 0) (clause _ 0))",
    "(prdef Bad 1 (rec 1) (clause _ (call Bad (arg 1))))",
    "(prdef s 1 (rec 1) (clause _ 0))",
    "(prdef Bad 1 (rec 1) (clause _ (if (arg 1) 0 1)))",
])
def test_invalid_definitions(text):
    with pytest.raises(PrimRecDefinitionError):
        _registry(text)


def test_calls_must_be_registered_first():
    with pytest.raises(UnregisteredSymbolError):
        _registry("(prdef Twice 1 (rec 1) (clause _ (call Plus (arg 1) (arg 1))))")
    with pytest.raises(PrimRecDefinitionError):
        _registry(read_sample("plus.prdef"), read_sample("plus.prdef"))


def test_clause_equations_cover_every_constructor():
    d = parse_prdefs(read_sample("plus.prdef"))[0]
    eqs = clause_equations(d, STANDARD_LANG, "tree")
    assert len(eqs) == len(STANDARD_LANG.names)
    z1, y1 = Var("z1", "tree"), Var("y1", "tree")
    by_lhs = {lhs: (vs, rhs) for vs, lhs, rhs in eqs}
    vs, rhs = by_lhs[FunApp("Plus", (z1, FunApp("s", (y1,))))]
    assert vs == (z1, y1)
    assert rhs == FunApp("s", (FunApp("Plus", (z1, y1)),))
    _, rhs = by_lhs[FunApp("Plus", (z1, FunApp("0", ())))]
    assert rhs == z1


def test_print_and_parse_agree():
    d = parse_prdefs(read_sample("plus.prdef"))[0]
    assert parse_prdef(read_sexpr(print_prdef(d))) == d
