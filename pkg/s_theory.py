"""
语法构造理论 S - 单类型 tree 上的签名、公理生成与派生关系

核心原则：
1. S 的函数符号 = ℒ 的构造子 + 每个 PR 定义一个符号；关系 R 写成 R(x̄) = s(0)
2. 等词公理按印出的形状：x = x、x = y ∧ x = z → y = z、每个非零元函数符号的同余公理
3. 构造子公理：N 条单射 + N(N−1) 条不混淆；PR 定义每条子句一条方程
4. 归纳公理只为调用方给出的实例生成（模式本身无穷）
5. Red* 与 SN 是缩写谓词：派生定义见 derived_relation，可用 expand_derived 展开回纯等词语言
"""

from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from kernel_syntax import (And, Atom, BOT, Exists, Forall, FormulaTemplate, FunApp, Formula, Implies,
                           PrimRecDefinitionError, Signature, Term, Theory, Var, conj, forall_many,
                           fresh_name, iff, neg, universal_closure, var_names, BINARY, QUANTIFIERS)
from primrec import PrimRecDef, PrRegistry, clause_equations
from tree_codec import ONE, STANDARD_LANG, TREE_SORT, TreeLang, tree_to_term


EQ = "="
DERIVED = ("Red*", "SN")

ONE_TERM = tree_to_term(ONE)


def tvar(name: str) -> Var:
    return Var(name, TREE_SORT)


def eq(a: Term, b: Term) -> Atom:
    return Atom(EQ, (a, b))


def rel(name: str, *args: Term) -> Atom:
    """PR 关系 R(x̄) = 1"""
    return eq(FunApp(name, tuple(args)), ONE_TERM)


# ==================== 签名 ====================

def s_signature(registry: Optional[PrRegistry] = None, lang: TreeLang = STANDARD_LANG,
                defs: Iterable[PrimRecDef] = (), with_derived: bool = True) -> Signature:
    functions: Dict[str, Tuple[Tuple[str, ...], str]] = {}
    for name, k in lang.constructors:
        functions[name] = ((TREE_SORT,) * k, TREE_SORT)
    pool = list(registry.defs.values()) if registry is not None else []
    pool += list(defs)
    for d in pool:
        functions[d.name] = ((TREE_SORT,) * d.arity, TREE_SORT)
    predicates = {EQ: (TREE_SORT, TREE_SORT)}
    if with_derived:
        predicates["Red*"] = (TREE_SORT, TREE_SORT)
        predicates["SN"] = (TREE_SORT,)
    return Signature((TREE_SORT,), functions, predicates)


# ==================== 派生关系 ====================

def derived_relation(name: str) -> FormulaTemplate:
    """Red*(x,y) ≡ ∃n (Nat(n) ∧ Redn(x,n,y))
    SN(x) ≡ Proof(x) ∧ ∃n (Nat(n) ∧ ∀y (Proof(y) → ¬Redn(x,n,y)))"""
    x, y, n = tvar("x"), tvar("y"), tvar("n")
    if name == "Red*":
        return FormulaTemplate((x, y), Exists(n, And(rel("Nat", n), rel("Redn", x, n, y))))
    if name == "SN":
        body = And(rel("Proof", x),
                   Exists(n, And(rel("Nat", n), Forall(y, Implies(rel("Proof", y), neg(rel("Redn", x, n, y)))))))
        return FormulaTemplate((x,), body)
    raise KeyError(f"no derived relation named {name}")


def expand_derived(a: Formula) -> Formula:
    """把 Red*/SN 原子替换成定义体"""
    if isinstance(a, Atom):
        if a.pred in DERIVED:
            return derived_relation(a.pred).instantiate(a.args)
        return a
    if isinstance(a, BINARY):
        return type(a)(expand_derived(a.left), expand_derived(a.right))
    if isinstance(a, QUANTIFIERS):
        return type(a)(a.var, expand_derived(a.body))
    return a


# ==================== 公理 ====================

def _vars(prefix: str, k: int, avoid: Sequence[str] = ()) -> List[Var]:
    out = []
    taken = set(avoid)
    for i in range(1, k + 1):
        name = fresh_name(f"{prefix}{i}", taken)
        taken.add(name)
        out.append(tvar(name))
    return out


def equality_axioms(signature: Signature) -> List[Formula]:
    x, y, z = tvar("x"), tvar("y"), tvar("z")
    out: List[Formula] = [
        Forall(x, eq(x, x)),
        forall_many([x, y], Implies(eq(x, y), eq(y, x))),
        forall_many([x, y, z], Implies(And(eq(x, y), eq(y, z)), eq(x, z))),
    ]
    for f, (args, _) in signature.functions.items():
        if not args:
            continue
        xs, ys = _vars("x", len(args)), _vars("y", len(args))
        hyp = conj([eq(a, b) for a, b in zip(xs, ys)])
        out.append(forall_many(xs + ys, Implies(hyp, eq(FunApp(f, tuple(xs)), FunApp(f, tuple(ys))))))
    return out


def injectivity_axioms(lang: TreeLang) -> List[Formula]:
    out = []
    for c, k in lang.constructors:
        xs, ys = _vars("x", k), _vars("y", k)
        concl = conj([eq(a, b) for a, b in zip(xs, ys)])
        out.append(forall_many(xs + ys, Implies(eq(FunApp(c, tuple(xs)), FunApp(c, tuple(ys))), concl)))
    return out


def non_confusion_axioms(lang: TreeLang) -> List[Formula]:
    out = []
    for ci, ki in lang.constructors:
        for cj, kj in lang.constructors:
            if ci == cj:
                continue
            xs, ys = _vars("x", ki), _vars("y", kj)
            out.append(forall_many(xs + ys, Implies(eq(FunApp(ci, tuple(xs)), FunApp(cj, tuple(ys))), BOT)))
    return out


def equation_axioms(d: PrimRecDef, lang: TreeLang) -> List[Formula]:
    return [forall_many(list(vs), eq(lhs, rhs)) for vs, lhs, rhs in clause_equations(d, lang, TREE_SORT)]


def induction_axiom(lang: TreeLang, instance: FormulaTemplate) -> Formula:
    """⋀_i (∀x1…∀xk_i A(c_i(x1,…,xk_i))) → ∀x A(x)，其余自由变量做全称闭包"""
    if len(instance.params) != 1 or instance.params[0].sort != TREE_SORT:
        raise PrimRecDefinitionError("an induction instance needs exactly one hole of sort tree")
    hole = instance.params[0]
    avoid = var_names(instance.body) | {hole.name}
    cases = []
    for c, k in lang.constructors:
        ys = _vars("y", k, sorted(avoid))
        cases.append(forall_many(ys, instance.instantiate([FunApp(c, tuple(ys))])))
    return universal_closure(Implies(conj(cases), Forall(hole, instance.body)))


def definition_axioms() -> List[Formula]:
    out = []
    for name in DERIVED:
        t = derived_relation(name)
        out.append(forall_many(list(t.params), iff(Atom(name, t.params), t.body)))
    return out


def emit_s_axioms(lang: TreeLang, defs: Sequence[PrimRecDef], instances: Sequence[FormulaTemplate] = (),
                  with_definitions: bool = False) -> Theory:
    """生成理论 S：等词、构造子、PR 方程、归纳实例，可选派生关系的定义公理"""
    PrRegistry(lang).register_all(defs)
    signature = s_signature(lang=lang, defs=defs, with_derived=with_definitions)
    axioms: List[Formula] = []
    axioms += equality_axioms(signature)
    axioms += injectivity_axioms(lang)
    axioms += non_confusion_axioms(lang)
    for d in defs:
        axioms += equation_axioms(d, lang)
    for inst in instances:
        axioms.append(induction_axiom(lang, inst))
    if with_definitions:
        axioms += definition_axioms()
    return Theory(signature, (), tuple(axioms)).validate()
