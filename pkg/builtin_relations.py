"""
内置原始递归关系集 - 证明项编码上的 Nat/Le/Sort/TermVar/Term/ProofVar/Proof/Elim/Red/Redn 与 TSubst/PSubst

核心原则：
1. 全部定义都用 prdef 文本写出，经 primrec.parse_prdefs 读入，本身就是"原始递归"的证书
2. 依赖构造子表（Head/ArgK/Eq/Put/Reducts）或编码本（Sort/Term）的部分按需生成文本
3. Sub 与 proof_terms.subst_env 遵循同一个换名纪律：
   新编号 = max(VarTop(结点), VarTop(环境))，换名判定逐条对应 _captures_proof_binder/_captures_term_binder
4. 布尔值是数码 0/1
"""

from functools import lru_cache
from typing import Sequence

from primrec import PrRegistry, parse_prdefs
from tree_codec import (Codebook, ELIMINATION_CONSTRUCTORS, EMPTY_CODEBOOK, PROOF_POSITIONS, STANDARD_LANG,
                        Tree, TreeLang)


RELATIONS = ("Nat", "Le", "Sort", "TermVar", "Term", "ProofVar", "Proof", "Elim", "Red", "Redn")
SUBSTITUTIONS = ("TSubst", "PSubst")

MAX_ARITY = 5


_BOOLEANS = """
(prdef Not 1 (rec 1) (clause 0 1) (clause _ 0))
(prdef If 3 (rec 1) (clause 0 (arg 3)) (clause _ (arg 2)))
(prdef And 2 (rec 1) (clause 0 0) (clause _ (if (arg 2) 1 0)))
(prdef Or 2 (rec 1) (clause 0 (if (arg 2) 1 0)) (clause _ 1))
(prdef IsSucc 1 (rec 1) (clause s 1) (clause _ 0))
(prdef IsCons 1 (rec 1) (clause Cons 1) (clause _ 0))
(prdef IsNil 1 (rec 1) (clause Nil 1) (clause _ 0))
(prdef Pred 1 (rec 1) (clause s (child 1)) (clause _ 0))
(prdef Nat 1 (rec 1) (clause 0 1) (clause s (rec 1)) (clause _ 0))
(prdef EqNat 2 (rec 1)
  (clause 0 (call Not (arg 2)))
  (clause s (if (call IsSucc (arg 2)) (rec 1 (call Pred (arg 2))) 0))
  (clause _ 0))
"""

_ARITH_LISTS = """
(prdef Le 2 (rec 1)
  (clause 0 (call Nat (arg 2)))
  (clause s (if (call IsSucc (arg 2)) (rec 1 (call Pred (arg 2))) 0))
  (clause _ 0))
(prdef Max 2 (rec 1)
  (clause 0 (arg 2))
  (clause s (if (call IsSucc (arg 2)) (s (rec 1 (call Pred (arg 2)))) (arg 1)))
  (clause _ (arg 2)))
(prdef Append 2 (rec 1) (clause Cons (Cons (child 1) (rec 2))) (clause _ (arg 2)))
(prdef Member 2 (rec 2) (clause Cons (if (call Eq (arg 1) (child 1)) 1 (rec 2))) (clause _ 0))
(prdef Nth 2 (rec 1)
  (clause 0 (call Arg1 (arg 2)))
  (clause s (rec 1 (call Arg2 (arg 2))))
  (clause _ 0))
"""

# 变量编号、自由出现、捕获判定、代换
_VARIABLES = """
(prdef VarTop 1 (rec 1)
  (clause Cons (call Max (rec 1) (rec 2)))
  (clause TVar (s (child 1)))
  (clause FunApp (rec 2))
  (clause PBind (call Max (s (child 1)) (rec 2)))
  (clause TBind (call Max (rec 1) (rec 2)))
  (clause Axiom (s (child 1)))
  (clause ImpI (call Max (s (child 1)) (rec 2)))
  (clause ImpE (call Max (rec 1) (rec 2)))
  (clause AndI (call Max (rec 1) (rec 2)))
  (clause AndE1 (rec 1))
  (clause AndE2 (rec 1))
  (clause OrI1 (rec 1))
  (clause OrI2 (rec 1))
  (clause BotE (rec 1))
  (clause OrE (call Max (rec 1) (call Max (s (child 2)) (call Max (rec 3) (call Max (s (child 4)) (rec 5))))))
  (clause ForallI (call Max (rec 1) (rec 2)))
  (clause ForallE (call Max (rec 1) (rec 2)))
  (clause ExistsI (call Max (rec 1) (rec 2)))
  (clause ExistsE (call Max (rec 1) (call Max (rec 2) (call Max (s (child 3)) (rec 4)))))
  (clause _ 0))

(prdef PFree 2 (rec 2)
  (clause Axiom (call EqNat (arg 1) (child 1)))
  (clause ImpI (if (call EqNat (arg 1) (child 1)) 0 (rec 2)))
  (clause ImpE (call Or (rec 1) (rec 2)))
  (clause AndI (call Or (rec 1) (rec 2)))
  (clause AndE1 (rec 1))
  (clause AndE2 (rec 1))
  (clause OrI1 (rec 1))
  (clause OrI2 (rec 1))
  (clause BotE (rec 1))
  (clause OrE (call Or (rec 1) (call Or (if (call EqNat (arg 1) (child 2)) 0 (rec 3))
                                        (if (call EqNat (arg 1) (child 4)) 0 (rec 5)))))
  (clause ForallI (rec 2))
  (clause ForallE (rec 1))
  (clause ExistsI (rec 2))
  (clause ExistsE (call Or (rec 1) (if (call EqNat (arg 1) (child 3)) 0 (rec 4))))
  (clause _ 0))

(prdef TFree 2 (rec 2)
  (clause TVar (call Eq (arg 1) (arg 2)))
  (clause FunApp (rec 2))
  (clause Cons (call Or (rec 1) (rec 2)))
  (clause ImpI (rec 2))
  (clause ImpE (call Or (rec 1) (rec 2)))
  (clause AndI (call Or (rec 1) (rec 2)))
  (clause AndE1 (rec 1))
  (clause AndE2 (rec 1))
  (clause OrI1 (rec 1))
  (clause OrI2 (rec 1))
  (clause BotE (rec 1))
  (clause OrE (call Or (rec 1) (call Or (rec 3) (rec 5))))
  (clause ForallI (if (call Eq (arg 1) (child 1)) 0 (rec 2)))
  (clause ForallE (call Or (rec 1) (rec 2)))
  (clause ExistsI (call Or (rec 1) (rec 2)))
  (clause ExistsE (call Or (rec 1) (if (call Eq (arg 1) (child 2)) 0 (rec 4))))
  (clause _ 0))

; (BindCapP b body bind)：bind = PBind(k, r)，k ≠ b，k 在 body 中自由，b 在 r 中自由
(prdef BindCapP 3 (rec 3)
  (clause PBind (if (call EqNat (child 1) (arg 1)) 0
                    (if (call PFree (child 1) (arg 2)) (call PFree (arg 1) (child 2)) 0)))
  (clause _ 0))
(prdef CapP 3 (rec 3)
  (clause Cons (if (call BindCapP (arg 1) (arg 2) (child 1)) 1 (rec 2)))
  (clause _ 0))
(prdef BindCapT 3 (rec 3)
  (clause TBind (if (call Eq (child 1) (arg 1)) 0
                    (if (call TFree (child 1) (arg 2)) (call TFree (arg 1) (child 2)) 0)))
  (clause PBind (if (call PFree (child 1) (arg 2)) (call TFree (arg 1) (child 2)) 0))
  (clause _ 0))
(prdef CapT 3 (rec 3)
  (clause Cons (if (call BindCapT (arg 1) (arg 2) (child 1)) 1 (rec 2)))
  (clause _ 0))

(prdef Fresh 2 (rec 1) (clause _ (call Max (call VarTop (arg 1)) (call VarTop (arg 2)))))
; (PBinder n body env node) / (TBinder v body env node)：换名后的约束变量
(prdef PBinder 4 (rec 1)
  (clause _ (if (call CapP (arg 1) (arg 2) (arg 3)) (call Fresh (arg 4) (arg 3)) (arg 1))))
(prdef TBinder 4 (rec 1)
  (clause _ (if (call CapT (arg 1) (arg 2) (arg 3))
                (TVar (call Fresh (arg 4) (arg 3)) (call Arg2 (arg 1)))
                (arg 1))))

(prdef IsPBindFor 2 (rec 2) (clause PBind (call EqNat (arg 1) (child 1))) (clause _ 0))
(prdef IsTBindFor 2 (rec 2) (clause TBind (call Eq (arg 1) (child 1))) (clause _ 0))
(prdef LookP 3 (rec 2)
  (clause Cons (if (call IsPBindFor (arg 1) (child 1)) (call Arg2 (child 1)) (rec 2)))
  (clause _ (arg 3)))
(prdef LookT 3 (rec 2)
  (clause Cons (if (call IsTBindFor (arg 1) (child 1)) (call Arg2 (child 1)) (rec 2)))
  (clause _ (arg 3)))

(prdef SubT 2 (rec 1)
  (clause TVar (call LookT (arg 1) (arg 2) (arg 1)))
  (clause FunApp (FunApp (child 1) (rec 2)))
  (clause Cons (Cons (rec 1) (rec 2)))
  (clause _ (arg 1)))

(prdef Sub 2 (rec 1)
  (clause Axiom (call LookP (child 1) (arg 2) (arg 1)))
  (clause ImpI (ImpI (call PBinder (child 1) (child 2) (arg 2) (arg 1))
                     (rec 2 (Cons (PBind (child 1) (Axiom (call PBinder (child 1) (child 2) (arg 2) (arg 1))))
                                  (arg 2)))))
  (clause ImpE (ImpE (rec 1) (rec 2)))
  (clause AndI (AndI (rec 1) (rec 2)))
  (clause AndE1 (AndE1 (rec 1)))
  (clause AndE2 (AndE2 (rec 1)))
  (clause OrI1 (OrI1 (rec 1)))
  (clause OrI2 (OrI2 (rec 1)))
  (clause BotE (BotE (rec 1)))
  (clause OrE (OrE (rec 1)
                   (call PBinder (child 2) (child 3) (arg 2) (arg 1))
                   (rec 3 (Cons (PBind (child 2) (Axiom (call PBinder (child 2) (child 3) (arg 2) (arg 1))))
                                (arg 2)))
                   (call PBinder (child 4) (child 5) (arg 2) (arg 1))
                   (rec 5 (Cons (PBind (child 4) (Axiom (call PBinder (child 4) (child 5) (arg 2) (arg 1))))
                                (arg 2)))))
  (clause ForallI (ForallI (call TBinder (child 1) (child 2) (arg 2) (arg 1))
                           (rec 2 (Cons (TBind (child 1) (call TBinder (child 1) (child 2) (arg 2) (arg 1)))
                                        (arg 2)))))
  (clause ForallE (ForallE (rec 1) (call SubT (child 2) (arg 2))))
  (clause ExistsI (ExistsI (call SubT (child 1) (arg 2)) (rec 2)))
  (clause ExistsE (ExistsE (rec 1)
                           (call TBinder (child 2) (child 4) (arg 2) (arg 1))
                           (call PBinder (child 3) (child 4) (arg 2) (arg 1))
                           (rec 4 (Cons (PBind (child 3) (Axiom (call PBinder (child 3) (child 4) (arg 2) (arg 1))))
                                        (Cons (TBind (child 2) (call TBinder (child 2) (child 4) (arg 2) (arg 1)))
                                              (arg 2))))))
  (clause _ (arg 1)))

(prdef PSubst 3 (rec 1) (clause _ (call Sub (arg 1) (Cons (PBind (arg 2) (arg 3)) Nil))))
(prdef TSubst 3 (rec 1) (clause _ (call Sub (arg 1) (Cons (TBind (arg 2) (arg 3)) Nil))))
"""

# 根部切消，结果是 0 或 1 个元素的列表
_ROOT_RULES = """
(prdef RootImpE 2 (rec 1) (clause ImpI (Cons (call PSubst (child 2) (child 1) (arg 2)) Nil)) (clause _ Nil))
(prdef RootFst 1 (rec 1) (clause AndI (Cons (child 1) Nil)) (clause _ Nil))
(prdef RootSnd 1 (rec 1) (clause AndI (Cons (child 2) Nil)) (clause _ Nil))
(prdef RootCase 5 (rec 1)
  (clause OrI1 (Cons (call PSubst (arg 3) (arg 2) (child 1)) Nil))
  (clause OrI2 (Cons (call PSubst (arg 5) (arg 4) (child 1)) Nil))
  (clause _ Nil))
(prdef RootAll 2 (rec 1) (clause ForallI (Cons (call TSubst (child 2) (child 1) (arg 2)) Nil)) (clause _ Nil))
(prdef RootEx 4 (rec 1)
  (clause ExistsI (Cons (call Sub (arg 4) (Cons (PBind (arg 3) (child 2)) (Cons (TBind (arg 2) (child 1)) Nil)))
                        Nil))
  (clause _ Nil))
(prdef RootRed 1 (rec 1)
  (clause ImpE (call RootImpE (child 1) (child 2)))
  (clause AndE1 (call RootFst (child 1)))
  (clause AndE2 (call RootSnd (child 1)))
  (clause OrE (call RootCase (child 1) (child 2) (child 3) (child 4) (child 5)))
  (clause ForallE (call RootAll (child 1) (child 2)))
  (clause ExistsE (call RootEx (child 1) (child 2) (child 3) (child 4)))
  (clause _ Nil))
"""

_REACH = """
(prdef ReductsAll 1 (rec 1) (clause Cons (call Append (call Reducts (child 1)) (rec 2))) (clause _ Nil))
(prdef Dedup 1 (rec 1)
  (clause Cons (if (call Member (child 1) (rec 2)) (rec 2) (Cons (child 1) (rec 2))))
  (clause _ Nil))
(prdef Reach 2 (rec 1)
  (clause 0 (arg 2))
  (clause s (rec 1 (call Dedup (call ReductsAll (arg 2)))))
  (clause _ Nil))
"""

_WELL_FORMED = """
(prdef AnyTerm 1 (rec 1)
  (clause TVar (call Term (arg 1) (child 2)))
  (clause FunApp (call Term (arg 1) (call ResSort (child 1))))
  (clause _ 0))
(prdef Proof 1 (rec 1)
  (clause Axiom (call ProofVar (child 1)))
  (clause ImpI (if (call ProofVar (child 1)) (rec 2) 0))
  (clause ImpE (call And (rec 1) (rec 2)))
  (clause AndI (call And (rec 1) (rec 2)))
  (clause AndE1 (rec 1))
  (clause AndE2 (rec 1))
  (clause OrI1 (rec 1))
  (clause OrI2 (rec 1))
  (clause BotE (rec 1))
  (clause OrE (if (rec 1) (if (call ProofVar (child 2)) (if (rec 3) (if (call ProofVar (child 4)) (rec 5) 0) 0) 0) 0))
  (clause TopI 1)
  (clause ForallI (if (call TermVar (child 1)) (rec 2) 0))
  (clause ForallE (if (rec 1) (call AnyTerm (child 2)) 0))
  (clause ExistsI (if (call AnyTerm (child 1)) (rec 2) 0))
  (clause ExistsE (if (rec 1) (if (call TermVar (child 2)) (if (call ProofVar (child 3)) (rec 4) 0) 0) 0))
  (clause _ 0))
(prdef Red 2 (rec 1) (clause _ (if (call Proof (arg 1)) (call Member (arg 2) (call Reducts (arg 1))) 0)))
(prdef Redn 3 (rec 1)
  (clause _ (if (call Proof (arg 1)) (call Member (arg 3) (call Reach (arg 2) (Cons (arg 1) Nil))) 0)))
"""


# ==================== 生成的部分 ====================

def _lit(t: Tree) -> str:
    if not t.children:
        return t.ctor
    return "(" + " ".join([t.ctor] + [_lit(c) for c in t.children]) + ")"


def _list_lit(items: Sequence[str]) -> str:
    out = "Nil"
    for it in reversed(items):
        out = f"(Cons {it} {out})"
    return out


def _structure_defs(lang: TreeLang) -> str:
    lines = ["(prdef Head 1 (rec 1) "
             + " ".join(f"(clause {c} {i})" for i, c in enumerate(lang.names)) + ")"]
    for k in range(1, MAX_ARITY + 1):
        clauses = [f"(clause {c} (child {k}))" for c, a in lang.constructors if a >= k]
        lines.append(f"(prdef Arg{k} 1 (rec 1) {' '.join(clauses)} (clause _ 0))")
    eq = []
    for i, (c, a) in enumerate(lang.constructors):
        body = "1"
        for j in reversed(range(1, a + 1)):
            body = f"(if (rec {j} (call Arg{j} (arg 2))) {body} 0)"
        eq.append(f"(clause {c} (if (call EqNat {i} (call Head (arg 2))) {body} 0))")
    lines.append(f"(prdef Eq 2 (rec 1) {' '.join(eq)})")
    return "\n".join(lines)


def _reduct_defs(lang: TreeLang) -> str:
    lines = []
    for k in range(1, MAX_ARITY + 1):
        clauses = []
        for c, a in lang.constructors:
            if a < k:
                continue
            kids = [("(arg 2)" if j == k else f"(child {j})") for j in range(1, a + 1)]
            clauses.append(f"(clause {c} ({c} {' '.join(kids)}))")
        lines.append(f"(prdef Put{k} 2 (rec 1) {' '.join(clauses)} (clause _ (arg 1)))")
        lines.append(f"(prdef MapPut{k} 2 (rec 1) "
                     f"(clause Cons (Cons (call Put{k} (arg 2) (child 1)) (rec 2))) (clause _ Nil))")
    clauses = []
    for c, positions in PROOF_POSITIONS.items():
        body = "Nil"
        for i in reversed(positions):
            body = f"(call Append (call MapPut{i + 1} (rec {i + 1}) (arg 1)) {body})"
        clauses.append(f"(clause {c} (call Append (call RootRed (arg 1)) {body}))")
    lines.append(f"(prdef Reducts 1 (rec 1) {' '.join(clauses)} (clause _ Nil))")
    return "\n".join(lines)


def _codebook_defs(codebook: Codebook) -> str:
    n_sorts, n_funs = len(codebook.sorts), len(codebook.functions)
    sort_clause = f"(clause Sortc (call Le (child 1) {n_sorts - 1})) " if n_sorts else ""
    res = [_lit(codebook.sort_code(codebook.rank(f)[1])) for f in codebook.functions]
    args = [_list_lit([_lit(codebook.sort_code(s)) for s in codebook.rank(f)[0]]) for f in codebook.functions]
    fun_clause = (f"(if (call Le (child 1) {n_funs - 1}) "
                  f"(if (call Eq (call ResSort (child 1)) (arg 2)) (rec 2 (call ArgSorts (child 1))) 0) 0)"
                  if n_funs else "0")
    return f"""
(prdef ProofVar 1 (rec 1) (clause _ (call Nat (arg 1))))
(prdef Sort 1 (rec 1) {sort_clause}(clause _ 0))
(prdef TermVar 1 (rec 1) (clause TVar (if (call Nat (child 1)) (call Sort (child 2)) 0)) (clause _ 0))
(prdef ResSort 1 (rec 1) (clause _ (call Nth (arg 1) {_list_lit(res)})))
(prdef ArgSorts 1 (rec 1) (clause _ (call Nth (arg 1) {_list_lit(args)})))
(prdef Term 2 (rec 1)
  (clause TVar (if (call Nat (child 1)) (if (call Sort (child 2)) (call Eq (child 2) (arg 2)) 0) 0))
  (clause FunApp {fun_clause})
  (clause Cons (if (call IsCons (arg 2)) (if (rec 1 (call Arg1 (arg 2))) (rec 2 (call Arg2 (arg 2))) 0) 0))
  (clause Nil (call IsNil (arg 2)))
  (clause _ 0))
"""


def _elim_def() -> str:
    clauses = " ".join(f"(clause {c} (call Proof (arg 1)))" for c in ELIMINATION_CONSTRUCTORS)
    return f"(prdef Elim 1 (rec 1) {clauses} (clause _ 0))"


def builtin_prdef_text(codebook: Codebook = EMPTY_CODEBOOK, lang: TreeLang = STANDARD_LANG) -> str:
    """内置定义的 prdef 文本（按依赖顺序）"""
    parts = [_BOOLEANS, _structure_defs(lang), _ARITH_LISTS, _VARIABLES, _ROOT_RULES,
             _reduct_defs(lang), _REACH, _codebook_defs(codebook), _WELL_FORMED, _elim_def()]
    return "\n".join(parts)


def builtin_relations(codebook: Codebook = EMPTY_CODEBOOK, lang: TreeLang = STANDARD_LANG) -> PrRegistry:
    """新建注册表并载入全部内置定义"""
    missing = [c for c, _ in STANDARD_LANG.constructors if not lang.has(c)]
    if missing:
        raise ValueError(f"builtin relations need the standard constructors, missing {missing}")
    return PrRegistry(lang).register_all(parse_prdefs(builtin_prdef_text(codebook, lang)))


@lru_cache(maxsize=8)
def shared_relations(codebook: Codebook = EMPTY_CODEBOOK) -> PrRegistry:
    """同一编码本共用一个注册表（记忆化表随之共享）"""
    return builtin_relations(codebook)
