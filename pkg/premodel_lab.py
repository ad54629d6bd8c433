"""
预模型实验台 - 候选集成员判定、可约候选集四条公理检验、预模型同余检验

核心原则：
1. 候选集是三值判定器（member / non-member / unknown），不是外延集合
2. ⟦A⟧_φ 的七条成员子句逐字实现：SN 检查 + 对每个指定引入形状的可达项检查条件
3. → 与 ∀ 子句里"对所有"只能在有限探针集/有界项上近似；近似起作用时结论降为 unknown
4. 只有与界无关的结论才是 member / non-member；提高界不会翻转结论，只会消解 unknown
"""

import os
from itertools import product
from typing import Any, Callable, Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Set, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field
from tabulate import tabulate

from kernel_syntax import (dbg, And, Atom, Bot, Exists, Forall, Formula, Implies, Or, RewriteRule, Signature,
                           SortCheckError, Term, Top, Var, enumerate_terms, free_vars)
from proof_terms import (App, Axiom, InjL, InjR, Lam, Pair, ProofTerm, TLam, Witness, canonical_proof, enumerate_proofs,
                         is_elimination, is_normal, reachable, reducts, sn_check, subst_proof, subst_term_in_proof)
from sexpr_format import (SList, expect_list, expect_sym, infer_sorts, parse_formula, print_formula, print_proof,
                          print_rule, print_term, read_proof_term, read_sexpr, syntax_error)


DEFAULT_SN_BOUND = int(os.getenv("KERNEL_SN_BOUND", "50"))

MEMBER = "member"
NON_MEMBER = "non-member"
UNKNOWN = "unknown"

CANDIDATE_TAGS = ("sn", "normal", "empty-plus-vars", "interp", "finite")

# 语料只用命题片段的构造子
CORPUS_CONSTRUCTORS = ("var", "top", "lam", "app", "pair", "fst", "snd", "inl", "inr")
VARIABLE_POOL = ("a", "b", "c")

MAX_SHOWN = 5


def _combine(values: Iterable[str]) -> str:
    """合取式合并：任一 non-member 即 non-member，否则任一 unknown 即 unknown"""
    seen_unknown = False
    for v in values:
        if v == NON_MEMBER:
            return NON_MEMBER
        if v == UNKNOWN:
            seen_unknown = True
    return UNKNOWN if seen_unknown else MEMBER


# ==================== 配置与数据模型 ====================

class Bounds(BaseModel):
    sn_bound: int = Field(default=DEFAULT_SN_BOUND, ge=1, description="SN 检查与可达搜索的步数上限")
    corpus_size: int = Field(default=6, ge=1, description="检验语料中证明项的最大大小")
    arg_size: int = Field(default=2, ge=1, description="→ 子句中代入的实参证明项的最大大小")
    term_size: int = Field(default=2, ge=1, description="∀ 子句中枚举的项的最大大小")


class Candidate(BaseModel):
    """候选集：tag 决定判定方式；interp 带一个闭公式，finite 带显式成员"""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    tag: str = Field(description="sn / normal / empty-plus-vars / interp / finite")
    formula: Any = None
    members: Tuple[Any, ...] = ()

    def describe(self) -> str:
        if self.tag == "interp":
            return f"interp {print_formula(self.formula)}"
        if self.tag == "finite":
            return "finite {" + ", ".join(print_proof(p) for p in self.members) + "}"
        return self.tag


SN_CANDIDATE = Candidate(tag="sn")


class PreModel(BaseModel):
    """有限载体上的预模型：函数表全定义，谓词值是候选集"""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    signature: Any = Field(default_factory=Signature)
    carriers: Dict[str, List[str]] = Field(default_factory=dict)
    functions: Dict[str, Dict[Tuple[str, ...], str]] = Field(default_factory=dict)
    predicates: Dict[str, Dict[Tuple[str, ...], Candidate]] = Field(default_factory=dict)

    def validate_total(self) -> "PreModel":
        sig: Signature = self.signature
        for s in sig.sorts:
            if not self.carriers.get(s):
                raise SortCheckError(f"carrier of sort {s} is empty", s)
        for f, (args, res) in sig.functions.items():
            table = self.functions.get(f, {})
            for combo in product(*(self.carriers[s] for s in args)):
                if combo not in table:
                    raise SortCheckError(f"function {f} undefined on ({' '.join(combo)})", f)
            for combo, value in table.items():
                self._check_elems(f, combo, args)
                if value not in self.carriers[res]:
                    raise SortCheckError(f"function {f} returns {value}, not an element of {res}", f)
        for p, args in sig.predicates.items():
            table = self.predicates.get(p, {})
            for combo in product(*(self.carriers[s] for s in args)):
                if combo not in table:
                    raise SortCheckError(f"predicate {p} has no candidate at ({' '.join(combo)})", p)
            for combo, cand in table.items():
                self._check_elems(p, combo, args)
                if cand.tag not in CANDIDATE_TAGS:
                    raise SortCheckError(f"unknown candidate tag {cand.tag}", p)
                if cand.tag == "interp":
                    sig.check_formula(cand.formula)
                    if free_vars(cand.formula):
                        raise SortCheckError(f"candidate formula of {p} is not closed", p)
        return self

    def _check_elems(self, symbol: str, combo: Tuple[str, ...], sorts: Sequence[str]) -> None:
        if len(combo) != len(sorts):
            raise SortCheckError(f"{symbol} expects {len(sorts)} arguments, got {len(combo)}", symbol)
        for e, s in zip(combo, sorts):
            if e not in self.carriers.get(s, []):
                raise SortCheckError(f"{e} is not an element of {s}", symbol)

    def eval_term(self, t: Term, phi: "Assignment") -> str:
        if isinstance(t, Var):
            if t not in phi:
                raise SortCheckError(f"assignment does not cover {t.name}", t.name)
            return phi[t]
        return self.functions[t.symbol][tuple(self.eval_term(a, phi) for a in t.args)]

    def assignments(self, variables: Sequence[Var]) -> Iterable["Assignment"]:
        ordered = sorted(variables, key=lambda v: (v.name, v.sort))
        for combo in product(*(self.carriers[v.sort] for v in ordered)):
            yield dict(zip(ordered, combo))


Assignment = Dict[Var, str]


def check_assignment(model: PreModel, phi: Mapping[Var, str]) -> None:
    for v, e in phi.items():
        if e not in model.carriers.get(v.sort, []):
            raise SortCheckError(f"{v.name} is assigned {e}, not an element of {v.sort}", v.name)


class AxiomCheck(BaseModel):
    axiom: str
    passed: bool = True
    checked: int = 0
    unknown: int = 0
    counterexamples: List[str] = Field(default_factory=list)

    def fail(self, witness: str) -> None:
        self.passed = False
        if len(self.counterexamples) < MAX_SHOWN:
            self.counterexamples.append(witness)

    def tally(self, verdict: str, witness: str) -> None:
        self.checked += 1
        if verdict == NON_MEMBER:
            self.fail(witness)
        elif verdict == UNKNOWN:
            self.unknown += 1

    def row(self) -> List[Any]:
        status = "✅ pass" if self.passed else "❌ fail"
        return [self.axiom, status, self.checked, self.unknown,
                self.counterexamples[0] if self.counterexamples else ""]


_HEADERS = ["check", "result", "checked", "unknown", "counterexample"]


class CandidateReport(BaseModel):
    candidate: str
    checks: List[AxiomCheck] = Field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def render(self) -> str:
        return f"candidate: {self.candidate}\n" + tabulate([c.row() for c in self.checks], headers=_HEADERS,
                                                           tablefmt="github")


class CongruenceReport(BaseModel):
    rules: List[AxiomCheck] = Field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.rules)

    def render(self) -> str:
        if not self.rules:
            return "congruence: no rules (vacuous pass)"
        return "congruence:\n" + tabulate([c.row() for c in self.rules], headers=_HEADERS, tablefmt="github")


# ==================== 语料 ====================

def proof_corpus(size: int, proof_vars: Sequence[str] = ("a",)) -> List[ProofTerm]:
    return list(enumerate_proofs(size, proof_vars, CORPUS_CONSTRUCTORS))


# ==================== 成员判定 ====================

Oracle = Callable[[ProofTerm], str]


class Lab:
    """一个预模型上的判定器，缓存 SN、可达集与成员结论"""

    def __init__(self, model: Optional[PreModel] = None, bounds: Optional[Bounds] = None):
        self.model = model or PreModel()
        self.bounds = bounds or Bounds()
        self._sn: Dict[ProofTerm, str] = {}
        self._reach: Dict[ProofTerm, FrozenSet[ProofTerm]] = {}
        self._memo: Dict[Tuple[Formula, FrozenSet, ProofTerm], str] = {}
        self._arguments: Optional[List[ProofTerm]] = None
        self._argument_members: Dict[Tuple[Formula, FrozenSet], List[ProofTerm]] = {}
        self._in_progress: Set[Tuple[Formula, ProofTerm]] = set()

    # ---------- 基本判定 ----------

    def sn(self, p: ProofTerm) -> str:
        if p not in self._sn:
            verdict = sn_check(p, self.bounds.sn_bound)
            if verdict.is_sn:
                self._sn[p] = MEMBER
            elif verdict.status == "CycleFound":
                self._sn[p] = NON_MEMBER
            else:
                self._sn[p] = UNKNOWN
        return self._sn[p]

    def reach(self, p: ProofTerm) -> FrozenSet[ProofTerm]:
        if p not in self._reach:
            self._reach[p] = reachable(p, self.bounds.sn_bound)[0]
        return self._reach[p]

    @property
    def arguments(self) -> List[ProofTerm]:
        if self._arguments is None:
            self._arguments = list(enumerate_proofs(self.bounds.arg_size, VARIABLE_POOL[:2], CORPUS_CONSTRUCTORS))
        return self._arguments

    def argument_members(self, a: Formula, phi: Mapping[Var, str]) -> List[ProofTerm]:
        key = (a, frozenset(phi.items()))
        if key not in self._argument_members:
            self._argument_members[key] = [q for q in self.arguments if self.membership(a, phi, q) == MEMBER]
        return self._argument_members[key]

    def terms_of_sort(self, sort: str) -> List[Term]:
        sig: Signature = self.model.signature
        leaves = [Var("x", sort), Var("y", sort)]
        return [t for t in enumerate_terms(sig, self.bounds.term_size, leaves) if sig.sort_of(t) == sort]

    # ---------- 候选集 ----------

    def candidate(self, c: Candidate, p: ProofTerm) -> str:
        if c.tag == "sn":
            return self.sn(p)
        if c.tag == "normal":
            return MEMBER if is_normal(p) else NON_MEMBER
        if c.tag == "empty-plus-vars":
            return MEMBER if isinstance(p, Axiom) else NON_MEMBER
        if c.tag == "finite":
            key = canonical_proof(p)
            return MEMBER if any(canonical_proof(m) == key for m in c.members) else NON_MEMBER
        if c.tag == "interp":
            guard = (c.formula, p)
            if guard in self._in_progress:
                return UNKNOWN
            self._in_progress.add(guard)
            try:
                return self.membership(c.formula, {}, p)
            finally:
                self._in_progress.discard(guard)
        raise SortCheckError(f"unknown candidate tag {c.tag}")

    def candidate_oracle(self, c: Candidate) -> Oracle:
        return lambda p: self.candidate(c, p)

    def oracle(self, a: Formula, phi: Optional[Mapping[Var, str]] = None) -> Oracle:
        phi = dict(phi or {})
        return lambda p: self.membership(a, phi, p)

    # ---------- ⟦A⟧_φ ----------

    def membership(self, a: Formula, phi: Mapping[Var, str], p: ProofTerm) -> str:
        key = (a, frozenset(phi.items()), p)
        if key not in self._memo:
            self._memo[key] = self._membership(a, phi, p)
        return self._memo[key]

    def _membership(self, a: Formula, phi: Mapping[Var, str], p: ProofTerm) -> str:
        if isinstance(a, Atom):
            values = tuple(self.model.eval_term(t, phi) for t in a.args)
            return self.candidate(self.model.predicates[a.pred][values], p)
        verdicts = [self.sn(p)]
        if verdicts[0] == NON_MEMBER:
            return NON_MEMBER
        if isinstance(a, (Top, Bot)):
            return verdicts[0]
        reach = self.reach(p)
        if isinstance(a, Implies):
            lams = [q for q in reach if isinstance(q, Lam)]
            for q in lams:
                for arg in self.argument_members(a.left, phi):
                    verdicts.append(self.membership(a.right, phi, subst_proof(q.body, q.var, arg)))
            if lams:
                verdicts.append(UNKNOWN)
        elif isinstance(a, And):
            for q in reach:
                if isinstance(q, Pair):
                    verdicts.append(self.membership(a.left, phi, q.left))
                    verdicts.append(self.membership(a.right, phi, q.right))
        elif isinstance(a, Or):
            for q in reach:
                if isinstance(q, InjL):
                    verdicts.append(self.membership(a.left, phi, q.arg))
                elif isinstance(q, InjR):
                    verdicts.append(self.membership(a.right, phi, q.arg))
        elif isinstance(a, Forall):
            tlams = [q for q in reach if isinstance(q, TLam)]
            for q in tlams:
                for t in self.terms_of_sort(q.var.sort):
                    body = subst_term_in_proof(q.body, q.var, t, self.model.signature)
                    for v in self.model.carriers.get(a.var.sort, []):
                        verdicts.append(self.membership(a.body, {**phi, a.var: v}, body))
            if tlams:
                verdicts.append(UNKNOWN)
        elif isinstance(a, Exists):
            for q in reach:
                if isinstance(q, Witness):
                    options = [self.membership(a.body, {**phi, a.var: v}, q.body)
                               for v in self.model.carriers.get(a.var.sort, [])]
                    if MEMBER in options:
                        continue
                    verdicts.append(UNKNOWN if UNKNOWN in options else NON_MEMBER)
        return _combine(verdicts)


def interp_membership(model: PreModel, a: Formula, phi: Mapping[Var, str], p: ProofTerm,
                      bounds: Optional[Bounds] = None) -> str:
    """π ∈ ⟦A⟧_φ ？返回 member / non-member / unknown"""
    missing = [v.name for v in free_vars(a) if v not in phi]
    if missing:
        raise SortCheckError(f"assignment does not cover {sorted(missing)}", sorted(missing)[0])
    check_assignment(model, phi)
    return Lab(model, bounds).membership(a, dict(phi), p)


# ==================== 候选集公理 ====================

def check_candidate_axioms(candidate: Union[Candidate, Oracle], corpus: Sequence[ProofTerm],
                           bounds: Optional[Bounds] = None, lab: Optional[Lab] = None,
                           name: Optional[str] = None) -> CandidateReport:
    """四条公理：SN、含全部变量、归约封闭、消去项吸收（其全部一步归约项都在候选集内）"""
    lab = lab or Lab(bounds=bounds)
    if isinstance(candidate, Candidate):
        oracle = lab.candidate_oracle(candidate)
        name = name or candidate.describe()
    else:
        oracle = candidate
        name = name or getattr(candidate, "__name__", "oracle")

    sn_ax = AxiomCheck(axiom="strongly normalizing")
    var_ax = AxiomCheck(axiom="contains variables")
    red_ax = AxiomCheck(axiom="closed under reduction")
    neu_ax = AxiomCheck(axiom="neutral elimination")

    for v in VARIABLE_POOL:
        var_ax.tally(oracle(Axiom(v)), print_proof(Axiom(v)))

    for p in corpus:
        verdict = oracle(p)
        if verdict == MEMBER:
            sn_ax.tally(lab.sn(p), print_proof(p))
            for r in reducts(p):
                red_ax.tally(oracle(r), f"{print_proof(p)} ▷ {print_proof(r)}")
        if is_elimination(p) and all(oracle(r) == MEMBER for r in reducts(p)):
            neu_ax.tally(verdict, print_proof(p))

    report = CandidateReport(candidate=name, checks=[sn_ax, var_ax, red_ax, neu_ax])
    dbg(f"[premodel] {name}: {'pass' if report.passed else 'fail'} over {len(corpus)} term(s)")
    return report


# ==================== 同余检验 ====================

def _rule_check(lab: Lab, rule: RewriteRule, corpus: Sequence[ProofTerm]) -> AxiomCheck:
    model = lab.model
    check = AxiomCheck(axiom=print_rule(rule))
    variables = sorted(rule.lhs_vars(), key=lambda v: (v.name, v.sort))
    for phi in model.assignments(variables):
        where = ", ".join(f"{v.name}={phi[v]}" for v in variables)
        if rule.kind == "term":
            left, right = model.eval_term(rule.lhs, phi), model.eval_term(rule.rhs, phi)
            check.checked += 1
            if left != right:
                check.fail(f"[{where}] {print_term(rule.lhs)} = {left}, {print_term(rule.rhs)} = {right}")
            continue
        for p in corpus:
            left, right = lab.membership(rule.lhs, phi, p), lab.membership(rule.rhs, phi, p)
            check.checked += 1
            if UNKNOWN in (left, right):
                check.unknown += 1
            elif left != right:
                check.fail(f"[{where}] {print_proof(p)}: {left} vs {right}")
                if len(check.counterexamples) >= MAX_SHOWN:
                    return check
    return check


def check_premodel_congruence(model: PreModel, rules: Sequence[RewriteRule], corpus: Sequence[ProofTerm],
                              bounds: Optional[Bounds] = None, lab: Optional[Lab] = None) -> CongruenceReport:
    """对每条规则的每个载体赋值与语料项，比较 ⟦lhs⟧ 与 ⟦rhs⟧"""
    lab = lab or Lab(model, bounds)
    return CongruenceReport(rules=[_rule_check(lab, r, corpus) for r in rules])


def check_application_lemma(model: PreModel, a: Formula, b: Formula, phi: Mapping[Var, str],
                            corpus: Sequence[ProofTerm], bounds: Optional[Bounds] = None,
                            lab: Optional[Lab] = None) -> AxiomCheck:
    """π1 ∈ ⟦A→B⟧、π2 ∈ ⟦A⟧ 都确定时，(π1 π2) 不得确定落在 ⟦B⟧ 之外"""
    lab = lab or Lab(model, bounds)
    check = AxiomCheck(axiom=f"application {print_formula(Implies(a, b))}")
    funs = [p for p in corpus if lab.membership(Implies(a, b), phi, p) == MEMBER]
    args = [p for p in corpus if lab.membership(a, phi, p) == MEMBER]
    for f, x in product(funs, args):
        app = App(f, x)
        check.tally(lab.membership(b, phi, app), print_proof(app))
    return check


# ==================== 文件格式 ====================

def _elems(node) -> Tuple[str, ...]:
    return tuple(expect_sym(e) for e in expect_list(node))


def _parse_candidate(node, signature: Signature) -> Candidate:
    if not isinstance(node, SList):
        tag = expect_sym(node)
        if tag not in ("sn", "normal", "empty-plus-vars"):
            raise syntax_error(node, f"unknown candidate tag {tag}")
        return Candidate(tag=tag)
    head = node.head()
    if head == "interp":
        if len(node) != 2:
            raise syntax_error(node, "(interp <formula>) expected")
        formula = infer_sorts([parse_formula(node[1], signature)], signature)[0]
        return Candidate(tag="interp", formula=formula)
    if head == "finite":
        return Candidate(tag="finite", members=tuple(read_proof_term(m, signature) for m in node.items[1:]))
    raise syntax_error(node, f"unknown candidate form ({head} …)")


def parse_premodel(text: str, signature: Signature) -> PreModel:
    """解析 (premodel (carrier …) (fun …) (pred …))，并检查全定义"""
    doc = expect_list(read_sexpr(text), "premodel")
    model = PreModel(signature=signature)
    forms = [expect_list(f, min_len=2) for f in doc.items[1:]]
    for form in forms:
        head = form.head()
        if head == "carrier":
            sort = expect_sym(form[1])
            if sort not in signature.sorts:
                raise SortCheckError(f"{form.line}:{form.col}: undeclared sort {sort}", sort)
            model.carriers[sort] = [expect_sym(e) for e in form.items[2:]]
        elif head == "fun":
            f = expect_sym(form[1])
            if f not in signature.functions:
                raise SortCheckError(f"{form.line}:{form.col}: unknown function symbol {f}", f)
            table = model.functions.setdefault(f, {})
            for entry in form.items[2:]:
                entry = expect_list(entry)
                if len(entry) != 2:
                    raise syntax_error(entry, "((<elems>) <elem>) expected")
                table[_elems(entry[0])] = expect_sym(entry[1])
        elif head == "pred":
            p = expect_sym(form[1])
            if p not in signature.predicates:
                raise SortCheckError(f"{form.line}:{form.col}: unknown predicate symbol {p}", p)
            table = model.predicates.setdefault(p, {})
            for entry in form.items[2:]:
                entry = expect_list(entry)
                if len(entry) != 2:
                    raise syntax_error(entry, "((<elems>) <candidate>) expected")
                table[_elems(entry[0])] = _parse_candidate(entry[1], signature)
        else:
            raise syntax_error(form, f"unknown premodel declaration ({head} …)")
    return model.validate_total()
