"""
可实现性翻译 - 公式 π ⊩ A、候选条件 CR_π、相继式实现子、义务与命题陈述

核心原则：
1. π ⊩ A 按联结词逐条递归构造，每条子句的形状与定义逐字对应（∀ 子句带 Term(t, ⌜s⌝) 守卫，∃ 子句不带）
2. 子句内新引入的约束变量取自保留命名空间 _al/_pr/_ph/_v/_t/_p/_q，按递归深度编号；用户变量不得以 _ 开头
3. U 取 S 时，⌜SN⌝/⌜Red*⌝ 是缩写谓词，其余关系 R 写成 R(x̄) = 1，⌜PSubst⌝/⌜TSubst⌝ 是函数符号
4. 只生成公式，不在 U 中证明；桌面规模的检验交给 tree_model.eval_formula
"""

from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field

from kernel_syntax import (dbg, And, Atom, Bot, CoverageError, Exists, Forall, Formula, FunApp, Implies,
                           Or, RewriteRule, Sequent, Signature, SortCheckError, StatementKindError, Term, Theory, Top,
                           UnmappedSymbolError, Var, forall_many, fresh_name, free_vars, iff,
                           ordered_free_vars, subst_formula, term_vars)
from proof_terms import ProofTerm
from relativizer import (InterpretationSpec, Obligation, all_vars, check_obligations, function_obligation, guarded,
                         non_empty_obligation, parse_interp_document, translate_term)
from s_theory import rel, tvar
from sexpr_format import SList, expect_list, expect_sym, infer_sorts, parse_formula, print_formula, print_sequent, \
    syntax_error
from tree_codec import Codebook, EMPTY_CODEBOOK, TREE_SORT, encode_proof, encode_proof_var, tree_to_term


DEFAULT_PI = "pi"
RESERVED_PREFIX = "_"


# ==================== 规格 ====================

class RealPred(BaseModel):
    """π ⊩ p(z1,…,zn) 的模板"""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    params: Tuple[Any, ...]
    pi: Any = Field(description="实现子变量 Var，类型为 ⌜ℒ⌝")
    body: Any

    def instantiate(self, pi: Term, args: Sequence[Term]) -> Formula:
        if len(args) != len(self.params):
            raise SortCheckError(f"realizability template expects {len(self.params)} arguments, got {len(args)}")
        sigma = dict(zip(self.params, args))
        sigma[self.pi] = pi
        return subst_formula(self.body, sigma)


class RealizabilitySpec(InterpretationSpec):
    """类型映射、变量换名、函数宏同结构化解释；谓词给出可实现性模板"""

    realpreds: Dict[str, RealPred] = Field(default_factory=dict)
    codebook: Any = Field(default=EMPTY_CODEBOOK, description="T 的编号表，∀ 子句里的 ⌜s⌝ 由它给出")
    realizer_sort: str = TREE_SORT

    def missing_realizability(self, signature: Signature) -> List[str]:
        out = self.missing(signature, predicates=False)
        return out + [p for p in signature.predicates if p not in self.realpreds]

    def validate_realizability(self, t_sig: Signature, u_sig: Signature) -> "RealizabilitySpec":
        self.validate_against(t_sig, u_sig)
        for p, rp in self.realpreds.items():
            if p not in t_sig.predicates:
                raise SortCheckError(f"realizability template for unknown predicate symbol {p}", p)
            if rp.pi.sort != self.realizer_sort:
                raise SortCheckError(f"realizer variable of {p} must have sort {self.realizer_sort}", p)
            self._check_params(p, rp.params, t_sig.predicates[p])
            u_sig.check_formula(rp.body)
            extra = free_vars(rp.body) - set(rp.params) - {rp.pi}
            if extra:
                raise SortCheckError(f"template for {p} has free variables {sorted(v.name for v in extra)}", p)
        return self


class RealStatement(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    kind: str = Field(description="typing / normalization / sequent-normalization / existence")
    formula: Any
    provenance: str = ""

    def render(self) -> str:
        return f"{print_formula(self.formula)} ; {self.kind}"


# ==================== ⌜·⌝ 的辅助构造 ====================

def _code(ctor: str, *args: Term) -> FunApp:
    return FunApp(ctor, tuple(args))


def sn(t: Term) -> Atom:
    return Atom("SN", (t,))


def red_star(a: Term, b: Term) -> Atom:
    return Atom("Red*", (a, b))


def _reserved(stem: str, depth: int) -> Var:
    return tvar(f"{RESERVED_PREFIX}{stem}{depth}")


def _check_names(spec: RealizabilitySpec, a: Formula, pi: Term) -> None:
    variables = all_vars(a)
    spec.check_injective(variables)
    stars = {spec.star_var(v) for v in variables}
    for v in stars:
        if v.name.startswith(RESERVED_PREFIX):
            raise SortCheckError(f"variable name {v.name} is reserved for realizability binders", v.name)
    for v in term_vars(pi):
        if v in stars:
            raise SortCheckError(f"realizer variable {v.name} clashes with a translated variable", v.name)


# ==================== π ⊩ A ====================

def _realize(spec: RealizabilitySpec, a: Formula, pi: Term, d: int) -> Formula:
    if isinstance(a, Atom):
        if a.pred not in spec.realpreds:
            raise UnmappedSymbolError([a.pred], "predicate symbol")
        return spec.realpreds[a.pred].instantiate(pi, [translate_term(spec, t) for t in a.args])
    if isinstance(a, (Top, Bot)):
        return sn(pi)
    if isinstance(a, Implies):
        al, pr, ph = _reserved("al", d), _reserved("pr", d), _reserved("ph", d)
        inner = Forall(ph, Implies(_realize(spec, a.left, ph, d + 1),
                                   _realize(spec, a.right, _code("PSubst", pr, al, ph), d + 1)))
        return And(sn(pi), forall_many([al, pr], Implies(red_star(pi, _code("ImpI", al, pr)), inner)))
    if isinstance(a, And):
        p1, p2 = _reserved("p", d), _reserved("q", d)
        body = Implies(red_star(pi, _code("AndI", p1, p2)),
                       And(_realize(spec, a.left, p1, d + 1), _realize(spec, a.right, p2, d + 1)))
        return And(sn(pi), forall_many([p1, p2], body))
    if isinstance(a, Or):
        p1, p2 = _reserved("p", d), _reserved("q", d)
        left = Forall(p1, Implies(red_star(pi, _code("OrI1", p1)), _realize(spec, a.left, p1, d + 1)))
        right = Forall(p2, Implies(red_star(pi, _code("OrI2", p2)), _realize(spec, a.right, p2, d + 1)))
        return And(sn(pi), And(left, right))
    xs = spec.star_var(a.var)
    if isinstance(a, Forall):
        v, pr, t = _reserved("v", d), _reserved("pr", d), _reserved("t", d)
        sort_code = tree_to_term(spec.codebook.sort_code(a.var.sort))
        guard = And(spec.relativize(a.var), rel("Term", t, sort_code))
        inner = forall_many([xs, t], Implies(guard, _realize(spec, a.body, _code("TSubst", pr, v, t), d + 1)))
        return And(sn(pi), forall_many([v, pr], Implies(red_star(pi, _code("ForallI", v, pr)), inner)))
    pr, t = _reserved("pr", d), _reserved("t", d)
    inner = Exists(xs, And(spec.relativize(a.var), _realize(spec, a.body, pr, d + 1)))
    return And(sn(pi), forall_many([pr, t], Implies(red_star(pi, _code("ExistsI", t, pr)), inner)))


def realize(spec: RealizabilitySpec, a: Formula, pi: Optional[Term] = None) -> Formula:
    """π ⊩ A；π 缺省为变量 pi"""
    pi = pi if pi is not None else tvar(DEFAULT_PI)
    _check_names(spec, a, pi)
    return _realize(spec, a, pi, 1)


def sequent_realizer_term(seq: Sequent, pi: Term) -> Term:
    """⌜ImpI⌝(⌜α1⌝, … ⌜ImpI⌝(⌜αk⌝, π)…)"""
    out = pi
    for name, _ in reversed(seq.hypotheses):
        out = _code("ImpI", tree_to_term(encode_proof_var(name)), out)
    return out


def realize_sequent(spec: RealizabilitySpec, seq: Sequent, pi: Optional[Term] = None) -> Formula:
    seq.validate()
    pi = pi if pi is not None else tvar(DEFAULT_PI)
    return realize(spec, seq.as_formula(), sequent_realizer_term(seq, pi))


# ==================== CR_π ====================

def cr_formula(body: Formula, pi: Var) -> Formula:
    """CR_π(A(π)) 的四个合取项"""
    avoid = {v.name for v in free_vars(body)} | {pi.name}
    p = tvar(fresh_name("_cp", avoid))
    q = tvar(fresh_name("_cq", avoid | {p.name}))
    al = tvar(fresh_name("_ca", avoid | {p.name, q.name}))

    def at(t: Term) -> Formula:
        return subst_formula(body, {pi: t})

    sound = Forall(p, Implies(at(p), And(rel("Proof", p), sn(p))))
    variables = Forall(al, Implies(rel("ProofVar", al), at(_code("Axiom", al))))
    closed = forall_many([p, q], Implies(And(at(p), rel("Red", p, q)), at(q)))
    neutral = Forall(p, Implies(And(rel("Elim", p), Forall(q, Implies(rel("Red", p, q), at(q)))), at(p)))
    return And(sound, And(variables, And(closed, neutral)))


# ==================== 义务 ====================

def predicate_obligation(spec: RealizabilitySpec, p: str, t_sig: Signature) -> Obligation:
    """∀z̄ (s1*(z1) ∧ … → CR_π(π ⊩ p(z̄)))"""
    rp = spec.realpreds[p]
    guards = [spec.sorts[s].rel.instantiate([z]) for s, z in zip(t_sig.predicates[p], rp.params)]
    return Obligation(tag="predicate", formula=forall_many(list(rp.params), guarded(guards, cr_formula(rp.body, rp.pi))),
                      provenance=f"predicate {p}")


def congruent_pairs(rule: RewriteRule, t_sig: Signature) -> List[Tuple[Formula, Formula]]:
    """命题规则给出 lhs ≡ rhs；项规则对每个谓词的每个同类型参数位置给出 p(…l…) ≡ p(…r…)"""
    if rule.kind == "prop":
        return [(rule.lhs, rule.rhs)]
    sort = t_sig.sort_of(rule.lhs)
    taken = {v.name for v in term_vars(rule.lhs)}
    out = []
    for p, arg_sorts in t_sig.predicates.items():
        for i, s in enumerate(arg_sorts):
            if s != sort:
                continue
            names: List[Term] = []
            local = set(taken)
            for j, sj in enumerate(arg_sorts):
                name = fresh_name(f"z{j + 1}", local)
                local.add(name)
                names.append(Var(name, sj))
            lhs_args, rhs_args = list(names), list(names)
            lhs_args[i], rhs_args[i] = rule.lhs, rule.rhs
            out.append((Atom(p, tuple(lhs_args)), Atom(p, tuple(rhs_args))))
    return out


def congruence_obligation(spec: RealizabilitySpec, a: Formula, b: Formula, provenance: str) -> Obligation:
    """∀x̄* (guards → ∀π (π ⊩ A ↔ π ⊩ A′))"""
    free = ordered_free_vars(And(a, b))
    stars = {spec.star_var(x).name for x in free}
    pi = tvar(fresh_name(DEFAULT_PI, stars))
    body = Forall(pi, iff(realize(spec, a, pi), realize(spec, b, pi)))
    formula = forall_many([spec.star_var(x) for x in free], guarded(spec.guards(free), body))
    return Obligation(tag="congruence", formula=formula, provenance=provenance)


def emit_realizability_obligations(spec: RealizabilitySpec, t: Theory, u: Theory) -> List[Obligation]:
    missing = spec.missing_realizability(t.signature)
    if missing:
        raise CoverageError(missing, "symbol(s) not covered by the realizability translation")
    spec.validate_realizability(t.signature, u.signature)
    out: List[Obligation] = [non_empty_obligation(spec, s) for s in t.signature.sorts]
    out += [function_obligation(spec, f, t.signature) for f in t.signature.functions]
    out += [predicate_obligation(spec, p, t.signature) for p in t.signature.predicates]
    for r in t.rules:
        for a, b in congruent_pairs(r, t.signature):
            out.append(congruence_obligation(spec, a, b, f"{print_formula(a)} ≡ {print_formula(b)}"))
    dbg(f"[realizer] {len(out)} obligation(s)")
    return check_obligations(out, u.signature)


# ==================== 命题陈述 ====================

KINDS = ("typing", "normalization", "sequent-normalization", "existence")
KIND_ALIASES = {"normalization-of-realizers": "normalization", "sequent-realizer": "sequent-normalization"}

Subject = Union[Term, Formula, Sequent, Tuple[Sequent, ProofTerm]]


def _guarded_closure(spec: RealizabilitySpec, free: Sequence[Var], body: Formula) -> Formula:
    return forall_many([spec.star_var(x) for x in free], guarded(spec.guards(free), body))


def _fresh_pi(spec: RealizabilitySpec, free: Sequence[Var]) -> Var:
    return tvar(fresh_name(DEFAULT_PI, {spec.star_var(x).name for x in free}))


def statement(kind: str, spec: RealizabilitySpec, subject: Subject,
              t_sig: Optional[Signature] = None) -> RealStatement:
    """按种类生成全称闭包后的命题：
    typing（项或公式）、normalization（公式）、sequent-normalization（相继式）、existence（相继式与证明项）"""
    kind = KIND_ALIASES.get(kind, kind)
    if kind not in KINDS:
        raise StatementKindError(f"unknown statement kind {kind}; expected one of {', '.join(KINDS)}")
    if kind == "typing":
        if isinstance(subject, (Var, FunApp)):
            if t_sig is None:
                raise StatementKindError("typing a term needs the signature of T")
            free = ordered_free_vars(Atom("_", (subject,)))
            concl = spec.sorts[t_sig.sort_of(subject)].rel.instantiate([translate_term(spec, subject)])
            return RealStatement(kind=kind, formula=_guarded_closure(spec, free, concl), provenance=str(subject))
        if not _is_formula(subject):
            raise StatementKindError("typing expects a term or a formula")
        free = ordered_free_vars(subject)
        pi = _fresh_pi(spec, free)
        body = cr_formula(realize(spec, subject, pi), pi)
        return RealStatement(kind=kind, formula=_guarded_closure(spec, free, body),
                             provenance=print_formula(subject))
    if kind == "normalization":
        if not _is_formula(subject):
            raise StatementKindError("normalization expects a formula")
        free = ordered_free_vars(subject)
        pi = _fresh_pi(spec, free)
        body = Forall(pi, Implies(realize(spec, subject, pi), sn(pi)))
        return RealStatement(kind=kind, formula=_guarded_closure(spec, free, body),
                             provenance=print_formula(subject))
    if kind == "sequent-normalization":
        if not isinstance(subject, Sequent):
            raise StatementKindError("sequent-normalization expects a sequent")
        free = subject.ordered_free_vars()
        pi = _fresh_pi(spec, free)
        body = Forall(pi, Implies(realize_sequent(spec, subject, pi), sn(pi)))
        return RealStatement(kind=kind, formula=_guarded_closure(spec, free, body),
                             provenance=print_sequent(subject))
    if not (isinstance(subject, tuple) and len(subject) == 2 and isinstance(subject[0], Sequent)):
        raise StatementKindError("existence expects a (sequent, proof-term) pair")
    seq, proof = subject
    code = tree_to_term(encode_proof(proof, spec.codebook))
    free = seq.ordered_free_vars()
    return RealStatement(kind=kind, formula=_guarded_closure(spec, free, realize_sequent(spec, seq, code)),
                         provenance=print_sequent(seq))


def _is_formula(x: Any) -> bool:
    return isinstance(x, (Atom, Top, Bot, And, Or, Implies, Forall, Exists))


# ==================== 规格文件 ====================

def _parse_realpred(form: SList, spec: RealizabilitySpec, t_sig: Signature, u_sig: Signature) -> Tuple[str, RealPred]:
    if len(form) != 5:
        raise syntax_error(form, "(realpred <p> ((<z1> …)) (<pi>) <formula>) expected")
    p = expect_sym(form[1])
    if p not in t_sig.predicates:
        raise UnmappedSymbolError([p], "predicate symbol")
    outer = expect_list(form[2])
    inner = outer[0] if len(outer) == 1 and isinstance(outer[0], SList) else outer
    names = [expect_sym(x) for x in expect_list(inner)]
    arg_sorts = t_sig.predicates[p]
    if len(names) != len(arg_sorts):
        raise syntax_error(form[2], f"{p} takes {len(arg_sorts)} parameter(s), found {len(names)}")
    params = []
    for n, s in zip(names, arg_sorts):
        if s not in spec.sorts:
            raise UnmappedSymbolError([s], "sort")
        params.append(Var(n, spec.sorts[s].target))
    pi_form = expect_list(form[3])
    if len(pi_form) != 1:
        raise syntax_error(pi_form, "(<pi>) expected")
    pi = Var(expect_sym(pi_form[0]), spec.realizer_sort)
    scope = {v.name: v for v in params}
    scope[pi.name] = pi
    body = infer_sorts([parse_formula(form[4], u_sig, scope)], u_sig)[0]
    u_sig.check_formula(body)
    return p, RealPred(params=tuple(params), pi=pi, body=body)


def parse_realizability(text: str, t_sig: Signature, u_sig: Signature) -> RealizabilitySpec:
    """解析带 realpred 的 (interp …) 文档"""
    base, rest = parse_interp_document(text, t_sig, u_sig)
    spec = RealizabilitySpec(sorts=base.sorts, variables=base.variables, functions=base.functions,
                             predicates=base.predicates, codebook=Codebook.from_signature(t_sig))
    for form in rest:
        if form.head() != "realpred":
            raise syntax_error(form, f"unknown realizability declaration ({form.head()} …)")
        p, rp = _parse_realpred(form, spec, t_sig, u_sig)
        spec.realpreds[p] = rp
    return spec.validate_realizability(t_sig, u_sig)
