"""
相对化解释 - 理论 T 到理论 U 的结构化翻译 A ↦ A* 与证明义务生成

核心原则：
1. 只支持结构化翻译：原子由模板给出，联结词同态，量词加相对化谓词守卫
2. 函数符号按宏翻译：(f(t1,…,tn))* = f*(z1,…,zn){z1 := t1*, …}
3. 义务只生成不证明；每条义务都是 U 中闭的、类型正确的公式
4. 连接词等价条件（定义第 2 项）对结构化翻译自动成立，默认不生成；emit_equivalences=True 时照样生成
"""

from typing import Any, Dict, List, Mapping, Sequence, Set, Tuple

from pydantic import BaseModel, ConfigDict, Field

from kernel_syntax import (dbg, And, Atom, BOT, Bot, CoverageError, Exists, Forall, FormulaTemplate, Formula,
                           Implies, SortCheckError, Signature, Term, TermTemplate, Theory, TOP, Top, Var,
                           UnmappedSymbolError, conj, free_vars, forall_many, iff, ordered_free_vars, term_vars,
                           BINARY, QUANTIFIERS)
from sexpr_format import (SList, expect_list, expect_sym, infer_sorts, parse_formula, parse_term, print_formula,
                          read_sexpr, syntax_error)


# ==================== 规格 ====================

class SortMapping(BaseModel):
    """s ↦ (s_*, s*(x))"""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    target: str = Field(description="U 中的宿主类型 s_*")
    rel: Any = Field(description="相对化谓词 FormulaTemplate，单个参数，类型为 s_*")


class InterpretationSpec(BaseModel):
    """结构化解释的全部数据"""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    sorts: Dict[str, SortMapping] = Field(default_factory=dict)
    variables: Dict[str, str] = Field(default_factory=dict, description="变量换名 x ↦ x*，缺省为同名")
    functions: Dict[str, Any] = Field(default_factory=dict, description="f ↦ TermTemplate")
    predicates: Dict[str, Any] = Field(default_factory=dict, description="p ↦ FormulaTemplate")

    def star_var(self, x: Var) -> Var:
        if x.sort not in self.sorts:
            raise UnmappedSymbolError([x.sort], "sort")
        return Var(self.variables.get(x.name, x.name), self.sorts[x.sort].target)

    def relativize(self, x: Var) -> Formula:
        """s*(x*)"""
        return self.sorts[x.sort].rel.instantiate([self.star_var(x)])

    def guards(self, variables: Sequence[Var]) -> List[Formula]:
        return [self.relativize(x) for x in variables]

    def missing(self, signature: Signature, predicates: bool = True) -> List[str]:
        out = [s for s in signature.sorts if s not in self.sorts]
        out += [f for f in signature.functions if f not in self.functions]
        if predicates:
            out += [p for p in signature.predicates if p not in self.predicates]
        return out

    def check_injective(self, variables: Set[Var]) -> None:
        images: Dict[Var, Var] = {}
        for v in sorted(variables, key=lambda v: (v.name, v.sort)):
            img = self.star_var(v)
            if img in images and images[img] != v:
                other = images[img]
                raise SortCheckError(f"variable renaming is not injective: {other.name}:{other.sort} and "
                                     f"{v.name}:{v.sort} both map to {img.name}", v.name)
            images[img] = v

    def validate_against(self, t_sig: Signature, u_sig: Signature) -> "InterpretationSpec":
        """模板在 U 中类型正确，参数类型与 T 的秩一致"""
        for s, m in self.sorts.items():
            if m.target not in u_sig.sorts:
                raise SortCheckError(f"sort {s} is mapped to undeclared sort {m.target}", s)
            if len(m.rel.params) != 1 or m.rel.params[0].sort != m.target:
                raise SortCheckError(f"relativization predicate of {s} needs one parameter of sort {m.target}", s)
            _check_template(m.rel.params, m.rel.body, u_sig, s)
        for f, tpl in self.functions.items():
            if f not in t_sig.functions:
                raise SortCheckError(f"macro for unknown function symbol {f}", f)
            args, res = t_sig.functions[f]
            self._check_params(f, tpl.params, args)
            if u_sig.sort_of(tpl.body) != self.sorts[res].target:
                raise SortCheckError(f"macro for {f} has sort {u_sig.sort_of(tpl.body)}, "
                                     f"expected {self.sorts[res].target}", f)
            extra = term_vars(tpl.body) - set(tpl.params)
            if extra:
                raise SortCheckError(f"macro for {f} has free variables {sorted(v.name for v in extra)}", f)
        for p, tpl in self.predicates.items():
            if p not in t_sig.predicates:
                raise SortCheckError(f"template for unknown predicate symbol {p}", p)
            self._check_params(p, tpl.params, t_sig.predicates[p])
            _check_template(tpl.params, tpl.body, u_sig, p)
        return self

    def _check_params(self, symbol: str, params: Sequence[Var], arg_sorts: Sequence[str]) -> None:
        if len(params) != len(arg_sorts):
            raise SortCheckError(f"template for {symbol} needs {len(arg_sorts)} parameter(s)", symbol)
        for v, s in zip(params, arg_sorts):
            if s not in self.sorts:
                raise UnmappedSymbolError([s], "sort")
            if v.sort != self.sorts[s].target:
                raise SortCheckError(f"parameter {v.name} of {symbol} has sort {v.sort}, "
                                     f"expected {self.sorts[s].target}", symbol)


def _check_template(params: Sequence[Var], body: Formula, u_sig: Signature, owner: str) -> None:
    u_sig.check_formula(body)
    extra = free_vars(body) - set(params)
    if extra:
        raise SortCheckError(f"template for {owner} has free variables {sorted(v.name for v in extra)}", owner)


class Obligation(BaseModel):
    """U 中待证的闭公式"""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    tag: str = Field(description="non-empty / function / axiom / equivalence / predicate / congruence …")
    formula: Any
    provenance: str = Field(default="", description="来自 T 的哪个对象")

    def render(self) -> str:
        prov = f" ({self.provenance})" if self.provenance else ""
        return f"{print_formula(self.formula)} ; tag: {self.tag}{prov}"


def guarded(guards: Sequence[Formula], body: Formula) -> Formula:
    """守卫为空时不加蕴涵"""
    if not guards:
        return body
    return Implies(conj(list(guards)), body)


# ==================== 翻译 ====================

def translate_term(spec: InterpretationSpec, t: Term) -> Term:
    if isinstance(t, Var):
        return spec.star_var(t)
    if t.symbol not in spec.functions:
        raise UnmappedSymbolError([t.symbol], "function symbol")
    return spec.functions[t.symbol].instantiate([translate_term(spec, a) for a in t.args])


def _translate(spec: InterpretationSpec, a: Formula) -> Formula:
    if isinstance(a, Atom):
        if a.pred not in spec.predicates:
            raise UnmappedSymbolError([a.pred], "predicate symbol")
        return spec.predicates[a.pred].instantiate([translate_term(spec, t) for t in a.args])
    if isinstance(a, (Top, Bot)):
        return a
    if isinstance(a, BINARY):
        return type(a)(_translate(spec, a.left), _translate(spec, a.right))
    xs = spec.star_var(a.var)
    guard = spec.relativize(a.var)
    body = _translate(spec, a.body)
    if isinstance(a, Forall):
        return Forall(xs, Implies(guard, body))
    return Exists(xs, And(guard, body))


def all_vars(a: Formula) -> Set[Var]:
    if isinstance(a, Atom):
        return {v for t in a.args for v in term_vars(t)}
    if isinstance(a, BINARY):
        return all_vars(a.left) | all_vars(a.right)
    if isinstance(a, QUANTIFIERS):
        return all_vars(a.body) | {a.var}
    return set()


def translate_formula(spec: InterpretationSpec, a: Formula) -> Formula:
    """A*：原子用模板，联结词同态，∀x A ↦ ∀x*(s*(x*) → A*)，∃x A ↦ ∃x*(s*(x*) ∧ A*)"""
    spec.check_injective(all_vars(a))
    return _translate(spec, a)


# ==================== 义务与陈述 ====================

def _closed(spec: InterpretationSpec, free: Sequence[Var], body: Formula) -> Formula:
    stars = [spec.star_var(x) for x in free]
    return forall_many(stars, guarded(spec.guards(free), body))


def non_empty_obligation(spec: InterpretationSpec, s: str) -> Obligation:
    rel = spec.sorts[s].rel
    return Obligation(tag="non-empty", formula=Exists(rel.params[0], rel.body), provenance=f"sort {s}")


def function_obligation(spec: InterpretationSpec, f: str, t_sig: Signature) -> Obligation:
    """∀z̄ (s1*(z1) ∧ … → s*(f*(z̄)))"""
    args, res = t_sig.functions[f]
    tpl = spec.functions[f]
    guards = [spec.sorts[s].rel.instantiate([z]) for s, z in zip(args, tpl.params)]
    concl = spec.sorts[res].rel.instantiate([tpl.body])
    return Obligation(tag="function", formula=forall_many(list(tpl.params), guarded(guards, concl)),
                      provenance=f"function {f}")


def _subformulas(a: Formula) -> List[Formula]:
    out = [a]
    if isinstance(a, BINARY):
        out += _subformulas(a.left) + _subformulas(a.right)
    elif isinstance(a, QUANTIFIERS):
        out += _subformulas(a.body)
    return out


def equivalence_obligations(spec: InterpretationSpec, axioms: Sequence[Formula]) -> List[Obligation]:
    """定义第 2 项：⊥* ↔ ⊥、⊤* ↔ ⊤，以及公理中出现的每个复合子公式的守卫等价"""
    out = [Obligation(tag="equivalence", formula=iff(_translate(spec, BOT), BOT), provenance="bot"),
           Obligation(tag="equivalence", formula=iff(_translate(spec, TOP), TOP), provenance="top")]
    seen: List[Formula] = []
    for ax in axioms:
        for c in _subformulas(ax):
            if not isinstance(c, BINARY + QUANTIFIERS) or c in seen:
                continue
            seen.append(c)
            if isinstance(c, BINARY):
                rhs = type(c)(_translate(spec, c.left), _translate(spec, c.right))
            elif isinstance(c, Forall):
                rhs = Forall(spec.star_var(c.var), Implies(spec.relativize(c.var), _translate(spec, c.body)))
            else:
                rhs = Exists(spec.star_var(c.var), And(spec.relativize(c.var), _translate(spec, c.body)))
            body = iff(_translate(spec, c), rhs)
            out.append(Obligation(tag="equivalence", formula=_closed(spec, ordered_free_vars(c), body),
                                  provenance=print_formula(c)))
    return out


def check_obligations(obs: Sequence[Obligation], u_sig: Signature) -> List[Obligation]:
    for ob in obs:
        u_sig.check_formula(ob.formula)
        if free_vars(ob.formula):
            names = sorted(v.name for v in free_vars(ob.formula))
            raise SortCheckError(f"obligation {ob.tag} is not closed, free: {names}", names[0])
    return list(obs)


def emit_interpretation_obligations(spec: InterpretationSpec, t: Theory, u: Theory,
                                    emit_equivalences: bool = False) -> List[Obligation]:
    """每个类型一条非空义务、每个函数符号一条封闭性义务、每条公理一条 A*"""
    missing = spec.missing(t.signature)
    if missing:
        raise CoverageError(missing, "symbol(s) not covered by the interpretation")
    spec.validate_against(t.signature, u.signature)
    out: List[Obligation] = [non_empty_obligation(spec, s) for s in t.signature.sorts]
    out += [function_obligation(spec, f, t.signature) for f in t.signature.functions]
    for ax in t.axioms:
        out.append(Obligation(tag="axiom", formula=_closed(spec, ordered_free_vars(ax), translate_formula(spec, ax)),
                              provenance=print_formula(ax)))
    if emit_equivalences:
        out += equivalence_obligations(spec, t.axioms)
    dbg(f"[relativizer] {len(out)} obligation(s)")
    return check_obligations(out, u.signature)


def theorem_statement(spec: InterpretationSpec, a: Formula) -> Formula:
    """∀x̄* (s1*(x1*) ∧ … ∧ sn*(xn*) → A*)"""
    return _closed(spec, ordered_free_vars(a), translate_formula(spec, a))


def term_typing_statement(spec: InterpretationSpec, t: Term, t_sig: Signature) -> Formula:
    """∀x̄* (s1*(x1*) ∧ … → s*(t*))"""
    free = ordered_free_vars(Atom("_", (t,)))
    concl = spec.sorts[t_sig.sort_of(t)].rel.instantiate([translate_term(spec, t)])
    return _closed(spec, free, concl)


# ==================== 规格文件 ====================

def _params(node, sorts: Sequence[str], spec_sorts: Mapping[str, SortMapping], owner: str) -> Tuple[Var, ...]:
    names = [expect_sym(x) for x in expect_list(node)]
    if len(names) != len(sorts):
        raise syntax_error(node, f"{owner} takes {len(sorts)} parameter(s), found {len(names)}")
    out = []
    for n, s in zip(names, sorts):
        if s not in spec_sorts:
            raise UnmappedSymbolError([s], "sort")
        out.append(Var(n, spec_sorts[s].target))
    return tuple(out)


def _template_formula(node, params: Sequence[Var], u_sig: Signature) -> Formula:
    body = parse_formula(node, u_sig, {v.name: v for v in params})
    body = infer_sorts([body], u_sig)[0]
    u_sig.check_formula(body)
    return body


def parse_interp_document(text: str, t_sig: Signature, u_sig: Signature) -> Tuple[InterpretationSpec, List[SList]]:
    """解析 (interp …)；返回规格与未识别的表单（realpred 等由调用方处理）"""
    doc = expect_list(read_sexpr(text), "interp")
    forms = [expect_list(f, min_len=1) for f in doc.items[1:]]
    spec = InterpretationSpec()
    rest: List[SList] = []
    for form in forms:
        if form.head() != "sort":
            continue
        if len(form) != 4:
            raise syntax_error(form, "(sort <s> <s_*> (rel (<x>) <formula>)) expected")
        s, target = expect_sym(form[1]), expect_sym(form[2])
        rel = expect_list(form[3], "rel")
        if len(rel) != 3:
            raise syntax_error(rel, "(rel (<x>) <formula>) expected")
        x = Var(expect_sym(expect_list(rel[1], min_len=1)[0]), target)
        spec.sorts[s] = SortMapping(target=target, rel=FormulaTemplate((x,), _template_formula(rel[2], [x], u_sig)))
    for form in forms:
        head = form.head()
        if head == "sort":
            continue
        if head == "var":
            if len(form) != 3:
                raise syntax_error(form, "(var <x> <x*>) expected")
            spec.variables[expect_sym(form[1])] = expect_sym(form[2])
        elif head == "fun":
            if len(form) != 4:
                raise syntax_error(form, "(fun <f> ((<z1> …)) <term>) expected")
            f = expect_sym(form[1])
            if f not in t_sig.functions:
                raise UnmappedSymbolError([f], "function symbol")
            outer = expect_list(form[2])
            params = _params(outer[0] if len(outer) == 1 and isinstance(outer[0], SList) else outer,
                             t_sig.functions[f][0], spec.sorts, f)
            body = parse_term(form[3], u_sig, {v.name: v for v in params})
            spec.functions[f] = TermTemplate(params, body)
        elif head == "pred":
            if len(form) != 4:
                raise syntax_error(form, "(pred <p> ((<z1> …)) <formula>) expected")
            p = expect_sym(form[1])
            if p not in t_sig.predicates:
                raise UnmappedSymbolError([p], "predicate symbol")
            outer = expect_list(form[2])
            params = _params(outer[0] if len(outer) == 1 and isinstance(outer[0], SList) else outer,
                             t_sig.predicates[p], spec.sorts, p)
            spec.predicates[p] = FormulaTemplate(params, _template_formula(form[3], params, u_sig))
        else:
            rest.append(form)
    return spec, rest


def parse_interp(text: str, t_sig: Signature, u_sig: Signature) -> InterpretationSpec:
    spec, rest = parse_interp_document(text, t_sig, u_sig)
    if rest:
        raise syntax_error(rest[0], f"unknown interpretation declaration ({rest[0].head()} …)")
    return spec.validate_against(t_sig, u_sig)
