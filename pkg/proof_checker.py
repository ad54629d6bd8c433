"""
模同余自然演绎证明检查器

核心原则：
1. 同余由用户的改写规则生成：两公式同余 ⇔ 最内改写的正规形 alpha 相等（有 fuel 上限）
2. 每一处规则匹配都先取正规形再比较，量词下面也改写
3. 双向检查：消去式（变量头）推断公式，引入式对照目标检查；
   主体是引入式的消去（切）按目标拆开检查，被丢弃或作参数的一侧只需有某个推导
4. 本征变量条件按语法检查
"""

import os
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Set, Tuple

from pydantic import BaseModel, ConfigDict, Field

from kernel_syntax import (dbg, And, Atom, BINARY, BOT, Bot, EigenvariableError, Exists, Forall, FunApp, Formula,
                           FuelExhaustedError, Implies, KernelError, Or, ProofCheckError, RewriteRule,
                           RuleMismatchError, ScopeError, Sequent, SortCheckError, TOP, Term, Theory, Top,
                           Var, alpha_eq, free_vars, fresh_name, subst_formula, subst_in_formula, subst_term,
                           term_vars, var_names)
from proof_terms import (App, Axiom, BotE, Case, ExElim, Fst, InjL, InjR, Lam, Pair, ProofTerm, Snd, TApp, TLam,
                         TopI, Witness, free_proof_vars, subst_term_in_proof)
from sexpr_format import print_formula, print_proof, print_term


DEFAULT_FUEL = int(os.getenv("KERNEL_FUEL", "10000"))


# ==================== 改写与同余 ====================

class _Fuel:
    def __init__(self, fuel: int):
        self.total = fuel
        self.left = fuel

    def spend(self) -> None:
        if self.left <= 0:
            raise FuelExhaustedError(self.total)
        self.left -= 1


def match_term(pattern: Term, term: Term, sigma: Optional[Dict[Var, Term]] = None) -> Optional[Dict[Var, Term]]:
    """一阶匹配；非线性模式要求各处取值相同"""
    sigma = dict(sigma or {})
    if isinstance(pattern, Var):
        if pattern in sigma:
            return sigma if sigma[pattern] == term else None
        sigma[pattern] = term
        return sigma
    if not isinstance(term, FunApp) or term.symbol != pattern.symbol or len(term.args) != len(pattern.args):
        return None
    for p, t in zip(pattern.args, term.args):
        sigma = match_term(p, t, sigma)
        if sigma is None:
            return None
    return sigma


def _normalize_term(t: Term, rules: Sequence[RewriteRule], fuel: _Fuel) -> Term:
    if isinstance(t, Var):
        return t
    t = FunApp(t.symbol, tuple(_normalize_term(a, rules, fuel) for a in t.args))
    for r in rules:
        if r.kind != "term":
            continue
        sigma = match_term(r.lhs, t)
        if sigma is not None:
            fuel.spend()
            dbg(f"[rewrite] {print_term(t)} -> {print_term(r.rhs)}")
            return _normalize_term(subst_term(r.rhs, sigma), rules, fuel)
    return t


def _normalize_formula(a: Formula, rules: Sequence[RewriteRule], fuel: _Fuel) -> Formula:
    if isinstance(a, Atom):
        a = Atom(a.pred, tuple(_normalize_term(t, rules, fuel) for t in a.args))
        for r in rules:
            if r.kind != "prop" or r.lhs.pred != a.pred or len(r.lhs.args) != len(a.args):
                continue
            sigma: Optional[Dict[Var, Term]] = {}
            for p, t in zip(r.lhs.args, a.args):
                sigma = match_term(p, t, sigma)
                if sigma is None:
                    break
            if sigma is not None:
                fuel.spend()
                return _normalize_formula(subst_formula(r.rhs, sigma), rules, fuel)
        return a
    if isinstance(a, (Top, Bot)):
        return a
    if isinstance(a, (And, Or, Implies)):
        return type(a)(_normalize_formula(a.left, rules, fuel), _normalize_formula(a.right, rules, fuel))
    return type(a)(a.var, _normalize_formula(a.body, rules, fuel))


def normal_form(a: Formula, rules: Sequence[RewriteRule], fuel: int = DEFAULT_FUEL) -> Formula:
    return _normalize_formula(a, rules, _Fuel(fuel))


def congruent(a: Formula, b: Formula, rules: Sequence[RewriteRule], fuel: int = DEFAULT_FUEL) -> bool:
    """A ≡ B：两边正规形 alpha 相等；fuel 耗尽抛 FuelExhaustedError"""
    counter = _Fuel(fuel)
    return alpha_eq(_normalize_formula(a, rules, counter), _normalize_formula(b, rules, counter))


# ==================== 推导树 ====================

@dataclass
class Derivation:
    """推导树结点"""
    rule: str
    conclusion: Formula
    term: ProofTerm
    premises: List["Derivation"] = field(default_factory=list)

    def render(self, indent: int = 0) -> List[str]:
        lines = [f"{'  ' * indent}[{self.rule}] {print_formula(self.conclusion)}"]
        for p in self.premises:
            lines.extend(p.render(indent + 1))
        return lines

    def size(self) -> int:
        return 1 + sum(p.size() for p in self.premises)


class CheckResult(BaseModel):
    """证明检查结果"""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    accepted: bool
    errors: List[str] = Field(default_factory=list)
    derivation: Any = Field(default=None, description="接受时的 Derivation")
    error_kind: Optional[str] = Field(default=None, description="拒绝时的异常类名")


class _NotInferable(Exception):
    pass


Context = Tuple[Tuple[str, Formula], ...]


def abstract_term(a: Formula, t: Term, x: Var) -> Formula:
    """把 a 中项 t 的出现换成变量 x；会捕获 t 或 x 的量词下面不动"""
    def on_term(s: Term) -> Term:
        if s == t:
            return x
        if isinstance(s, FunApp):
            return FunApp(s.symbol, tuple(on_term(u) for u in s.args))
        return s

    blocked = set(term_vars(t)) | {x}

    def walk(b: Formula) -> Formula:
        if isinstance(b, Atom):
            return Atom(b.pred, tuple(on_term(s) for s in b.args))
        if isinstance(b, (Top, Bot)):
            return b
        if isinstance(b, BINARY):
            return type(b)(walk(b.left), walk(b.right))
        if b.var in blocked:
            return b
        return type(b)(b.var, walk(b.body))

    return walk(a)


class ProofChecker:
    """对一个理论检查证明项"""

    def __init__(self, theory: Theory, fuel: int = DEFAULT_FUEL):
        self.theory = theory
        self.signature = theory.signature
        self.rules = theory.rules
        self.fuel = fuel

    # ---------- 同余工具 ----------

    def nf(self, a: Formula) -> Formula:
        return normal_form(a, self.rules, self.fuel)

    def same(self, a: Formula, b: Formula) -> bool:
        return congruent(a, b, self.rules, self.fuel)

    def _mismatch(self, p: ProofTerm, expected: str, actual: Formula, rule: str) -> RuleMismatchError:
        return RuleMismatchError(print_proof(p), expected, print_formula(actual), rule)

    def _scope_term(self, t: Term, tctx: Set[Var], p: ProofTerm) -> None:
        unbound = [v for v in term_vars(t) if v not in tctx]
        if unbound:
            names = ", ".join(sorted(v.name for v in unbound))
            raise ScopeError(f"unbound term variable(s) {names} in {print_proof(p)}", print_proof(p))
        self.signature.sort_of(t)

    def _sort_agrees(self, t: Term, sort: str, p: ProofTerm, what: str, rule: str) -> None:
        actual = self.signature.sort_of(t)
        if actual != sort:
            raise RuleMismatchError(print_proof(p), f"{what} of sort {sort}",
                                    f"{print_term(t)} of sort {actual}", rule)

    def _eigen(self, x: Var, ctx: Context, others: Sequence[Formula], p: ProofTerm, rule: str) -> None:
        for name, h in ctx:
            if x in free_vars(h):
                raise EigenvariableError(f"{rule}: eigenvariable {x.name} occurs free in open hypothesis {name}",
                                         print_proof(p))
        for f in others:
            if x in free_vars(f):
                raise EigenvariableError(f"{rule}: eigenvariable {x.name} occurs free in {print_formula(f)}",
                                         print_proof(p))

    def _fresh_var(self, sort: str, ctx: Context, tctx: Set[Var], formulas: Sequence[Formula]) -> Var:
        avoid = {v.name for v in tctx}
        for f in list(formulas) + [h for _, h in ctx]:
            avoid |= var_names(f)
        return Var(fresh_name("v", avoid), sort)

    # ---------- 推断 ----------

    def infer(self, p: ProofTerm, ctx: Context, tctx: Set[Var], guess: bool = False) -> Derivation:
        """
        推断 π 证明的公式。

        guess=False 时只处理消去式（头部是变量）与由它们拼成的 pair，其余抛 _NotInferable。
        guess=True 时对引入式也给出一个能被接受的公式：λ 的假设取 ⊤，析取缺的一边取 ⊤，
        ∃ 按见证项抽象；得到的推导一定正确，只是公式未必是调用者想要的那个。
        """
        if isinstance(p, Axiom):
            for name, f in reversed(ctx):
                if name == p.name:
                    return Derivation("axiom", f, p)
            raise ScopeError(f"unbound proof-variable {p.name}", p.name)
        if isinstance(p, TopI):
            return Derivation("⊤-intro", TOP, p)
        if isinstance(p, App):
            if guess and isinstance(p.fun, Lam):
                d_arg = self.infer(p.arg, ctx, tctx, guess)
                d_body = self.infer(p.fun.body, ctx + ((p.fun.var, d_arg.conclusion),), tctx, guess)
                d_fun = Derivation("⇒-intro", Implies(d_arg.conclusion, d_body.conclusion), p.fun, [d_body])
                return Derivation("⇒-elim", d_body.conclusion, p, [d_fun, d_arg])
            d_fun = self.infer(p.fun, ctx, tctx, guess)
            f = self.nf(d_fun.conclusion)
            if not isinstance(f, Implies):
                raise self._mismatch(p.fun, "an implication", d_fun.conclusion, "⇒-elim")
            d_arg = self.check_against(p.arg, f.left, ctx, tctx)
            return Derivation("⇒-elim", f.right, p, [d_fun, d_arg])
        if isinstance(p, (Fst, Snd)):
            d = self.infer(p.arg, ctx, tctx, guess)
            f = self.nf(d.conclusion)
            if not isinstance(f, And):
                raise self._mismatch(p.arg, "a conjunction", d.conclusion, "∧-elim")
            return Derivation("∧-elim1" if isinstance(p, Fst) else "∧-elim2",
                              f.left if isinstance(p, Fst) else f.right, p, [d])
        if isinstance(p, TApp):
            d = self.infer(p.fun, ctx, tctx, guess)
            f = self.nf(d.conclusion)
            if not isinstance(f, Forall):
                raise self._mismatch(p.fun, "a universal formula", d.conclusion, "∀-elim")
            self._scope_term(p.term, tctx, p)
            self._sort_agrees(p.term, f.var.sort, p, "a term", "∀-elim")
            return Derivation("∀-elim", subst_in_formula(f.body, f.var, p.term), p, [d])
        if isinstance(p, Pair):
            dl = self.infer(p.left, ctx, tctx, guess)
            dr = self.infer(p.right, ctx, tctx, guess)
            return Derivation("∧-intro", And(dl.conclusion, dr.conclusion), p, [dl, dr])
        if not guess:
            raise _NotInferable()
        return self._guess(p, ctx, tctx)

    def _guess(self, p: ProofTerm, ctx: Context, tctx: Set[Var]) -> Derivation:
        if isinstance(p, Lam):
            d = self.infer(p.body, ctx + ((p.var, TOP),), tctx, True)
            return Derivation("⇒-intro", Implies(TOP, d.conclusion), p, [d])
        if isinstance(p, (InjL, InjR)):
            d = self.infer(p.arg, ctx, tctx, True)
            if isinstance(p, InjL):
                return Derivation("∨-intro1", Or(d.conclusion, TOP), p, [d])
            return Derivation("∨-intro2", Or(TOP, d.conclusion), p, [d])
        if isinstance(p, TLam):
            self._eigen(p.var, ctx, [], p, "∀-intro")
            d = self.infer(p.body, ctx, tctx | {p.var}, True)
            return Derivation("∀-intro", Forall(p.var, d.conclusion), p, [d])
        if isinstance(p, Witness):
            self._scope_term(p.term, tctx, p)
            d = self.infer(p.body, ctx, tctx, True)
            v = self._fresh_var(self.signature.sort_of(p.term), ctx, tctx, [d.conclusion])
            return Derivation("∃-intro", Exists(v, abstract_term(d.conclusion, p.term, v)), p, [d])
        if isinstance(p, BotE):
            return Derivation("⊥-elim", TOP, p, [self.check_against(p.arg, BOT, ctx, tctx)])
        if isinstance(p, Case):
            d = self.infer(p.arg, ctx, tctx, True)
            f = self.nf(d.conclusion)
            if not isinstance(f, Or):
                raise self._mismatch(p.arg, "a disjunction", d.conclusion, "∨-elim")
            dl = self.infer(p.left, ctx + ((p.left_var, f.left),), tctx, True)
            dr = self.check_against(p.right, dl.conclusion, ctx + ((p.right_var, f.right),), tctx)
            return Derivation("∨-elim", dl.conclusion, p, [d, dl, dr])
        if isinstance(p, ExElim):
            d = self.infer(p.arg, ctx, tctx, True)
            f = self.nf(d.conclusion)
            if not isinstance(f, Exists):
                raise self._mismatch(p.arg, "an existential formula", d.conclusion, "∃-elim")
            x = p.term_var
            self._sort_agrees(x, f.var.sort, p, "eigenvariable", "∃-elim")
            hyp = subst_in_formula(f.body, f.var, x)
            db = self.infer(p.body, ctx + ((p.proof_var, hyp),), tctx | {x}, True)
            self._eigen(x, ctx, [f, db.conclusion], p, "∃-elim")
            return Derivation("∃-elim", db.conclusion, p, [d, db])
        raise _NotInferable()

    def synth(self, p: ProofTerm, ctx: Context, tctx: Set[Var], rule: str) -> Derivation:
        """先严格推断，不行再猜；都不行时报 ProofCheckError"""
        try:
            return self.infer(p, ctx, tctx)
        except _NotInferable:
            pass
        try:
            return self.infer(p, ctx, tctx, guess=True)
        except _NotInferable:
            raise ProofCheckError(f"{rule}: cannot infer the formula proved by {print_proof(p)}", print_proof(p))

    # ---------- 检查 ----------

    def check_against(self, p: ProofTerm, goal: Formula, ctx: Context, tctx: Set[Var]) -> Derivation:
        g = self.nf(goal)
        if isinstance(p, Lam):
            if not isinstance(g, Implies):
                raise self._mismatch(p, "an implication goal", goal, "⇒-intro")
            d = self.check_against(p.body, g.right, ctx + ((p.var, g.left),), tctx)
            return Derivation("⇒-intro", goal, p, [d])
        if isinstance(p, Pair):
            if not isinstance(g, And):
                raise self._mismatch(p, "a conjunction goal", goal, "∧-intro")
            return Derivation("∧-intro", goal, p, [self.check_against(p.left, g.left, ctx, tctx),
                                                    self.check_against(p.right, g.right, ctx, tctx)])
        if isinstance(p, (InjL, InjR)):
            if not isinstance(g, Or):
                raise self._mismatch(p, "a disjunction goal", goal, "∨-intro")
            side = g.left if isinstance(p, InjL) else g.right
            rule = "∨-intro1" if isinstance(p, InjL) else "∨-intro2"
            return Derivation(rule, goal, p, [self.check_against(p.arg, side, ctx, tctx)])
        if isinstance(p, TopI):
            if not isinstance(g, Top):
                raise self._mismatch(p, "top", goal, "⊤-intro")
            return Derivation("⊤-intro", goal, p)
        if isinstance(p, BotE):
            return Derivation("⊥-elim", goal, p, [self.check_against(p.arg, BOT, ctx, tctx)])
        if isinstance(p, TLam):
            if not isinstance(g, Forall):
                raise self._mismatch(p, "a universal goal", goal, "∀-intro")
            if p.var.sort != g.var.sort:
                raise RuleMismatchError(print_proof(p), f"eigenvariable of sort {g.var.sort}",
                                        f"{p.var.name} of sort {p.var.sort}", "∀-intro")
            self._eigen(p.var, ctx, [g], p, "∀-intro")
            body = subst_in_formula(g.body, g.var, p.var)
            d = self.check_against(p.body, body, ctx, tctx | {p.var})
            return Derivation("∀-intro", goal, p, [d])
        if isinstance(p, Witness):
            if not isinstance(g, Exists):
                raise self._mismatch(p, "an existential goal", goal, "∃-intro")
            self._scope_term(p.term, tctx, p)
            self._sort_agrees(p.term, g.var.sort, p, "a witness", "∃-intro")
            d = self.check_against(p.body, subst_in_formula(g.body, g.var, p.term), ctx, tctx)
            return Derivation("∃-intro", goal, p, [d])
        if isinstance(p, Case):
            try:
                d = self.infer(p.arg, ctx, tctx)
            except _NotInferable:
                if isinstance(p.arg, (InjL, InjR)):
                    return self._case_on_injection(p, goal, ctx, tctx)
                d = self.synth(p.arg, ctx, tctx, "∨-elim")
            return self._case_branches(p, d, goal, ctx, tctx)
        if isinstance(p, ExElim):
            try:
                d = self.infer(p.arg, ctx, tctx)
            except _NotInferable:
                if isinstance(p.arg, Witness):
                    return self._open_witness(p, goal, ctx, tctx)
                d = self.synth(p.arg, ctx, tctx, "∃-elim")
            return self._exelim_body(p, d, goal, ctx, tctx)
        try:
            d = self.infer(p, ctx, tctx)
        except _NotInferable:
            if isinstance(p, App):
                d_arg = self.synth(p.arg, ctx, tctx, "⇒-elim")
                d_fun = self.check_against(p.fun, Implies(d_arg.conclusion, goal), ctx, tctx)
                return Derivation("⇒-elim", goal, p, [d_fun, d_arg])
            if isinstance(p, (Fst, Snd)) and isinstance(p.arg, Pair):
                return self._project_pair(p, goal, ctx, tctx)
            if isinstance(p, TApp) and isinstance(p.fun, TLam):
                return self._instantiate(p, goal, ctx, tctx)
            d = self.synth(p, ctx, tctx, "conversion")
        if not self.same(d.conclusion, goal):
            raise RuleMismatchError(print_proof(p), print_formula(goal), print_formula(d.conclusion), d.rule)
        return d

    # ---------- 主体是引入式的消去 ----------

    def _case_branches(self, p: Case, d: Derivation, goal: Formula, ctx: Context, tctx: Set[Var]) -> Derivation:
        f = self.nf(d.conclusion)
        if not isinstance(f, Or):
            raise self._mismatch(p.arg, "a disjunction", d.conclusion, "∨-elim")
        dl = self.check_against(p.left, goal, ctx + ((p.left_var, f.left),), tctx)
        dr = self.check_against(p.right, goal, ctx + ((p.right_var, f.right),), tctx)
        return Derivation("∨-elim", goal, p, [d, dl, dr])

    def _case_on_injection(self, p: Case, goal: Formula, ctx: Context, tctx: Set[Var]) -> Derivation:
        """case (inl ρ) …：析取缺的一边依次试目标、⊤、已知的一边"""
        inj = p.arg
        ds = self.synth(inj.arg, ctx, tctx, "∨-elim")
        known = ds.conclusion
        error: Optional[KernelError] = None
        for other in (goal, TOP, known):
            if isinstance(inj, InjL):
                d = Derivation("∨-intro1", Or(known, other), inj, [ds])
            else:
                d = Derivation("∨-intro2", Or(other, known), inj, [ds])
            try:
                return self._case_branches(p, d, goal, ctx, tctx)
            except (ProofCheckError, SortCheckError) as e:
                error = e
        raise error

    def _exelim_body(self, p: ExElim, d: Derivation, goal: Formula, ctx: Context, tctx: Set[Var]) -> Derivation:
        f = self.nf(d.conclusion)
        if not isinstance(f, Exists):
            raise self._mismatch(p.arg, "an existential formula", d.conclusion, "∃-elim")
        x = p.term_var
        if x.sort != f.var.sort:
            raise RuleMismatchError(print_proof(p), f"eigenvariable of sort {f.var.sort}",
                                    f"{x.name} of sort {x.sort}", "∃-elim")
        self._eigen(x, ctx, [goal, f], p, "∃-elim")
        hyp = subst_in_formula(f.body, f.var, x)
        db = self.check_against(p.body, goal, ctx + ((p.proof_var, hyp),), tctx | {x})
        return Derivation("∃-elim", goal, p, [d, db])

    def _open_witness(self, p: ExElim, goal: Formula, ctx: Context, tctx: Set[Var]) -> Derivation:
        """exelim (wit t ρ) …：先按 t 抽象，不行再取不含 t 的读法"""
        wit = p.arg
        self._scope_term(wit.term, tctx, wit)
        dq = self.synth(wit.body, ctx, tctx, "∃-elim")
        v = self._fresh_var(self.signature.sort_of(wit.term), ctx, tctx, [dq.conclusion, goal])
        error: Optional[KernelError] = None
        for body in _distinct([abstract_term(dq.conclusion, wit.term, v), dq.conclusion]):
            d = Derivation("∃-intro", Exists(v, body), wit, [dq])
            try:
                return self._exelim_body(p, d, goal, ctx, tctx)
            except (ProofCheckError, SortCheckError) as e:
                error = e
        raise error

    def _project_pair(self, p: ProofTerm, goal: Formula, ctx: Context, tctx: Set[Var]) -> Derivation:
        """fst (pair π ρ) 对照目标检查 π，ρ 只需有某个推导"""
        pair = p.arg
        if isinstance(p, Fst):
            dl = self.check_against(pair.left, goal, ctx, tctx)
            dr = self.synth(pair.right, ctx, tctx, "∧-intro")
        else:
            dl = self.synth(pair.left, ctx, tctx, "∧-intro")
            dr = self.check_against(pair.right, goal, ctx, tctx)
        d = Derivation("∧-intro", And(dl.conclusion, dr.conclusion), pair, [dl, dr])
        return Derivation("∧-elim1" if isinstance(p, Fst) else "∧-elim2", goal, p, [d])

    def _instantiate(self, p: TApp, goal: Formula, ctx: Context, tctx: Set[Var]) -> Derivation:
        """(Λx.π) t 对照 G：∀x.B 的 B 依次试 G 中把 t 抽成 x 的结果、G 本身"""
        lam = p.fun
        self._scope_term(p.term, tctx, p)
        self._sort_agrees(p.term, lam.var.sort, p, "a term", "∀-elim")
        if lam.var in free_vars(goal) or any(lam.var in free_vars(h) for _, h in ctx):
            y = self._fresh_var(lam.var.sort, ctx, tctx | {lam.var}, [goal])
            lam = TLam(y, subst_term_in_proof(lam.body, lam.var, y))
        error: Optional[KernelError] = None
        for body in _distinct([abstract_term(goal, p.term, lam.var), abstract_term(self.nf(goal), p.term, lam.var),
                               goal]):
            try:
                d = self.check_against(lam, Forall(lam.var, body), ctx, tctx)
            except (ProofCheckError, SortCheckError) as e:
                error = e
                continue
            return Derivation("∀-elim", goal, p, [d])
        raise error

    # ---------- 入口 ----------

    def derive(self, seq: Sequent, p: ProofTerm) -> Derivation:
        seq.validate(self.signature)
        declared = {n for n, _ in seq.hypotheses}
        missing = free_proof_vars(p) - declared
        if missing:
            raise ScopeError(f"proof-variables not declared in the context: {', '.join(sorted(missing))}")
        return self.check_against(p, seq.conclusion, tuple(seq.hypotheses), set(seq.free_vars()))


def _distinct(formulas: Sequence[Formula]) -> List[Formula]:
    out: List[Formula] = []
    for f in formulas:
        if not any(alpha_eq(f, g) for g in out):
            out.append(f)
    return out


def check(theory: Theory, seq: Sequent, p: ProofTerm, fuel: int = DEFAULT_FUEL) -> CheckResult:
    """检查 π 是否编码 seq 的模同余自然演绎推导"""
    try:
        d = ProofChecker(theory, fuel).derive(seq, p)
        dbg(f"✅ accepted, derivation size {d.size()}")
        return CheckResult(accepted=True, derivation=d)
    except (ProofCheckError, SortCheckError, FuelExhaustedError) as e:
        dbg(f"❌ rejected: {e}")
        return CheckResult(accepted=False, errors=[str(e)], error_kind=type(e).__name__)
