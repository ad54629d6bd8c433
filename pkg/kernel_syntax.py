"""
核心语法模块 - 多类型一阶逻辑的项、公式、相继式与改写理论

核心原则：
1. 所有语法对象构造后不可变（frozen dataclass），可在并发任务间自由共享
2. 变量身份 = (名字, 类型)；打印时只输出名字，因此换名时按名字避让
3. 否定不是原语：¬A 记作 A → ⊥
4. 公式比较默认做 alpha 等价（约束变量换名不影响相等）
"""

import os
import re
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Set, Tuple, Union


DEBUG = os.getenv("KERNEL_DEBUG", "0") == "1"


def dbg(message: str) -> None:
    """KERNEL_DEBUG=1 时打印调试信息"""
    if DEBUG:
        try:
            print(message)
        except Exception:
            pass


# ==================== 异常体系 ====================

class KernelError(Exception):
    """内核所有异常的基类"""
    pass


class KernelSyntaxError(KernelError):
    """文本格式错误，带行列号"""
    def __init__(self, message: str, line: Optional[int] = None, column: Optional[int] = None):
        self.line = line
        self.column = column
        where = f"{line}:{column}: " if line is not None else ""
        super().__init__(f"{where}{message}")


class SortCheckError(KernelError):
    """类型检查失败，symbol 为出错的符号"""
    def __init__(self, message: str, symbol: Optional[str] = None):
        self.symbol = symbol
        super().__init__(message)


class UnmappedSymbolError(KernelError):
    """翻译时遇到未映射的符号"""
    def __init__(self, symbols: Iterable[str], what: str = "symbol"):
        self.symbols = sorted(set(symbols))
        super().__init__(f"unmapped {what}: {', '.join(self.symbols)}")


class CoverageError(UnmappedSymbolError):
    """规格没有覆盖理论的全部签名"""
    pass


class FuelExhaustedError(KernelError):
    """改写步数耗尽（规则集可能不终止）"""
    def __init__(self, fuel: int):
        self.fuel = fuel
        super().__init__(f"rewriting fuel exhausted after {fuel} steps")


class ProofCheckError(KernelError):
    """证明检查失败"""
    def __init__(self, message: str, node: Optional[str] = None):
        self.node = node
        super().__init__(message)


class RuleMismatchError(ProofCheckError):
    """规则与公式不匹配"""
    def __init__(self, node: str, expected: str, actual: str, rule: str = ""):
        self.expected = expected
        self.actual = actual
        self.rule = rule
        super().__init__(f"{rule or 'rule'} mismatch at {node}: expected {expected}, got {actual}", node)


class ScopeError(ProofCheckError):
    pass


class EigenvariableError(ProofCheckError):
    pass


class MalformedEncodingError(KernelError):
    """树不是合法编码，subtree 为出错子树"""
    def __init__(self, message: str, subtree: object = None):
        self.subtree = subtree
        super().__init__(message)


class PrimRecDefinitionError(KernelError):
    pass


class StatementKindError(KernelError):
    pass


class UnregisteredSymbolError(KernelError):
    def __init__(self, symbol: str):
        self.symbol = symbol
        super().__init__(f"unregistered symbol: {symbol}")


# ==================== 项 ====================

@dataclass(frozen=True)
class Var:
    name: str
    sort: str


@dataclass(frozen=True)
class FunApp:
    symbol: str
    args: Tuple["Term", ...] = ()


Term = Union[Var, FunApp]


# ==================== 公式 ====================

@dataclass(frozen=True)
class Atom:
    pred: str
    args: Tuple[Term, ...] = ()


@dataclass(frozen=True)
class Top:
    pass


@dataclass(frozen=True)
class Bot:
    pass


@dataclass(frozen=True)
class And:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Or:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Implies:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Forall:
    var: Var
    body: "Formula"


@dataclass(frozen=True)
class Exists:
    var: Var
    body: "Formula"


Formula = Union[Atom, Top, Bot, And, Or, Implies, Forall, Exists]

TOP = Top()
BOT = Bot()

BINARY = (And, Or, Implies)
QUANTIFIERS = (Forall, Exists)


def neg(a: Formula) -> Formula:
    return Implies(a, BOT)


def conj(parts: Sequence[Formula]) -> Formula:
    """右结合合取；空列表为 ⊤"""
    if not parts:
        return TOP
    result = parts[-1]
    for p in reversed(parts[:-1]):
        result = And(p, result)
    return result


def disj(parts: Sequence[Formula]) -> Formula:
    if not parts:
        return BOT
    result = parts[-1]
    for p in reversed(parts[:-1]):
        result = Or(p, result)
    return result


def imp_chain(hyps: Sequence[Formula], concl: Formula) -> Formula:
    """A1 → … → Ak → B（右结合）"""
    result = concl
    for h in reversed(hyps):
        result = Implies(h, result)
    return result


def iff(a: Formula, b: Formula) -> Formula:
    return And(Implies(a, b), Implies(b, a))


def forall_many(variables: Sequence[Var], body: Formula) -> Formula:
    for v in reversed(variables):
        body = Forall(v, body)
    return body


def exists_many(variables: Sequence[Var], body: Formula) -> Formula:
    for v in reversed(variables):
        body = Exists(v, body)
    return body


def conjuncts(a: Formula) -> List[Formula]:
    """把右结合合取拆平"""
    if isinstance(a, And):
        return conjuncts(a.left) + conjuncts(a.right)
    return [a]


# ==================== 自由变量 ====================

def term_vars(t: Term) -> Set[Var]:
    if isinstance(t, Var):
        return {t}
    out: Set[Var] = set()
    for a in t.args:
        out |= term_vars(a)
    return out


def free_vars(a: Formula) -> Set[Var]:
    """公式中有自由出现的变量 (名字, 类型)"""
    if isinstance(a, Atom):
        out: Set[Var] = set()
        for t in a.args:
            out |= term_vars(t)
        return out
    if isinstance(a, (Top, Bot)):
        return set()
    if isinstance(a, BINARY):
        return free_vars(a.left) | free_vars(a.right)
    if isinstance(a, QUANTIFIERS):
        return free_vars(a.body) - {a.var}
    raise TypeError(f"not a formula: {a!r}")


def var_names(a: Formula) -> Set[str]:
    """公式中出现的全部变量名（含约束变量）"""
    if isinstance(a, Atom):
        return {v.name for t in a.args for v in term_vars(t)}
    if isinstance(a, (Top, Bot)):
        return set()
    if isinstance(a, BINARY):
        return var_names(a.left) | var_names(a.right)
    return var_names(a.body) | {a.var.name}


def ordered_free_vars(a: Formula) -> List[Var]:
    """按首次出现顺序列出自由变量（生成全称闭包时保证输出稳定）"""
    seen: List[Var] = []

    def visit_term(t: Term, bound: FrozenSet[Var]):
        if isinstance(t, Var):
            if t not in bound and t not in seen:
                seen.append(t)
        else:
            for x in t.args:
                visit_term(x, bound)

    def visit(f: Formula, bound: FrozenSet[Var]):
        if isinstance(f, Atom):
            for t in f.args:
                visit_term(t, bound)
        elif isinstance(f, BINARY):
            visit(f.left, bound)
            visit(f.right, bound)
        elif isinstance(f, QUANTIFIERS):
            visit(f.body, bound | {f.var})

    visit(a, frozenset())
    return seen


def universal_closure(a: Formula) -> Formula:
    return forall_many(ordered_free_vars(a), a)


_SUFFIX = re.compile(r"^(.*?)(\d*)$")


def fresh_name(base: str, avoid: Set[str]) -> str:
    """在 base 后追加递增数字，直到不与 avoid 冲突"""
    stem = _SUFFIX.match(base).group(1) or base
    if base not in avoid:
        return base
    i = 1
    while f"{stem}{i}" in avoid:
        i += 1
    return f"{stem}{i}"


# ==================== 代换 ====================

def subst_term(t: Term, sigma: Mapping[Var, Term]) -> Term:
    if isinstance(t, Var):
        return sigma.get(t, t)
    return FunApp(t.symbol, tuple(subst_term(a, sigma) for a in t.args))


def subst_formula(a: Formula, sigma: Mapping[Var, Term]) -> Formula:
    """同时代换，必要时给约束变量换名以避免捕获"""
    if not sigma:
        return a
    if isinstance(a, Atom):
        return Atom(a.pred, tuple(subst_term(t, sigma) for t in a.args))
    if isinstance(a, (Top, Bot)):
        return a
    if isinstance(a, BINARY):
        return type(a)(subst_formula(a.left, sigma), subst_formula(a.right, sigma))

    v = a.var
    body_free = free_vars(a.body)
    inner = {k: t for k, t in sigma.items() if k != v and k in body_free}
    if not inner:
        return a
    range_names = {w.name for t in inner.values() for w in term_vars(t)}
    if v.name in range_names:
        avoid = range_names | var_names(a.body) | {k.name for k in inner}
        nv = Var(fresh_name(v.name, avoid), v.sort)
        inner = dict(inner)
        inner[v] = nv
        return type(a)(nv, subst_formula(a.body, inner))
    return type(a)(v, subst_formula(a.body, inner))


def subst_in_formula(a: Formula, x: Var, t: Term, signature: Optional["Signature"] = None) -> Formula:
    """A[x := t]，t 必须与 x 同类型"""
    if signature is not None:
        ts = signature.sort_of(t)
        if ts != x.sort:
            raise SortCheckError(f"cannot substitute term of sort {ts} for {x.name}:{x.sort}", x.name)
    elif isinstance(t, Var) and t.sort != x.sort:
        raise SortCheckError(f"cannot substitute {t.name}:{t.sort} for {x.name}:{x.sort}", x.name)
    return subst_formula(a, {x: t})


# ==================== alpha 等价 ====================

def _canon_term(t: Term, env: Mapping[Var, str]) -> Term:
    if isinstance(t, Var):
        return Var(env[t], t.sort) if t in env else t
    return FunApp(t.symbol, tuple(_canon_term(a, env) for a in t.args))


def canonical(a: Formula, env: Optional[Dict[Var, str]] = None, depth: int = 0) -> Formula:
    """约束变量统一改名为 #0, #1, …（按嵌套深度），用于 alpha 比较"""
    env = env or {}
    if isinstance(a, Atom):
        return Atom(a.pred, tuple(_canon_term(t, env) for t in a.args))
    if isinstance(a, (Top, Bot)):
        return a
    if isinstance(a, BINARY):
        return type(a)(canonical(a.left, env, depth), canonical(a.right, env, depth))
    name = f"#{depth}"
    inner = dict(env)
    inner[a.var] = name
    return type(a)(Var(name, a.var.sort), canonical(a.body, inner, depth + 1))


def alpha_eq(a: Formula, b: Formula) -> bool:
    return canonical(a) == canonical(b)


# ==================== 签名 ====================

Rank = Tuple[Tuple[str, ...], str]


@dataclass(frozen=True)
class Signature:
    """排序签名：类型集合、函数符号秩、谓词符号秩"""
    sorts: Tuple[str, ...] = ()
    functions: Mapping[str, Rank] = field(default_factory=dict)
    predicates: Mapping[str, Tuple[str, ...]] = field(default_factory=dict)

    def validate(self) -> None:
        if len(set(self.sorts)) != len(self.sorts):
            raise SortCheckError("duplicate sort declaration")
        known = set(self.sorts)
        for f, (args, res) in self.functions.items():
            for s in list(args) + [res]:
                if s not in known:
                    raise SortCheckError(f"function {f} uses undeclared sort {s}", f)
        for p, args in self.predicates.items():
            for s in args:
                if s not in known:
                    raise SortCheckError(f"predicate {p} uses undeclared sort {s}", p)
        clash = set(self.functions) & set(self.predicates)
        if clash:
            raise SortCheckError(f"symbol used as function and predicate: {sorted(clash)}", sorted(clash)[0])

    def sort_of(self, t: Term) -> str:
        if isinstance(t, Var):
            if t.sort not in self.sorts:
                raise SortCheckError(f"variable {t.name} has undeclared sort {t.sort}", t.name)
            return t.sort
        if t.symbol not in self.functions:
            raise SortCheckError(f"unknown function symbol {t.symbol}", t.symbol)
        args, res = self.functions[t.symbol]
        if len(args) != len(t.args):
            raise SortCheckError(f"{t.symbol} expects {len(args)} arguments, got {len(t.args)}", t.symbol)
        for expected, arg in zip(args, t.args):
            actual = self.sort_of(arg)
            if actual != expected:
                raise SortCheckError(f"argument of {t.symbol} has sort {actual}, expected {expected}", t.symbol)
        return res

    def check_formula(self, a: Formula) -> None:
        if isinstance(a, Atom):
            if a.pred not in self.predicates:
                raise SortCheckError(f"unknown predicate symbol {a.pred}", a.pred)
            args = self.predicates[a.pred]
            if len(args) != len(a.args):
                raise SortCheckError(f"{a.pred} expects {len(args)} arguments, got {len(a.args)}", a.pred)
            for expected, t in zip(args, a.args):
                actual = self.sort_of(t)
                if actual != expected:
                    raise SortCheckError(f"argument of {a.pred} has sort {actual}, expected {expected}", a.pred)
        elif isinstance(a, BINARY):
            self.check_formula(a.left)
            self.check_formula(a.right)
        elif isinstance(a, QUANTIFIERS):
            if a.var.sort not in self.sorts:
                raise SortCheckError(f"bound variable {a.var.name} has undeclared sort {a.var.sort}", a.var.name)
            self.check_formula(a.body)

    def extended(self, sorts: Sequence[str] = (), functions: Optional[Mapping[str, Rank]] = None,
                 predicates: Optional[Mapping[str, Tuple[str, ...]]] = None) -> "Signature":
        fs = dict(self.functions)
        fs.update(functions or {})
        ps = dict(self.predicates)
        ps.update(predicates or {})
        merged = tuple(self.sorts) + tuple(s for s in sorts if s not in self.sorts)
        return Signature(merged, fs, ps)


def term_size(t: Term) -> int:
    if isinstance(t, Var):
        return 1
    return 1 + sum(term_size(a) for a in t.args)


def enumerate_terms(signature: Signature, max_size: int, variables: Sequence[Var] = ()) -> List[Term]:
    """良类型项（大小 ≤ max_size），按大小升序；variables 为可用的叶子变量"""
    by_size: Dict[int, List[Tuple[Term, str]]] = {
        1: [(v, v.sort) for v in variables]
           + [(FunApp(f, ()), res) for f, (args, res) in signature.functions.items() if not args]}
    for n in range(2, max_size + 1):
        level: List[Tuple[Term, str]] = []
        for f, (args, res) in signature.functions.items():
            if args:
                level.extend((FunApp(f, combo), res) for combo in _arg_combos(by_size, args, n - 1))
        by_size[n] = level
    return [t for n in range(1, max_size + 1) for t, _ in by_size.get(n, [])]


def _arg_combos(by_size: Mapping[int, List[Tuple[Term, str]]], sorts: Sequence[str], total: int):
    """把 total 个节点分给各参数位置，每个位置取对应类型的项"""
    if not sorts:
        if total == 0:
            yield ()
        return
    for k in range(1, total - len(sorts) + 2):
        for t, s in by_size.get(k, []):
            if s != sorts[0]:
                continue
            for rest in _arg_combos(by_size, sorts[1:], total - k):
                yield (t,) + rest


# ==================== 改写规则与理论 ====================

@dataclass(frozen=True)
class RewriteRule:
    """kind 为 'term'（项→项）或 'prop'（原子→公式）"""
    kind: str
    lhs: Union[Term, Atom]
    rhs: Union[Term, Formula]

    def lhs_vars(self) -> Set[Var]:
        if self.kind == "term":
            return term_vars(self.lhs)
        return free_vars(self.lhs)

    def rhs_vars(self) -> Set[Var]:
        if self.kind == "term":
            return term_vars(self.rhs)
        return free_vars(self.rhs)

    def validate(self, signature: Signature) -> None:
        if isinstance(self.lhs, Var):
            raise SortCheckError(f"rule left-hand side is a bare variable {self.lhs.name}", self.lhs.name)
        if self.kind == "term":
            if isinstance(self.rhs, (Atom, Top, Bot, And, Or, Implies, Forall, Exists)):
                raise SortCheckError("term rule with formula right-hand side")
            ls, rs = signature.sort_of(self.lhs), signature.sort_of(self.rhs)
            if ls != rs:
                raise SortCheckError(f"term rule changes sort {ls} -> {rs}", getattr(self.lhs, "symbol", None))
        elif self.kind == "prop":
            if not isinstance(self.lhs, Atom):
                raise SortCheckError("proposition rule must rewrite an atom")
            signature.check_formula(self.lhs)
            signature.check_formula(self.rhs)
        else:
            raise SortCheckError(f"unknown rule kind {self.kind}")
        extra = self.rhs_vars() - self.lhs_vars()
        if extra:
            names = sorted(v.name for v in extra)
            raise SortCheckError(f"rule right-hand side has extra free variables {names}", names[0])


@dataclass(frozen=True)
class Theory:
    signature: Signature
    rules: Tuple[RewriteRule, ...] = ()
    axioms: Tuple[Formula, ...] = ()

    def validate(self) -> "Theory":
        self.signature.validate()
        for r in self.rules:
            r.validate(self.signature)
        for ax in self.axioms:
            self.signature.check_formula(ax)
            if free_vars(ax):
                names = sorted(v.name for v in free_vars(ax))
                raise SortCheckError(f"axiom is not closed, free: {names}", names[0])
        return self


@dataclass(frozen=True)
class Sequent:
    """相继式：有序的 (证明变量, 公式) 假设 + 结论"""
    hypotheses: Tuple[Tuple[str, Formula], ...]
    conclusion: Formula

    def validate(self, signature: Optional[Signature] = None) -> "Sequent":
        names = [n for n, _ in self.hypotheses]
        if len(set(names)) != len(names):
            raise ScopeError(f"proof-variables are not pairwise distinct: {names}")
        if signature is not None:
            for _, h in self.hypotheses:
                signature.check_formula(h)
            signature.check_formula(self.conclusion)
        return self

    def free_vars(self) -> Set[Var]:
        out = free_vars(self.conclusion)
        for _, h in self.hypotheses:
            out |= free_vars(h)
        return out

    def ordered_free_vars(self) -> List[Var]:
        return ordered_free_vars(imp_chain([h for _, h in self.hypotheses], self.conclusion))

    def as_formula(self) -> Formula:
        return imp_chain([h for _, h in self.hypotheses], self.conclusion)


# ==================== 模板 ====================

@dataclass(frozen=True)
class TermTemplate:
    """项宏 f*(z1,…,zn)"""
    params: Tuple[Var, ...]
    body: Term

    def instantiate(self, args: Sequence[Term]) -> Term:
        if len(args) != len(self.params):
            raise SortCheckError(f"template expects {len(self.params)} arguments, got {len(args)}")
        return subst_term(self.body, dict(zip(self.params, args)))


@dataclass(frozen=True)
class FormulaTemplate:
    """带洞公式：params 为洞的位置"""
    params: Tuple[Var, ...]
    body: Formula

    def instantiate(self, args: Sequence[Term]) -> Formula:
        if len(args) != len(self.params):
            raise SortCheckError(f"template expects {len(self.params)} arguments, got {len(args)}")
        return subst_formula(self.body, dict(zip(self.params, args)))
