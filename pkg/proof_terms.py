"""
证明项演算 - 无类型证明项、切消归约、有界强正规化分析

核心原则：
1. 证明项无类型，Ω 这样的项是合法值，只有 check 会拒绝它
2. 代换采用环境式同时代换；需要换名时新变量编号 = 1 + 结点与环境中的最大变量编号
   （tree_codec/primrec 中的 PSubst/TSubst 逐字遵循同一纪律，两边结果严格相等）
3. 七条根归约规则 + 任意上下文闭包
"""

import re
from dataclasses import dataclass
from itertools import product
from typing import Any, Dict, FrozenSet, Iterator, List, Optional, Sequence, Set, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field

from kernel_syntax import dbg, FunApp, KernelSyntaxError, SortCheckError, Term, Var, subst_term, term_vars


# ==================== 证明项 ====================

@dataclass(frozen=True)
class Axiom:
    name: str


@dataclass(frozen=True)
class Lam:
    var: str
    body: "ProofTerm"


@dataclass(frozen=True)
class App:
    fun: "ProofTerm"
    arg: "ProofTerm"


@dataclass(frozen=True)
class Pair:
    left: "ProofTerm"
    right: "ProofTerm"


@dataclass(frozen=True)
class Fst:
    arg: "ProofTerm"


@dataclass(frozen=True)
class Snd:
    arg: "ProofTerm"


@dataclass(frozen=True)
class InjL:
    arg: "ProofTerm"


@dataclass(frozen=True)
class InjR:
    arg: "ProofTerm"


@dataclass(frozen=True)
class Case:
    arg: "ProofTerm"
    left_var: str
    left: "ProofTerm"
    right_var: str
    right: "ProofTerm"


@dataclass(frozen=True)
class TopI:
    pass


@dataclass(frozen=True)
class BotE:
    arg: "ProofTerm"


@dataclass(frozen=True)
class TLam:
    var: Var
    body: "ProofTerm"


@dataclass(frozen=True)
class TApp:
    fun: "ProofTerm"
    term: Term


@dataclass(frozen=True)
class Witness:
    term: Term
    body: "ProofTerm"


@dataclass(frozen=True)
class ExElim:
    """exelim π (x. α. π′)，约束顺序固定为 (x, α)"""
    arg: "ProofTerm"
    term_var: Var
    proof_var: str
    body: "ProofTerm"


ProofTerm = Union[Axiom, Lam, App, Pair, Fst, Snd, InjL, InjR, Case, TopI, BotE, TLam, TApp, Witness, ExElim]

TOP_I = TopI()

INTRODUCTIONS = (Lam, Pair, InjL, InjR, TopI, TLam, Witness)
ELIMINATIONS = (App, Fst, Snd, Case, BotE, TApp, ExElim)

RULES = ("beta", "fst", "snd", "case-inl", "case-inr", "forall", "exists")


def is_elimination(p: ProofTerm) -> bool:
    return isinstance(p, ELIMINATIONS)


def is_introduction(p: ProofTerm) -> bool:
    return isinstance(p, INTRODUCTIONS)


def size(p: ProofTerm) -> int:
    """构造子结点数（嵌入的项不计）"""
    return 1 + sum(size(c) for c in proof_children(p))


# ==================== 变量编号 ====================

_VAR_NAME = re.compile(r"^([a-z])(0|[1-9][0-9]*)?$")


def var_index(name: str) -> int:
    """变量名与自然数的双射：a..z -> 0..25，a0..z0 -> 26..51，a1.. -> 52.."""
    m = _VAR_NAME.match(name)
    if not m:
        raise KernelSyntaxError(f"variable name {name!r} is not a lowercase letter optionally followed by digits")
    letter = ord(m.group(1)) - ord("a")
    if m.group(2) is None:
        return letter
    return letter + 26 * (int(m.group(2)) + 1)


def var_name(index: int) -> str:
    letter, block = index % 26, index // 26
    base = chr(ord("a") + letter)
    return base if block == 0 else f"{base}{block - 1}"


def is_codable_name(name: str) -> bool:
    return bool(_VAR_NAME.match(name))


# ==================== 结构访问 ====================

def proof_children(p: ProofTerm) -> Tuple[ProofTerm, ...]:
    if isinstance(p, (Axiom, TopI)):
        return ()
    if isinstance(p, (Lam, TLam, Witness)):
        return (p.body,)
    if isinstance(p, App):
        return (p.fun, p.arg)
    if isinstance(p, Pair):
        return (p.left, p.right)
    if isinstance(p, (Fst, Snd, InjL, InjR, BotE)):
        return (p.arg,)
    if isinstance(p, Case):
        return (p.arg, p.left, p.right)
    if isinstance(p, TApp):
        return (p.fun,)
    if isinstance(p, ExElim):
        return (p.arg, p.body)
    raise TypeError(f"not a proof-term: {p!r}")


def replace_child(p: ProofTerm, i: int, new: ProofTerm) -> ProofTerm:
    kids = list(proof_children(p))
    kids[i] = new
    if isinstance(p, Lam):
        return Lam(p.var, kids[0])
    if isinstance(p, TLam):
        return TLam(p.var, kids[0])
    if isinstance(p, Witness):
        return Witness(p.term, kids[0])
    if isinstance(p, App):
        return App(*kids)
    if isinstance(p, Pair):
        return Pair(*kids)
    if isinstance(p, (Fst, Snd, InjL, InjR, BotE)):
        return type(p)(kids[0])
    if isinstance(p, Case):
        return Case(kids[0], p.left_var, kids[1], p.right_var, kids[2])
    if isinstance(p, TApp):
        return TApp(kids[0], p.term)
    if isinstance(p, ExElim):
        return ExElim(kids[0], p.term_var, p.proof_var, kids[1])
    raise TypeError(f"no child {i} in {p!r}")


def subterm_at(p: ProofTerm, path: Sequence[int]) -> ProofTerm:
    for i in path:
        p = proof_children(p)[i]
    return p


# ==================== 自由变量 ====================

def free_proof_vars(p: ProofTerm) -> Set[str]:
    if isinstance(p, Axiom):
        return {p.name}
    if isinstance(p, Lam):
        return free_proof_vars(p.body) - {p.var}
    if isinstance(p, Case):
        return (free_proof_vars(p.arg) | (free_proof_vars(p.left) - {p.left_var})
                | (free_proof_vars(p.right) - {p.right_var}))
    if isinstance(p, ExElim):
        return free_proof_vars(p.arg) | (free_proof_vars(p.body) - {p.proof_var})
    out: Set[str] = set()
    for c in proof_children(p):
        out |= free_proof_vars(c)
    return out


def free_term_vars(p: ProofTerm) -> Set[Var]:
    if isinstance(p, TLam):
        return free_term_vars(p.body) - {p.var}
    if isinstance(p, ExElim):
        return free_term_vars(p.arg) | (free_term_vars(p.body) - {p.term_var})
    out: Set[Var] = set()
    if isinstance(p, TApp):
        out |= term_vars(p.term)
    if isinstance(p, Witness):
        out |= term_vars(p.term)
    for c in proof_children(p):
        out |= free_term_vars(c)
    return out


def canonical_proof(p: ProofTerm, penv: Optional[Dict[str, str]] = None,
                    tenv: Optional[Dict[Var, Term]] = None, depth: int = 0) -> ProofTerm:
    """约束变量按深度统一改名为 _p{d} / _x{d}，自由变量不动"""
    penv = penv or {}
    tenv = tenv or {}
    if isinstance(p, Axiom):
        return Axiom(penv.get(p.name, p.name))
    if isinstance(p, Lam):
        name = f"_p{depth}"
        return Lam(name, canonical_proof(p.body, {**penv, p.var: name}, tenv, depth + 1))
    if isinstance(p, Case):
        name = f"_p{depth}"
        return Case(canonical_proof(p.arg, penv, tenv, depth),
                    name, canonical_proof(p.left, {**penv, p.left_var: name}, tenv, depth + 1),
                    name, canonical_proof(p.right, {**penv, p.right_var: name}, tenv, depth + 1))
    if isinstance(p, TLam):
        x = Var(f"_x{depth}", p.var.sort)
        return TLam(x, canonical_proof(p.body, penv, {**tenv, p.var: x}, depth + 1))
    if isinstance(p, ExElim):
        x = Var(f"_x{depth}", p.term_var.sort)
        name = f"_p{depth}"
        return ExElim(canonical_proof(p.arg, penv, tenv, depth), x, name,
                      canonical_proof(p.body, {**penv, p.proof_var: name}, {**tenv, p.term_var: x}, depth + 1))
    if isinstance(p, TApp):
        return TApp(canonical_proof(p.fun, penv, tenv, depth), subst_term(p.term, tenv))
    if isinstance(p, Witness):
        return Witness(subst_term(p.term, tenv), canonical_proof(p.body, penv, tenv, depth))
    kids = proof_children(p)
    out = p
    for i, c in enumerate(kids):
        out = replace_child(out, i, canonical_proof(c, penv, tenv, depth))
    return out


def alpha_eq_proof(p: ProofTerm, q: ProofTerm) -> bool:
    return canonical_proof(p) == canonical_proof(q)


def all_var_indices(p: ProofTerm) -> Set[int]:
    """全部变量（证明变量与项变量、约束与自由）的编号"""
    out: Set[int] = set()
    if isinstance(p, Axiom):
        out.add(var_index(p.name))
    elif isinstance(p, Lam):
        out.add(var_index(p.var))
    elif isinstance(p, Case):
        out |= {var_index(p.left_var), var_index(p.right_var)}
    elif isinstance(p, TLam):
        out.add(var_index(p.var.name))
    elif isinstance(p, ExElim):
        out |= {var_index(p.term_var.name), var_index(p.proof_var)}
    if isinstance(p, (TApp, Witness)):
        out |= {var_index(v.name) for v in term_vars(p.term)}
    for c in proof_children(p):
        out |= all_var_indices(c)
    return out


# ==================== 同时代换 ====================

@dataclass(frozen=True)
class PBind:
    key: str
    value: ProofTerm


@dataclass(frozen=True)
class TBind:
    key: Var
    value: Term


Binding = Union[PBind, TBind]
Env = Tuple[Binding, ...]


def _env_max(env: Env) -> int:
    best = -1
    for b in env:
        if isinstance(b, PBind):
            idx = {var_index(b.key)} | all_var_indices(b.value)
        else:
            idx = {var_index(b.key.name)} | {var_index(v.name) for v in term_vars(b.value)}
        best = max(best, max(idx))
    return best


def _fresh_index(node: ProofTerm, env: Env) -> int:
    return 1 + max(max(all_var_indices(node), default=-1), _env_max(env))


def _captures_proof_binder(binder: str, body: ProofTerm, env: Env) -> bool:
    body_free = free_proof_vars(body)
    for b in env:
        if isinstance(b, PBind) and b.key != binder and b.key in body_free \
                and binder in free_proof_vars(b.value):
            return True
    return False


def _captures_term_binder(binder: Var, body: ProofTerm, env: Env) -> bool:
    body_ptv = free_proof_vars(body)
    body_ttv = free_term_vars(body)
    for b in env:
        if isinstance(b, TBind):
            if b.key != binder and b.key in body_ttv and binder in term_vars(b.value):
                return True
        elif b.key in body_ptv and binder in free_term_vars(b.value):
            return True
    return False


def _lookup_proof(name: str, env: Env) -> Optional[ProofTerm]:
    for b in env:
        if isinstance(b, PBind) and b.key == name:
            return b.value
    return None


def subst_term_env(t: Term, env: Env) -> Term:
    if isinstance(t, Var):
        for b in env:
            if isinstance(b, TBind) and b.key == t:
                return b.value
        return t
    return FunApp(t.symbol, tuple(subst_term_env(a, env) for a in t.args))


def subst_env(p: ProofTerm, env: Env) -> ProofTerm:
    """按环境同时代换证明变量与项变量"""
    if not env:
        return p
    if isinstance(p, Axiom):
        found = _lookup_proof(p.name, env)
        return p if found is None else found
    if isinstance(p, TopI):
        return p
    if isinstance(p, Lam):
        var = p.var
        if _captures_proof_binder(var, p.body, env):
            var = var_name(_fresh_index(p, env))
        return Lam(var, subst_env(p.body, (PBind(p.var, Axiom(var)),) + env))
    if isinstance(p, Case):
        fresh = _fresh_index(p, env)
        lv = var_name(fresh) if _captures_proof_binder(p.left_var, p.left, env) else p.left_var
        rv = var_name(fresh) if _captures_proof_binder(p.right_var, p.right, env) else p.right_var
        return Case(subst_env(p.arg, env),
                    lv, subst_env(p.left, (PBind(p.left_var, Axiom(lv)),) + env),
                    rv, subst_env(p.right, (PBind(p.right_var, Axiom(rv)),) + env))
    if isinstance(p, TLam):
        var = p.var
        if _captures_term_binder(var, p.body, env):
            var = Var(var_name(_fresh_index(p, env)), p.var.sort)
        return TLam(var, subst_env(p.body, (TBind(p.var, var),) + env))
    if isinstance(p, ExElim):
        fresh = _fresh_index(p, env)
        pv = var_name(fresh) if _captures_proof_binder(p.proof_var, p.body, env) else p.proof_var
        tv = p.term_var
        if _captures_term_binder(tv, p.body, env):
            tv = Var(var_name(fresh), tv.sort)
        inner = (PBind(p.proof_var, Axiom(pv)), TBind(p.term_var, tv)) + env
        return ExElim(subst_env(p.arg, env), tv, pv, subst_env(p.body, inner))
    if isinstance(p, TApp):
        return TApp(subst_env(p.fun, env), subst_term_env(p.term, env))
    if isinstance(p, Witness):
        return Witness(subst_term_env(p.term, env), subst_env(p.body, env))
    kids = proof_children(p)
    out = p
    for i, c in enumerate(kids):
        out = replace_child(out, i, subst_env(c, env))
    return out


def subst_proof(p: ProofTerm, alpha: str, rho: ProofTerm) -> ProofTerm:
    """π(α ← ρ)"""
    return subst_env(p, (PBind(alpha, rho),))


def subst_term_in_proof(p: ProofTerm, x: Var, t: Term, signature=None) -> ProofTerm:
    """π(x ← t)，signature 给出时检查类型"""
    if signature is not None:
        ts = signature.sort_of(t)
        if ts != x.sort:
            raise SortCheckError(f"cannot substitute term of sort {ts} for {x.name}:{x.sort}", x.name)
    return subst_env(p, (TBind(x, t),))


# ==================== 归约 ====================

class ReductionStep(BaseModel):
    """一步归约：在 position 处触发 rule"""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    source: Any
    target: Any
    rule: str
    position: Tuple[int, ...] = Field(default_factory=tuple, description="从根出发的子结点下标路径")


def root_step(p: ProofTerm) -> Optional[Tuple[str, ProofTerm]]:
    """根部切消：返回 (规则名, 收缩结果)，不是 redex 时返回 None"""
    if isinstance(p, App) and isinstance(p.fun, Lam):
        return "beta", subst_proof(p.fun.body, p.fun.var, p.arg)
    if isinstance(p, Fst) and isinstance(p.arg, Pair):
        return "fst", p.arg.left
    if isinstance(p, Snd) and isinstance(p.arg, Pair):
        return "snd", p.arg.right
    if isinstance(p, Case) and isinstance(p.arg, InjL):
        return "case-inl", subst_proof(p.left, p.left_var, p.arg.arg)
    if isinstance(p, Case) and isinstance(p.arg, InjR):
        return "case-inr", subst_proof(p.right, p.right_var, p.arg.arg)
    if isinstance(p, TApp) and isinstance(p.fun, TLam):
        return "forall", subst_term_in_proof(p.fun.body, p.fun.var, p.term)
    if isinstance(p, ExElim) and isinstance(p.arg, Witness):
        env = (PBind(p.proof_var, p.arg.body), TBind(p.term_var, p.arg.term))
        return "exists", subst_env(p.body, env)
    return None


def step(p: ProofTerm) -> List[ReductionStep]:
    """所有位置上的一步归约（先根后子，子结点从左到右）"""
    out: List[ReductionStep] = []
    fired = root_step(p)
    if fired is not None:
        out.append(ReductionStep(source=p, target=fired[1], rule=fired[0], position=()))
    for i, c in enumerate(proof_children(p)):
        for s in step(c):
            out.append(ReductionStep(source=p, target=replace_child(p, i, s.target),
                                     rule=s.rule, position=(i,) + s.position))
    return out


def reducts(p: ProofTerm) -> List[ProofTerm]:
    """一步归约结果（去重，保持顺序）"""
    seen: List[ProofTerm] = []
    for s in step(p):
        if s.target not in seen:
            seen.append(s.target)
    return seen


def is_normal(p: ProofTerm) -> bool:
    if root_step(p) is not None:
        return False
    return all(is_normal(c) for c in proof_children(p))


def redn(p: ProofTerm, n: int) -> FrozenSet[ProofTerm]:
    """恰好 n 步可达的项集合"""
    frontier: Set[ProofTerm] = {p}
    for _ in range(n):
        nxt: Set[ProofTerm] = set()
        for q in frontier:
            nxt.update(reducts(q))
        frontier = nxt
        if not frontier:
            break
    return frozenset(frontier)


def reachable(p: ProofTerm, depth: int) -> Tuple[FrozenSet[ProofTerm], bool]:
    """≤ depth 步可达集合；第二个值表示可达图已被完全探索"""
    seen: Set[ProofTerm] = {p}
    frontier = [p]
    for _ in range(depth):
        nxt = []
        for q in frontier:
            for r in reducts(q):
                if r not in seen:
                    seen.add(r)
                    nxt.append(r)
        frontier = nxt
        if not frontier:
            return frozenset(seen), True
    complete = all(r in seen for q in frontier for r in reducts(q))
    return frozenset(seen), complete


# ==================== 强正规化 ====================

class SnVerdict(BaseModel):
    """强正规化判定结果"""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    status: str = Field(description="StronglyNormalizing / CycleFound / BoundExceeded")
    longest: Optional[int] = Field(default=None, description="最长归约路径长度")
    bound: int
    cycle: Tuple[Any, ...] = Field(default_factory=tuple, description="环上的项")

    @property
    def is_sn(self) -> bool:
        return self.status == "StronglyNormalizing"

    def __str__(self) -> str:
        if self.status == "StronglyNormalizing":
            return f"StronglyNormalizing {self.longest}"
        if self.status == "CycleFound":
            return f"CycleFound (length {len(self.cycle)})"
        return f"BoundExceeded {self.bound}"


class _CycleFound(Exception):
    def __init__(self, cycle):
        self.cycle = cycle


class _Exceeded(Exception):
    pass


def sn_check(p: ProofTerm, bound: int) -> SnVerdict:
    """穷举归约图：记忆化已完成结点，按路径检测环"""
    if bound < 1:
        raise ValueError("bound must be >= 1")
    longest: Dict[ProofTerm, int] = {}
    path: List[ProofTerm] = []
    on_path: Set[ProofTerm] = set()

    def visit(t: ProofTerm, depth: int) -> int:
        if t in longest:
            if depth + longest[t] > bound:
                raise _Exceeded()
            return longest[t]
        if t in on_path:
            raise _CycleFound(tuple(path[path.index(t):]))
        succ = reducts(t)
        if succ and depth >= bound:
            raise _Exceeded()
        path.append(t)
        on_path.add(t)
        best = 0
        for s in succ:
            best = max(best, 1 + visit(s, depth + 1))
        on_path.discard(t)
        path.pop()
        longest[t] = best
        return best

    try:
        m = visit(p, 0)
    except _CycleFound as e:
        dbg(f"[sn] cycle of length {len(e.cycle)}")
        return SnVerdict(status="CycleFound", bound=bound, cycle=e.cycle)
    except _Exceeded:
        dbg(f"[sn] bound {bound} exceeded")
        return SnVerdict(status="BoundExceeded", bound=bound)
    return SnVerdict(status="StronglyNormalizing", longest=m, bound=bound)


# ==================== 正规化轨迹 ====================

class NormalizationTrace(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    steps: List[ReductionStep] = Field(default_factory=list)
    result: Any = None
    normal: bool = False


def _outermost_step(p: ProofTerm) -> Optional[ReductionStep]:
    fired = root_step(p)
    if fired is not None:
        return ReductionStep(source=p, target=fired[1], rule=fired[0], position=())
    for i, c in enumerate(proof_children(p)):
        s = _outermost_step(c)
        if s is not None:
            return ReductionStep(source=p, target=replace_child(p, i, s.target),
                                 rule=s.rule, position=(i,) + s.position)
    return None


def normalize(p: ProofTerm, limit: int = 100) -> NormalizationTrace:
    """最左最外策略归约，最多 limit 步"""
    trace = NormalizationTrace(result=p)
    current = p
    for _ in range(limit):
        s = _outermost_step(current)
        if s is None:
            trace.normal = True
            break
        trace.steps.append(s)
        current = s.target
    else:
        trace.normal = _outermost_step(current) is None
    trace.result = current
    return trace


# ==================== 枚举 ====================

ALL_CONSTRUCTORS = ("var", "top", "lam", "app", "pair", "fst", "snd", "inl", "inr",
                    "case", "bote", "tlam", "tapp", "wit", "exelim")


def omega() -> ProofTerm:
    """Ω = (λα.αα)(λα.αα)"""
    delta = Lam("a", App(Axiom("a"), Axiom("a")))
    return App(delta, delta)


def enumerate_proofs(max_size: int, proof_vars: Sequence[str] = ("a", "b"),
                     constructors: Sequence[str] = ALL_CONSTRUCTORS,
                     terms: Sequence[Term] = (), term_binders: Sequence[Var] = ()) -> Iterator[ProofTerm]:
    """按大小穷举证明项（大小 1..max_size）；terms 用于 tapp/wit，term_binders 用于 tlam/exelim"""
    cons = set(constructors)
    by_size: Dict[int, List[ProofTerm]] = {}

    def split(total: int, parts: int) -> Iterator[Tuple[int, ...]]:
        if parts == 1:
            if total >= 1:
                yield (total,)
            return
        for first in range(1, total - parts + 2):
            for rest in split(total - first, parts - 1):
                yield (first,) + rest

    def build(n: int) -> List[ProofTerm]:
        out: List[ProofTerm] = []
        if n == 1:
            if "var" in cons:
                out.extend(Axiom(v) for v in proof_vars)
            if "top" in cons:
                out.append(TOP_I)
            return out
        for sub in by_size.get(n - 1, []):
            if "lam" in cons:
                out.extend(Lam(v, sub) for v in proof_vars)
            for tag, ctor in (("fst", Fst), ("snd", Snd), ("inl", InjL), ("inr", InjR), ("bote", BotE)):
                if tag in cons:
                    out.append(ctor(sub))
            if "tlam" in cons:
                out.extend(TLam(x, sub) for x in term_binders)
            if "tapp" in cons:
                out.extend(TApp(sub, t) for t in terms)
            if "wit" in cons:
                out.extend(Witness(t, sub) for t in terms)
        for a, b in split(n - 1, 2):
            for l, r in product(by_size.get(a, []), by_size.get(b, [])):
                if "app" in cons:
                    out.append(App(l, r))
                if "pair" in cons:
                    out.append(Pair(l, r))
                if "exelim" in cons:
                    out.extend(ExElim(l, x, v, r) for x in term_binders for v in proof_vars)
        if "case" in cons:
            for a, b, c in split(n - 1, 3):
                for s, l, r in product(by_size.get(a, []), by_size.get(b, []), by_size.get(c, [])):
                    out.extend(Case(s, lv, l, rv, r) for lv in proof_vars for rv in proof_vars)
        return out

    for n in range(1, max_size + 1):
        by_size[n] = build(n)
        yield from by_size[n]
