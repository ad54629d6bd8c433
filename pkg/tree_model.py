"""
标准树模型 - S 公式的三值求值器（桌面规模检验用）

核心原则：
1. 联结词按经典逻辑求值；原子 f(t̄) = 1 交给 PR 求值器
2. Red / Redn / Red* / SN 不走 PR 定义，直接用归约引擎精确计算（SN 受 sn-bound 限制）
3. 量词依次尝试：Red* 守卫定向求值（可达集精确）、通用实例（不透明树 + 命题重言式检查）、有界枚举
4. 结果只有在与界无关时才是 True/False；有界枚举得不到结论时返回 Unknown 并注明撞到的界
"""

import os
from functools import lru_cache
from itertools import islice, product
from typing import Dict, Iterator, List, Mapping, Optional, Sequence, Set, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field

from kernel_syntax import (dbg, And, Atom, Bot, Exists, Forall, Formula, FunApp, Implies, Or, SortCheckError, Term, Top,
                           UnregisteredSymbolError, Var, canonical, enumerate_terms, forall_many, free_vars, BINARY,
                           QUANTIFIERS)
from primrec import PrRegistry, StuckEvaluation
from proof_terms import ProofTerm, enumerate_proofs, reachable, reducts, redn, sn_check, var_name
from s_theory import EQ
from builtin_relations import shared_relations
from tree_codec import (Codebook, EMPTY_CODEBOOK, ONE, STANDARD_LANG, Tree, TreeLang, ZERO, as_int, encode_proof,
                        encode_term, encode_var, enumerate_trees, numeral, tree_to_term, try_decode_proof)


DEFAULT_TREE_BOUND = int(os.getenv("KERNEL_TREE_BOUND", "6"))
DEFAULT_SN_BOUND = int(os.getenv("KERNEL_SN_BOUND", "50"))
DEFAULT_MAX_WITNESSES = int(os.getenv("KERNEL_MAX_WITNESSES", "20000"))

OPAQUE_PREFIX = "?"
MAX_GENERIC_ATOMS = 14

# 证明池只用不涉及项的构造子
POOL_CONSTRUCTORS = ("var", "top", "lam", "app", "pair", "fst", "snd", "inl", "inr")


class EvalBounds(BaseModel):
    tree_bound: int = Field(default=DEFAULT_TREE_BOUND, ge=1, description="枚举见证的树大小上限")
    sn_bound: int = Field(default=DEFAULT_SN_BOUND, ge=1, description="SN 检查与可达搜索的步数上限")
    max_witnesses: int = Field(default=DEFAULT_MAX_WITNESSES, ge=1, description="每个量词最多枚举的见证数")


class EvalVerdict(BaseModel):
    """True / False / Unknown；Unknown 时 reason 说明撞到哪个界"""
    model_config = ConfigDict(frozen=True)

    value: str = Field(description="True / False / Unknown")
    reason: str = ""

    @property
    def definite(self) -> bool:
        return self.value != "Unknown"

    def __str__(self) -> str:
        if self.value == "Unknown" and self.reason:
            return f"Unknown ({self.reason})"
        return self.value


class _Opaque(Exception):
    """求值触及不透明树"""
    pass


# ==================== 三值逻辑 ====================

Tri = Optional[bool]


def _and(a: Tri, b: Tri) -> Tri:
    if a is False or b is False:
        return False
    if a is None or b is None:
        return None
    return True


def _or(a: Tri, b: Tri) -> Tri:
    if a is True or b is True:
        return True
    if a is None or b is None:
        return None
    return False


def _imp(a: Tri, b: Tri) -> Tri:
    return _or(None if a is None else not a, b)


# ==================== 树工具 ====================

def opaque(name: str) -> Tree:
    return Tree(f"{OPAQUE_PREFIX}{name}")


def has_opaque(t: Tree) -> bool:
    return t.ctor.startswith(OPAQUE_PREFIX) or any(has_opaque(c) for c in t.children)


def tree_size(t: Tree) -> int:
    return 1 + sum(tree_size(c) for c in t.children)


# ==================== 见证池 ====================

# (符号, 参数位置) → 池的种类
POSITION_KINDS: Dict[Tuple[str, int], str] = {
    ("SN", 0): "proof", ("Red*", 0): "proof", ("Red*", 1): "proof", ("Proof", 0): "proof", ("Elim", 0): "proof",
    ("Red", 0): "proof", ("Red", 1): "proof", ("Redn", 0): "proof", ("Redn", 2): "proof",
    ("PSubst", 0): "proof", ("PSubst", 2): "proof", ("TSubst", 0): "proof",
    ("Nat", 0): "numeral", ("ProofVar", 0): "numeral", ("PSubst", 1): "numeral", ("Redn", 1): "numeral",
    ("Term", 0): "term", ("AnyTerm", 0): "term", ("TSubst", 2): "term",
    ("TermVar", 0): "termvar", ("TSubst", 1): "termvar",
}


def _kinds_in_term(t: Term, v: Var, out: List[str]) -> None:
    if isinstance(t, FunApp):
        for i, a in enumerate(t.args):
            if a == v and (t.symbol, i) in POSITION_KINDS:
                out.append(POSITION_KINDS[(t.symbol, i)])
            _kinds_in_term(a, v, out)


def pool_kind(v: Var, a: Formula) -> str:
    """按变量第一次出现的参数位置选择见证池"""
    out: List[str] = []

    def walk(f: Formula) -> None:
        if isinstance(f, Atom):
            for i, t in enumerate(f.args):
                if t == v and (f.pred, i) in POSITION_KINDS:
                    out.append(POSITION_KINDS[(f.pred, i)])
                _kinds_in_term(t, v, out)
        elif isinstance(f, BINARY):
            walk(f.left)
            walk(f.right)
        elif isinstance(f, QUANTIFIERS) and f.var != v:
            walk(f.body)

    walk(a)
    return out[0] if out else "tree"


@lru_cache(maxsize=32)
def _proof_pool(bound: int, codebook: Codebook) -> Tuple[Tree, ...]:
    out = []
    for p in enumerate_proofs(bound, ("a",), POOL_CONSTRUCTORS):
        t = encode_proof(p, codebook)
        if tree_size(t) <= bound:
            out.append(t)
    return tuple(sorted(set(out), key=lambda t: (tree_size(t), repr(t))))


def _term_vars_pool(codebook: Codebook) -> List[Term]:
    return [Var(var_name(i), s) for s in codebook.sorts for i in range(2)]


@lru_cache(maxsize=32)
def _term_pool(bound: int, codebook: Codebook) -> Tuple[Tree, ...]:
    """T 的良类型项（项大小 ≤ max(1, bound // 2)）的编码"""
    terms = enumerate_terms(codebook.signature(), max(1, bound // 2), _term_vars_pool(codebook))
    return tuple(encode_term(t, codebook) for t in terms)


# ==================== 求值器 ====================

Env = Mapping[Var, Tree]


class TreeModel:
    """在标准树模型里求值 S 公式"""

    def __init__(self, registry: Optional[PrRegistry] = None, codebook: Codebook = EMPTY_CODEBOOK,
                 bounds: Optional[EvalBounds] = None, lang: TreeLang = STANDARD_LANG):
        self.codebook = codebook
        self.registry = registry if registry is not None else shared_relations(codebook)
        self.bounds = bounds or EvalBounds()
        self.lang = lang
        self.reason = ""
        self._sn: Dict[Tree, Tri] = {}
        self._reach: Dict[Tree, Tuple[Set[Tree], bool]] = {}
        self._decoded: Dict[Tree, Optional[ProofTerm]] = {}
        self._opaque_count = 0

    # ---------- 未知原因 ----------

    def _unknown(self, reason: str) -> None:
        if not self.reason:
            self.reason = reason

    # ---------- 证明项 ----------

    def _proof(self, t: Tree) -> Optional[ProofTerm]:
        if has_opaque(t):
            raise _Opaque()
        if t not in self._decoded:
            self._decoded[t] = try_decode_proof(t, self.codebook)
        return self._decoded[t]

    def sn(self, t: Tree) -> Tri:
        p = self._proof(t)
        if p is None:
            return False
        if t not in self._sn:
            verdict = sn_check(p, self.bounds.sn_bound)
            self._sn[t] = True if verdict.is_sn else (False if verdict.status == "CycleFound" else None)
        if self._sn[t] is None:
            self._unknown(f"sn-bound {self.bounds.sn_bound}")
        return self._sn[t]

    def reach(self, t: Tree) -> Tuple[Set[Tree], bool]:
        """Red* 意义下的可达集（编码后的树）及是否完整"""
        p = self._proof(t)
        if p is None:
            return set(), True
        if t not in self._reach:
            seen, complete = reachable(p, self.bounds.sn_bound)
            self._reach[t] = ({encode_proof(q, self.codebook) for q in seen}, complete)
        return self._reach[t]

    def red_star(self, x: Tree, y: Tree) -> Tri:
        seen, complete = self.reach(x)
        if y in seen:
            return True
        if has_opaque(y):
            raise _Opaque()
        if complete:
            return False
        self._unknown(f"sn-bound {self.bounds.sn_bound}")
        return None

    # ---------- 项 ----------

    @staticmethod
    def _member(target: Tree, targets: Set[Tree]) -> Tree:
        """目标含不透明部分且不在集合中时无法判定"""
        if target in targets:
            return ONE
        if has_opaque(target):
            raise _Opaque()
        return ZERO

    def apply(self, symbol: str, args: Sequence[Tree]) -> Tree:
        if symbol == "Red":
            p = self._proof(args[0])
            if p is None:
                return ZERO
            return self._member(args[1], {encode_proof(q, self.codebook) for q in reducts(p)})
        if symbol == "Redn":
            p = self._proof(args[0])
            if p is None:
                return ZERO
            if has_opaque(args[1]):
                raise _Opaque()
            n = as_int(args[1])
            if n is None:
                return ZERO
            return self._member(args[2], {encode_proof(q, self.codebook) for q in redn(p, n)})
        if self.lang.has(symbol):
            if self.lang.arity(symbol) != len(args):
                raise SortCheckError(f"{symbol} expects {self.lang.arity(symbol)} arguments, got {len(args)}", symbol)
            return Tree(symbol, tuple(args))
        if symbol not in self.registry:
            raise UnregisteredSymbolError(symbol)
        try:
            return self.registry.eval(symbol, args)
        except StuckEvaluation:
            raise _Opaque()

    def term(self, t: Term, env: Env) -> Tree:
        if isinstance(t, Var):
            if t not in env:
                raise SortCheckError(f"free variable {t.name} in evaluated formula", t.name)
            return env[t]
        return self.apply(t.symbol, [self.term(a, env) for a in t.args])

    def partial(self, t: Term, env: Env) -> Tuple[Term, Optional[Tree]]:
        """尽量求值；触及不透明树或约束变量时保留符号形式"""
        if isinstance(t, Var):
            if t in env:
                return tree_to_term(env[t]), env[t]
            return t, None
        parts = [self.partial(a, env) for a in t.args]
        if all(tree is not None for _, tree in parts):
            try:
                value = self.apply(t.symbol, [tree for _, tree in parts])
                return tree_to_term(value), value
            except _Opaque:
                pass
        return FunApp(t.symbol, tuple(term for term, _ in parts)), None

    def partial_formula(self, a: Formula, env: Env) -> Formula:
        if isinstance(a, Atom):
            return Atom(a.pred, tuple(self.partial(t, env)[0] for t in a.args))
        if isinstance(a, BINARY):
            return type(a)(self.partial_formula(a.left, env), self.partial_formula(a.right, env))
        if isinstance(a, QUANTIFIERS):
            inner = {k: v for k, v in env.items() if k != a.var}
            return type(a)(a.var, self.partial_formula(a.body, inner))
        return a

    # ---------- 原子 ----------

    def atom(self, a: Atom, env: Env) -> Tri:
        args = [self.term(t, env) for t in a.args]
        if a.pred == EQ:
            x, y = args
            if x == y:
                return True
            if has_opaque(x) or has_opaque(y):
                raise _Opaque()
            return False
        if a.pred == "SN":
            return self.sn(args[0])
        if a.pred == "Red*":
            return self.red_star(args[0], args[1])
        raise UnregisteredSymbolError(a.pred)

    # ---------- 公式 ----------

    def value(self, a: Formula, env: Env) -> Tri:
        if isinstance(a, Top):
            return True
        if isinstance(a, Bot):
            return False
        if isinstance(a, Atom):
            return self.atom(a, env)
        if isinstance(a, And):
            left = self.value(a.left, env)
            if left is False:
                return False
            return _and(left, self.value(a.right, env))
        if isinstance(a, Or):
            left = self.value(a.left, env)
            if left is True:
                return True
            return _or(left, self.value(a.right, env))
        if isinstance(a, Implies):
            left = self.value(a.left, env)
            if left is False:
                return True
            return _imp(left, self.value(a.right, env))
        return self.quantifier(a, env)

    def quantifier(self, a: Formula, env: Env, exhaustive: bool = True) -> Tri:
        block, body = _block(a)
        universal = isinstance(a, Forall)
        guided = self.guided(block, body, env, universal)
        if guided != "skip":
            return guided
        generic = self.generic(block, body, env)
        if generic is not None:
            return generic
        if not exhaustive:
            return None
        return self.enumerate(block, body, env, universal)

    # ---------- Red* 守卫 ----------

    def guided(self, block: List[Var], body: Formula, env: Env, universal: bool) -> Union[Tri, str]:
        """∀v̄ (Red*(c, pattern) ∧ … → B) 与 ∃v̄ (Red*(c, pattern) ∧ …) 按 c 的可达集展开"""
        if universal:
            if not isinstance(body, Implies):
                return "skip"
            guard, rest_hyp = _split_guard(body.left)
            concl = body.right
        else:
            guard, rest_hyp = _split_guard(body)
            concl = None
        if guard is None:
            return "skip"
        kind, source, pattern = guard
        names = set(block)
        if free_vars(Atom("_", (source,))) & names:
            return "skip"
        try:
            src = self.term(source, env)
            candidates, complete = self._targets(kind, src)
        except _Opaque:
            return "skip"
        remaining = [v for v in block if v not in free_vars(Atom("_", (pattern,)))]
        if universal:
            inner = concl if rest_hyp is None else Implies(rest_hyp, concl)
        else:
            inner = TOP_FORMULA if rest_hyp is None else rest_hyp
        base = {k: v for k, v in env.items() if k not in names}
        result: Tri = universal
        for target in sorted(candidates, key=repr):
            binding = self._match(pattern, target, dict(base), names)
            if binding is None:
                continue
            if remaining:
                q = forall_many(remaining, inner) if universal else _exists_many(remaining, inner)
                v = self.value(q, binding)
            else:
                v = self.value(inner, binding)
            if universal:
                result = _and(result, v)
                if result is False:
                    return False
            else:
                result = _or(result, v)
                if result is True:
                    return True
        if not complete and result is (True if universal else False):
            self._unknown(f"sn-bound {self.bounds.sn_bound}")
            return None
        return result

    def _targets(self, kind: str, src: Tree) -> Tuple[Set[Tree], bool]:
        if kind == "Red*":
            return self.reach(src)
        p = self._proof(src)
        if p is None:
            return set(), True
        return {encode_proof(q, self.codebook) for q in reducts(p)}, True

    def _match(self, pattern: Term, tree: Tree, env: Dict[Var, Tree], names: Set[Var]) -> Optional[Dict[Var, Tree]]:
        if isinstance(pattern, Var):
            if pattern in names and pattern not in env:
                env[pattern] = tree
                return env
            return env if env.get(pattern) == tree else None
        if self.lang.has(pattern.symbol):
            if tree.ctor != pattern.symbol or len(tree.children) != len(pattern.args):
                return None
            for p, c in zip(pattern.args, tree.children):
                if self._match(p, c, env, names) is None:
                    return None
            return env
        try:
            return env if self.term(pattern, env) == tree else None
        except (_Opaque, SortCheckError):
            return None

    # ---------- 通用实例 ----------

    def generic(self, block: List[Var], body: Formula, env: Env) -> Tri:
        """量词变量取不透明树；把无法求值的子公式当作命题变量，做重言式 / 矛盾式检查"""
        inner = dict(env)
        for v in block:
            self._opaque_count += 1
            inner[v] = opaque(f"{v.name}#{self._opaque_count}")
        keys: Dict[Formula, int] = {}
        skeleton = self._skeleton(body, inner, keys)
        if len(keys) > MAX_GENERIC_ATOMS:
            return None
        values = {_eval_skeleton(skeleton, bits) for bits in product((False, True), repeat=len(keys))}
        if values == {True}:
            return True
        if values == {False}:
            return False
        return None

    def _skeleton(self, a: Formula, env: Env, keys: Dict[Formula, int]):
        if isinstance(a, (Top, Bot)):
            return isinstance(a, Top)
        if isinstance(a, BINARY):
            tag = {And: "and", Or: "or", Implies: "imp"}[type(a)]
            return (tag, self._skeleton(a.left, env, keys), self._skeleton(a.right, env, keys))
        saved = self.reason
        try:
            v = self.atom(a, env) if isinstance(a, Atom) else self.quantifier(a, env, exhaustive=False)
        except _Opaque:
            v = None
        if v is not None:
            return v
        self.reason = saved
        key = canonical(self.partial_formula(a, env))
        if key not in keys:
            keys[key] = len(keys)
        return keys[key]

    # ---------- 有界枚举 ----------

    def pool(self, kind: str) -> Iterator[Tree]:
        bound = self.bounds.tree_bound
        if kind == "proof":
            return iter(_proof_pool(bound, self.codebook))
        if kind == "numeral":
            return (numeral(i) for i in range(bound))
        if kind == "term":
            return iter(_term_pool(bound, self.codebook))
        if kind == "termvar":
            return (encode_var(v, self.codebook) for v in _term_vars_pool(self.codebook))
        return enumerate_trees(self.lang, bound)

    def enumerate(self, block: List[Var], body: Formula, env: Env, universal: bool) -> Tri:
        v, rest = block[0], block[1:]
        inner_formula = (forall_many(rest, body) if universal else _exists_many(rest, body)) if rest else body
        kind = pool_kind(v, body)
        cap = self.bounds.max_witnesses
        count = 0
        for w in islice(self.pool(kind), cap):
            count += 1
            inner = dict(env)
            inner[v] = w
            try:
                x = self.value(inner_formula, inner)
            except _Opaque:
                x = None
            if universal and x is False:
                return False
            if not universal and x is True:
                return True
        dbg(f"[tree_model] {count} {kind} witness(es) for {v.name}, no decision")
        reason = f"witness cap {cap}" if count >= cap else f"tree-bound {self.bounds.tree_bound}"
        self._unknown(reason)
        return None

    # ---------- 入口 ----------

    def evaluate(self, a: Formula, env: Optional[Env] = None) -> EvalVerdict:
        env = dict(env or {})
        missing = [v for v in free_vars(a) if v not in env]
        if missing:
            raise SortCheckError(f"formula is not closed, free: {sorted(v.name for v in missing)}", missing[0].name)
        self.reason = ""
        try:
            v = self.value(a, env)
        except _Opaque:
            v = None
            self._unknown("opaque subterm")
        if v is None:
            return EvalVerdict(value="Unknown", reason=self.reason or "bounded search")
        return EvalVerdict(value="True" if v else "False")


TOP_FORMULA: Formula = Top()


def _exists_many(variables: Sequence[Var], body: Formula) -> Formula:
    for v in reversed(list(variables)):
        body = Exists(v, body)
    return body


def _block(a: Formula) -> Tuple[List[Var], Formula]:
    """收集同种量词的连续前缀"""
    kind = type(a)
    block = []
    while isinstance(a, kind):
        block.append(a.var)
        a = a.body
    return block, a


def _guard_of(a: Formula) -> Optional[Tuple[str, Term, Term]]:
    if isinstance(a, Atom) and a.pred == "Red*":
        return "Red*", a.args[0], a.args[1]
    if (isinstance(a, Atom) and a.pred == EQ and isinstance(a.args[0], FunApp) and a.args[0].symbol == "Red"
            and a.args[1] == tree_to_term(ONE)):
        return "Red", a.args[0].args[0], a.args[0].args[1]
    return None


def _split_guard(a: Formula) -> Tuple[Optional[Tuple[str, Term, Term]], Optional[Formula]]:
    """守卫在最左合取项；返回 (守卫, 其余合取项)"""
    g = _guard_of(a)
    if g is not None:
        return g, None
    if isinstance(a, And):
        g = _guard_of(a.left)
        if g is not None:
            return g, a.right
    return None, None


def _eval_skeleton(s, bits: Sequence[bool]) -> bool:
    if isinstance(s, bool):
        return s
    if isinstance(s, int):
        return bits[s]
    tag, left, right = s
    x, y = _eval_skeleton(left, bits), _eval_skeleton(right, bits)
    if tag == "and":
        return x and y
    if tag == "or":
        return x or y
    return (not x) or y


def eval_formula(a: Formula, bounds: Optional[EvalBounds] = None, registry: Optional[PrRegistry] = None,
                 codebook: Codebook = EMPTY_CODEBOOK, env: Optional[Env] = None) -> EvalVerdict:
    """在标准树模型里求值闭公式 a"""
    return TreeModel(registry, codebook, bounds).evaluate(a, env)


def verify_witness(relation: str, trees: Sequence[Tree], registry: Optional[PrRegistry] = None) -> bool:
    """检查候选树是否满足 PR 关系 R(t̄) = 1"""
    registry = registry if registry is not None else shared_relations(EMPTY_CODEBOOK)
    return registry.holds(relation, trees)
