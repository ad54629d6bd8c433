"""
树语言 ℒ 与语法编码 ⌜·⌝

编码方案（比纯 0/s 数码更"富"的构造子集合）：
- 自然数：0, s
- 列表：Nil, Cons
- 类型 Sortc(n)，项变量 TVar(n, Sortc(k))，函数应用 FunApp(n, args列表)
- 证明项：每个证明项构造子一个树构造子（Axiom … ExistsE）
- 代换环境：PBind(n, 证明), TBind(TVar, 项)
证明变量与项变量的编号来自 proof_terms.var_index。
"""

from dataclasses import dataclass, field
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

from kernel_syntax import FunApp, MalformedEncodingError, Signature, Term, Var
from proof_terms import (App, Axiom, BotE, Case, ExElim, Fst, InjL, InjR, Lam, Pair, ProofTerm, Snd, TApp,
                         TLam, TopI, Witness, TOP_I, var_index, var_name)


@dataclass(frozen=True)
class Tree:
    ctor: str
    children: Tuple["Tree", ...] = ()
    _hash: int = field(default=0, init=False, repr=False, compare=False)

    def __post_init__(self):
        # 求值器按 (函数名, 参数树) 做记忆化，哈希缓存在结点上
        object.__setattr__(self, "_hash", hash((self.ctor, self.children)))

    def __hash__(self) -> int:
        return self._hash

    def size(self) -> int:
        return 1 + sum(c.size() for c in self.children)

    def height(self) -> int:
        return 1 + max((c.height() for c in self.children), default=0)


ZERO = Tree("0")
NIL = Tree("Nil")


def numeral(n: int) -> Tree:
    t = ZERO
    for _ in range(n):
        t = Tree("s", (t,))
    return t


ONE = numeral(1)


def as_int(t: Tree) -> Optional[int]:
    """数码转整数；不是数码时返回 None"""
    n = 0
    while t.ctor == "s" and len(t.children) == 1:
        n += 1
        t = t.children[0]
    if t.ctor == "0" and not t.children:
        return n
    return None


def tree_list(items: Sequence[Tree]) -> Tree:
    out = NIL
    for item in reversed(items):
        out = Tree("Cons", (item, out))
    return out


def list_items(t: Tree) -> Optional[List[Tree]]:
    items = []
    while t.ctor == "Cons" and len(t.children) == 2:
        items.append(t.children[0])
        t = t.children[1]
    if t.ctor == "Nil":
        return items
    return None


# ==================== 树语言 ====================

@dataclass(frozen=True)
class TreeLang:
    """有限构造子集合，必须含 0（元数 0）与 s（元数 1）"""
    constructors: Tuple[Tuple[str, int], ...]

    def __post_init__(self):
        names = [n for n, _ in self.constructors]
        if len(set(names)) != len(names):
            raise ValueError("constructor names must be unique")
        table = dict(self.constructors)
        if table.get("0") != 0 or table.get("s") != 1:
            raise ValueError("tree language must provide 0 (arity 0) and s (arity 1)")
        if any(k < 0 for k in table.values()):
            raise ValueError("arities must be >= 0")

    @property
    def names(self) -> List[str]:
        return [n for n, _ in self.constructors]

    def arity(self, name: str) -> int:
        for n, k in self.constructors:
            if n == name:
                return k
        raise KeyError(name)

    def has(self, name: str) -> bool:
        return any(n == name for n, _ in self.constructors)

    def check(self, t: Tree) -> None:
        if not self.has(t.ctor):
            raise MalformedEncodingError(f"unknown constructor {t.ctor}", t)
        if self.arity(t.ctor) != len(t.children):
            raise MalformedEncodingError(
                f"constructor {t.ctor} expects {self.arity(t.ctor)} children, got {len(t.children)}", t)
        for c in t.children:
            self.check(c)


PROOF_CONSTRUCTORS: Tuple[Tuple[str, int], ...] = (
    ("Axiom", 1), ("ImpI", 2), ("ImpE", 2), ("AndI", 2), ("AndE1", 1), ("AndE2", 1),
    ("OrI1", 1), ("OrI2", 1), ("OrE", 5), ("TopI", 0), ("BotE", 1),
    ("ForallI", 2), ("ForallE", 2), ("ExistsI", 2), ("ExistsE", 4),
)

STANDARD_LANG = TreeLang((
    ("0", 0), ("s", 1), ("Nil", 0), ("Cons", 2),
    ("Sortc", 1), ("TVar", 2), ("FunApp", 2), ("PBind", 2), ("TBind", 2),
) + PROOF_CONSTRUCTORS)

ELIMINATION_CONSTRUCTORS = ("ImpE", "AndE1", "AndE2", "OrE", "BotE", "ForallE", "ExistsE")

# 证明项构造子在树中的哪些位置是子证明（其余位置是变量或项）
PROOF_POSITIONS: Dict[str, Tuple[int, ...]] = {
    "Axiom": (), "ImpI": (1,), "ImpE": (0, 1), "AndI": (0, 1), "AndE1": (0,), "AndE2": (0,),
    "OrI1": (0,), "OrI2": (0,), "OrE": (0, 2, 4), "TopI": (), "BotE": (0,),
    "ForallI": (1,), "ForallE": (0,), "ExistsI": (1,), "ExistsE": (0, 3),
}


def enumerate_trees(lang: TreeLang, max_size: int) -> Iterator[Tree]:
    """按大小穷举语言中的树"""
    by_size: Dict[int, List[Tree]] = {}

    def splits(total: int, parts: int) -> Iterator[Tuple[int, ...]]:
        if parts == 0:
            if total == 0:
                yield ()
            return
        for first in range(1, total - parts + 2):
            for rest in splits(total - first, parts - 1):
                yield (first,) + rest

    def combos(sizes: Tuple[int, ...]) -> Iterator[Tuple[Tree, ...]]:
        if not sizes:
            yield ()
            return
        for head in by_size.get(sizes[0], []):
            for tail in combos(sizes[1:]):
                yield (head,) + tail

    for n in range(1, max_size + 1):
        level: List[Tree] = []
        for name, k in lang.constructors:
            for sizes in splits(n - 1, k):
                for kids in combos(sizes):
                    level.append(Tree(name, kids))
        by_size[n] = level
        yield from level


# ==================== 编码本 ====================

@dataclass(frozen=True)
class Codebook:
    """类型与函数符号的编号表（编码项时需要）"""
    sorts: Tuple[str, ...] = ()
    functions: Tuple[str, ...] = ()
    ranks: Tuple[Tuple[Tuple[str, ...], str], ...] = ()     # 与 functions 一一对应

    @classmethod
    def from_signature(cls, signature: Signature) -> "Codebook":
        names = tuple(signature.functions)
        ranks = tuple((tuple(signature.functions[f][0]), signature.functions[f][1]) for f in names)
        return cls(tuple(signature.sorts), names, ranks)

    def rank(self, symbol: str) -> Tuple[Tuple[str, ...], str]:
        return self.ranks[self.functions.index(symbol)]

    def signature(self) -> Signature:
        return Signature(self.sorts, dict(zip(self.functions, self.ranks)))

    def sort_code(self, sort: str) -> Tree:
        if sort not in self.sorts:
            raise MalformedEncodingError(f"sort {sort} has no code")
        return Tree("Sortc", (numeral(self.sorts.index(sort)),))

    def sort_name(self, t: Tree) -> str:
        n = as_int(t.children[0]) if t.ctor == "Sortc" and len(t.children) == 1 else None
        if n is None or n >= len(self.sorts):
            raise MalformedEncodingError("not a sort code", t)
        return self.sorts[n]

    def function_code(self, symbol: str) -> Tree:
        if symbol not in self.functions:
            raise MalformedEncodingError(f"function symbol {symbol} has no code")
        return numeral(self.functions.index(symbol))

    def function_name(self, t: Tree) -> str:
        n = as_int(t)
        if n is None or n >= len(self.functions):
            raise MalformedEncodingError("not a function code", t)
        return self.functions[n]


EMPTY_CODEBOOK = Codebook()


# ==================== 编码 ====================

def encode_var(v: Var, codebook: Codebook) -> Tree:
    return Tree("TVar", (numeral(var_index(v.name)), codebook.sort_code(v.sort)))


def encode_term(t: Term, codebook: Codebook = EMPTY_CODEBOOK) -> Tree:
    if isinstance(t, Var):
        return encode_var(t, codebook)
    return Tree("FunApp", (codebook.function_code(t.symbol),
                           tree_list([encode_term(a, codebook) for a in t.args])))


def encode_proof_var(name: str) -> Tree:
    return numeral(var_index(name))


def encode_proof(p: ProofTerm, codebook: Codebook = EMPTY_CODEBOOK) -> Tree:
    """⌜π⌝，单射"""
    enc = lambda q: encode_proof(q, codebook)
    if isinstance(p, Axiom):
        return Tree("Axiom", (encode_proof_var(p.name),))
    if isinstance(p, Lam):
        return Tree("ImpI", (encode_proof_var(p.var), enc(p.body)))
    if isinstance(p, App):
        return Tree("ImpE", (enc(p.fun), enc(p.arg)))
    if isinstance(p, Pair):
        return Tree("AndI", (enc(p.left), enc(p.right)))
    if isinstance(p, Fst):
        return Tree("AndE1", (enc(p.arg),))
    if isinstance(p, Snd):
        return Tree("AndE2", (enc(p.arg),))
    if isinstance(p, InjL):
        return Tree("OrI1", (enc(p.arg),))
    if isinstance(p, InjR):
        return Tree("OrI2", (enc(p.arg),))
    if isinstance(p, Case):
        return Tree("OrE", (enc(p.arg), encode_proof_var(p.left_var), enc(p.left),
                            encode_proof_var(p.right_var), enc(p.right)))
    if isinstance(p, TopI):
        return Tree("TopI")
    if isinstance(p, BotE):
        return Tree("BotE", (enc(p.arg),))
    if isinstance(p, TLam):
        return Tree("ForallI", (encode_var(p.var, codebook), enc(p.body)))
    if isinstance(p, TApp):
        return Tree("ForallE", (enc(p.fun), encode_term(p.term, codebook)))
    if isinstance(p, Witness):
        return Tree("ExistsI", (encode_term(p.term, codebook), enc(p.body)))
    if isinstance(p, ExElim):
        return Tree("ExistsE", (enc(p.arg), encode_var(p.term_var, codebook),
                                encode_proof_var(p.proof_var), enc(p.body)))
    raise TypeError(f"not a proof-term: {p!r}")


# ==================== 解码 ====================

def _expect(t: Tree, arity: int) -> None:
    if len(t.children) != arity:
        raise MalformedEncodingError(f"{t.ctor} expects {arity} children, got {len(t.children)}", t)


def decode_proof_var(t: Tree) -> str:
    n = as_int(t)
    if n is None:
        raise MalformedEncodingError("proof-variable index is not a numeral", t)
    return var_name(n)


def decode_var(t: Tree, codebook: Codebook) -> Var:
    if t.ctor != "TVar":
        raise MalformedEncodingError("not a term variable", t)
    _expect(t, 2)
    n = as_int(t.children[0])
    if n is None:
        raise MalformedEncodingError("term-variable index is not a numeral", t)
    return Var(var_name(n), codebook.sort_name(t.children[1]))


def decode_term(t: Tree, codebook: Codebook = EMPTY_CODEBOOK) -> Term:
    if t.ctor == "TVar":
        return decode_var(t, codebook)
    if t.ctor == "FunApp":
        _expect(t, 2)
        args = list_items(t.children[1])
        if args is None:
            raise MalformedEncodingError("function arguments are not a list", t)
        return FunApp(codebook.function_name(t.children[0]), tuple(decode_term(a, codebook) for a in args))
    raise MalformedEncodingError("not a term encoding", t)


def decode_proof(t: Tree, codebook: Codebook = EMPTY_CODEBOOK) -> ProofTerm:
    dec = lambda q: decode_proof(q, codebook)
    c = t.ctor
    if c not in PROOF_POSITIONS:
        raise MalformedEncodingError(f"{c} is not a proof-term constructor", t)
    _expect(t, dict(PROOF_CONSTRUCTORS)[c])
    k = t.children
    if c == "Axiom":
        return Axiom(decode_proof_var(k[0]))
    if c == "ImpI":
        return Lam(decode_proof_var(k[0]), dec(k[1]))
    if c == "ImpE":
        return App(dec(k[0]), dec(k[1]))
    if c == "AndI":
        return Pair(dec(k[0]), dec(k[1]))
    if c == "AndE1":
        return Fst(dec(k[0]))
    if c == "AndE2":
        return Snd(dec(k[0]))
    if c == "OrI1":
        return InjL(dec(k[0]))
    if c == "OrI2":
        return InjR(dec(k[0]))
    if c == "OrE":
        return Case(dec(k[0]), decode_proof_var(k[1]), dec(k[2]), decode_proof_var(k[3]), dec(k[4]))
    if c == "TopI":
        return TOP_I
    if c == "BotE":
        return BotE(dec(k[0]))
    if c == "ForallI":
        return TLam(decode_var(k[0], codebook), dec(k[1]))
    if c == "ForallE":
        return TApp(dec(k[0]), decode_term(k[1], codebook))
    if c == "ExistsI":
        return Witness(decode_term(k[0], codebook), dec(k[1]))
    return ExElim(dec(k[0]), decode_var(k[1], codebook), decode_proof_var(k[2]), dec(k[3]))


def try_decode_proof(t: Tree, codebook: Codebook = EMPTY_CODEBOOK) -> Optional[ProofTerm]:
    try:
        return decode_proof(t, codebook)
    except MalformedEncodingError:
        return None


# ==================== 树与 S 中的项 ====================

TREE_SORT = "tree"


def tree_to_term(t: Tree) -> FunApp:
    return FunApp(t.ctor, tuple(tree_to_term(c) for c in t.children))


def term_to_tree(t: Term) -> Optional[Tree]:
    """闭的构造子项转成树；含变量或非构造子符号时返回 None"""
    if isinstance(t, Var) or not STANDARD_LANG.has(t.symbol):
        return None
    kids = []
    for a in t.args:
        k = term_to_tree(a)
        if k is None:
            return None
        kids.append(k)
    if STANDARD_LANG.arity(t.symbol) != len(kids):
        return None
    return Tree(t.symbol, tuple(kids))
