"""
树上的原始递归定义语言与求值器

核心原则：
1. 每个定义固定一个递归参数，每个构造子一条子句；`_` 子句补齐未列出的构造子
2. 递归调用只能作用在递归参数的直接子树上（结构递归），其余参数可以变化
3. 只能调用先前注册的函数，不允许互递归
4. (if c a b) 是 (call If c a b) 的惰性写法，值相同
5. 递归参数的构造子不在语言里（如 tree_model 的不透明常元）时抛 StuckEvaluation
"""

from dataclasses import dataclass
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

from kernel_syntax import (dbg, FunApp, KernelError, MalformedEncodingError, PrimRecDefinitionError, Term,
                           UnregisteredSymbolError, Var)
from sexpr_format import SExpr, Sym, expect_int, expect_list, expect_sym, read_sexprs, syntax_error
from tree_codec import ONE, STANDARD_LANG, Tree, TreeLang, ZERO, numeral


DEFAULT_CLAUSE = "_"


class StuckEvaluation(KernelError):
    """递归参数不是语言中的构造子，求值无法继续"""
    def __init__(self, function: str, tree: Tree):
        self.function = function
        self.tree = tree
        super().__init__(f"{function} is stuck on constructor {tree.ctor}")


# ==================== 表达式 ====================

@dataclass(frozen=True)
class ArgRef:
    index: int          # 1 起，含递归参数本身


@dataclass(frozen=True)
class ChildRef:
    index: int          # 递归参数的第 index 个子树


@dataclass(frozen=True)
class RecCall:
    child: int
    args: Tuple["Expr", ...] = ()   # 非递归参数的新值；为空表示不变


@dataclass(frozen=True)
class Call:
    fn: str
    args: Tuple["Expr", ...] = ()


@dataclass(frozen=True)
class Build:
    ctor: str
    args: Tuple["Expr", ...] = ()


@dataclass(frozen=True)
class Cond:
    test: "Expr"
    then: "Expr"
    orelse: "Expr"


Expr = Union[ArgRef, ChildRef, RecCall, Call, Build, Cond]


def lit(t: Tree) -> Expr:
    """常量树作为表达式"""
    return Build(t.ctor, tuple(lit(c) for c in t.children))


# ==================== 定义 ====================

@dataclass(frozen=True)
class PrimRecDef:
    name: str
    arity: int
    rec_arg: int
    clauses: Tuple[Tuple[str, Expr], ...]

    def clause_for(self, ctor: str) -> Optional[Expr]:
        default = None
        for c, e in self.clauses:
            if c == ctor:
                return e
            if c == DEFAULT_CLAUSE:
                default = e
        return default

    def expanded(self, lang: TreeLang) -> "PrimRecDef":
        """把 `_` 子句展开成每个未列出构造子各一条"""
        explicit = [(c, e) for c, e in self.clauses if c != DEFAULT_CLAUSE]
        default = self.clause_for(DEFAULT_CLAUSE) if any(c == DEFAULT_CLAUSE for c, _ in self.clauses) else None
        if default is None:
            return PrimRecDef(self.name, self.arity, self.rec_arg, tuple(explicit))
        listed = {c for c, _ in explicit}
        out = list(explicit) + [(c, default) for c in lang.names if c not in listed]
        order = {c: i for i, c in enumerate(lang.names)}
        out.sort(key=lambda ce: order[ce[0]])
        return PrimRecDef(self.name, self.arity, self.rec_arg, tuple(out))

    def validate(self, lang: TreeLang, known: Mapping[str, int]) -> None:
        """known：已注册函数名 → 元数"""
        def fail(msg: str):
            raise PrimRecDefinitionError(f"{self.name}: {msg}")

        if self.name in known:
            fail("already defined")
        if lang.has(self.name):
            fail("name clashes with a constructor")
        if self.arity < 1 or not 1 <= self.rec_arg <= self.arity:
            fail(f"recursion argument {self.rec_arg} out of range for arity {self.arity}")
        seen = set()
        for ctor, _ in self.clauses:
            if ctor in seen:
                fail(f"duplicate clause for {ctor}")
            seen.add(ctor)
            if ctor != DEFAULT_CLAUSE and not lang.has(ctor):
                fail(f"clause for unknown constructor {ctor}")
        missing = [c for c in lang.names if c not in seen]
        if missing and DEFAULT_CLAUSE not in seen:
            fail(f"no clause for constructor(s) {', '.join(missing)}")

        def walk(e: Expr, width: Optional[int]) -> None:
            if isinstance(e, ArgRef):
                if not 1 <= e.index <= self.arity:
                    fail(f"(arg {e.index}) out of range")
            elif isinstance(e, ChildRef):
                if width is None:
                    fail("(child …) is not allowed in the default clause")
                if not 1 <= e.index <= width:
                    fail(f"(child {e.index}) out of range for a constructor of arity {width}")
            elif isinstance(e, RecCall):
                if width is None:
                    fail("(rec …) is not allowed in the default clause")
                if not 1 <= e.child <= width:
                    fail(f"(rec {e.child}) is not an immediate child")
                if e.args and len(e.args) != self.arity - 1:
                    fail(f"(rec {e.child} …) needs {self.arity - 1} parameter(s)")
                for a in e.args:
                    walk(a, width)
            elif isinstance(e, Call):
                if e.fn == self.name:
                    fail("self-calls must use (rec …)")
                if e.fn not in known:
                    raise UnregisteredSymbolError(e.fn)
                if known[e.fn] != len(e.args):
                    fail(f"{e.fn} expects {known[e.fn]} argument(s), got {len(e.args)}")
                for a in e.args:
                    walk(a, width)
            elif isinstance(e, Build):
                if not lang.has(e.ctor):
                    fail(f"unknown constructor {e.ctor}")
                if lang.arity(e.ctor) != len(e.args):
                    fail(f"constructor {e.ctor} expects {lang.arity(e.ctor)} argument(s)")
                for a in e.args:
                    walk(a, width)
            elif isinstance(e, Cond):
                if "If" not in known:
                    fail("(if …) needs If to be defined first")
                for a in (e.test, e.then, e.orelse):
                    walk(a, width)
            else:
                fail(f"not an expression: {e!r}")

        for ctor, e in self.clauses:
            walk(e, None if ctor == DEFAULT_CLAUSE else lang.arity(ctor))


# ==================== 注册表与求值 ====================

class PrRegistry:
    """按定义顺序注册的 PR 函数集合，附带记忆化求值"""

    def __init__(self, lang: TreeLang = STANDARD_LANG):
        self.lang = lang
        self.defs: Dict[str, PrimRecDef] = {}
        self._memo: Dict[Tuple[str, Tuple[Tree, ...]], Tree] = {}
        self._arity = dict(lang.constructors)

    def register(self, d: PrimRecDef) -> PrimRecDef:
        d.validate(self.lang, {n: x.arity for n, x in self.defs.items()})
        self.defs[d.name] = d
        dbg(f"[primrec] registered {d.name}/{d.arity}")
        return d

    def register_all(self, defs: Iterable[PrimRecDef]) -> "PrRegistry":
        for d in defs:
            self.register(d)
        return self

    def __contains__(self, name: str) -> bool:
        return name in self.defs

    def get(self, name: str) -> PrimRecDef:
        if name not in self.defs:
            raise UnregisteredSymbolError(name)
        return self.defs[name]

    @property
    def names(self) -> List[str]:
        return list(self.defs)

    def clear_cache(self) -> None:
        self._memo.clear()

    def eval(self, name: str, args: Sequence[Tree]) -> Tree:
        d = self.get(name)
        if len(args) != d.arity:
            raise PrimRecDefinitionError(f"{name} expects {d.arity} argument(s), got {len(args)}")
        return self._apply(d, tuple(args))

    def holds(self, name: str, args: Sequence[Tree]) -> bool:
        """关系 R(x̄) 记作 R(x̄) = 1"""
        return self.eval(name, args) == ONE

    def _apply(self, d: PrimRecDef, args: Tuple[Tree, ...]) -> Tree:
        key = (d.name, args)
        hit = self._memo.get(key)
        if hit is not None:
            return hit
        x = args[d.rec_arg - 1]
        if x.ctor not in self._arity:
            raise StuckEvaluation(d.name, x)
        if self._arity[x.ctor] != len(x.children):
            raise MalformedEncodingError(f"constructor {x.ctor} has the wrong number of children", x)
        expr = d.clause_for(x.ctor)
        value = self._expr(expr, d, args, x.children)
        self._memo[key] = value
        return value

    def _expr(self, e: Expr, d: PrimRecDef, args: Tuple[Tree, ...], children: Tuple[Tree, ...]) -> Tree:
        if isinstance(e, ArgRef):
            return args[e.index - 1]
        if isinstance(e, ChildRef):
            return children[e.index - 1]
        if isinstance(e, Build):
            return Tree(e.ctor, tuple(self._expr(a, d, args, children) for a in e.args))
        if isinstance(e, Cond):
            test = self._expr(e.test, d, args, children)
            if test.ctor not in self._arity:
                raise StuckEvaluation("If", test)
            branch = e.orelse if test == ZERO else e.then
            return self._expr(branch, d, args, children)
        if isinstance(e, Call):
            return self._apply(self.defs[e.fn], tuple(self._expr(a, d, args, children) for a in e.args))
        if isinstance(e, RecCall):
            new = list(args)
            if e.args:
                others = [self._expr(a, d, args, children) for a in e.args]
                slots = [i for i in range(d.arity) if i != d.rec_arg - 1]
                for i, v in zip(slots, others):
                    new[i] = v
            new[d.rec_arg - 1] = children[e.child - 1]
            return self._apply(d, tuple(new))
        raise TypeError(f"not an expression: {e!r}")


def eval_pr(f: Union[PrimRecDef, str], args: Sequence[Tree], registry: PrRegistry) -> Tree:
    """f(args)；f 可以是定义或已注册的名字"""
    name = f if isinstance(f, str) else f.name
    if not isinstance(f, str) and name not in registry:
        registry.register(f)
    return registry.eval(name, args)


# ==================== 定义在 S 中的方程 ====================

PARAM_PREFIX = "z"
CHILD_PREFIX = "y"


def expr_to_term(e: Expr, d: PrimRecDef, ctor: str, arity: int, sort: str) -> Term:
    """子句表达式翻译成 S 的项：参数 z1…zn，子树 y1…yk"""
    params = [Var(f"{PARAM_PREFIX}{j}", sort) for j in range(1, d.arity + 1)]
    kids = [Var(f"{CHILD_PREFIX}{i}", sort) for i in range(1, arity + 1)]
    pattern = FunApp(ctor, tuple(kids))

    def arg(j: int) -> Term:
        return pattern if j == d.rec_arg else params[j - 1]

    def go(x: Expr) -> Term:
        if isinstance(x, ArgRef):
            return arg(x.index)
        if isinstance(x, ChildRef):
            return kids[x.index - 1]
        if isinstance(x, Build):
            return FunApp(x.ctor, tuple(go(a) for a in x.args))
        if isinstance(x, Call):
            return FunApp(x.fn, tuple(go(a) for a in x.args))
        if isinstance(x, Cond):
            return FunApp("If", (go(x.test), go(x.then), go(x.orelse)))
        new = [arg(j) for j in range(1, d.arity + 1)]
        if x.args:
            slots = [i for i in range(d.arity) if i != d.rec_arg - 1]
            for i, a in zip(slots, x.args):
                new[i] = go(a)
        new[d.rec_arg - 1] = kids[x.child - 1]
        return FunApp(d.name, tuple(new))

    return go(e)


def clause_equations(d: PrimRecDef, lang: TreeLang, sort: str) -> List[Tuple[Tuple[Var, ...], Term, Term]]:
    """每条（展开后的）子句一条方程 (变量, 左边, 右边)"""
    out = []
    for ctor, e in d.expanded(lang).clauses:
        k = lang.arity(ctor)
        params = [Var(f"{PARAM_PREFIX}{j}", sort) for j in range(1, d.arity + 1) if j != d.rec_arg]
        kids = [Var(f"{CHILD_PREFIX}{i}", sort) for i in range(1, k + 1)]
        lhs_args = []
        for j in range(1, d.arity + 1):
            lhs_args.append(FunApp(ctor, tuple(kids)) if j == d.rec_arg else Var(f"{PARAM_PREFIX}{j}", sort))
        lhs = FunApp(d.name, tuple(lhs_args))
        rhs = expr_to_term(e, d, ctor, k, sort)
        out.append((tuple(params + kids), lhs, rhs))
    return out


# ==================== prdef 文件 ====================

def _parse_expr(node: SExpr) -> Expr:
    if isinstance(node, Sym):
        text = str(node)
        if text.isdigit():
            return lit(numeral(int(text)))
        return Build(text, ())
    node = expect_list(node, min_len=1)
    head = node.head()
    rest = node.items[1:]
    if head == "arg":
        if len(rest) != 1:
            raise syntax_error(node, "(arg <j>) expected")
        return ArgRef(expect_int(rest[0]))
    if head == "child":
        if len(rest) != 1:
            raise syntax_error(node, "(child <i>) expected")
        return ChildRef(expect_int(rest[0]))
    if head == "rec":
        if not rest:
            raise syntax_error(node, "(rec <i> …) expected")
        return RecCall(expect_int(rest[0]), tuple(_parse_expr(a) for a in rest[1:]))
    if head == "call":
        if not rest:
            raise syntax_error(node, "(call <f> …) expected")
        return Call(expect_sym(rest[0]), tuple(_parse_expr(a) for a in rest[1:]))
    if head == "if":
        if len(rest) != 3:
            raise syntax_error(node, "(if <test> <then> <else>) expected")
        return Cond(*(_parse_expr(a) for a in rest))
    if head is None:
        raise syntax_error(node, "expression needs a head symbol")
    return Build(head, tuple(_parse_expr(a) for a in rest))


def parse_prdef(form: SExpr) -> PrimRecDef:
    """(prdef <name> <arity> (rec <argpos>) (clause <ctor> <expr>) …)"""
    form = expect_list(form, "prdef", min_len=4)
    name = expect_sym(form[1])
    arity = expect_int(form[2])
    rec = expect_list(form[3], "rec", min_len=2)
    clauses = []
    for c in form.items[4:]:
        c = expect_list(c, "clause")
        if len(c) != 3:
            raise syntax_error(c, "(clause <ctor> <expr>) expected")
        clauses.append((expect_sym(c[1]), _parse_expr(c[2])))
    return PrimRecDef(name, arity, expect_int(rec[1]), tuple(clauses))


def parse_prdefs(text: str) -> List[PrimRecDef]:
    return [parse_prdef(f) for f in read_sexprs(text)]


def print_expr(e: Expr) -> str:
    if isinstance(e, ArgRef):
        return f"(arg {e.index})"
    if isinstance(e, ChildRef):
        return f"(child {e.index})"
    if isinstance(e, RecCall):
        return "(" + " ".join(["rec", str(e.child)] + [print_expr(a) for a in e.args]) + ")"
    if isinstance(e, Call):
        return "(" + " ".join(["call", e.fn] + [print_expr(a) for a in e.args]) + ")"
    if isinstance(e, Cond):
        return f"(if {print_expr(e.test)} {print_expr(e.then)} {print_expr(e.orelse)})"
    if not e.args:
        return e.ctor
    return "(" + " ".join([e.ctor] + [print_expr(a) for a in e.args]) + ")"


def print_prdef(d: PrimRecDef) -> str:
    clauses = " ".join(f"(clause {c} {print_expr(e)})" for c, e in d.clauses)
    return f"(prdef {d.name} {d.arity} (rec {d.rec_arg}) {clauses})"
