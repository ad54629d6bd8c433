"""
括号文本格式 - 基于 pyparsing 的 S 表达式读入器、公式/理论/证明文件的解析与打印

文件格式：
- 理论：(theory (sort i) (fun f (i) i) (pred P (i)) (rule term L R) (rule prop A F) (axiom F))
- 公式：(and A B) (or A B) (imp A B) (not A) (forall (x s) A) (exists (x s) A) top bot (P t…)
- 证明：(proof (context (a F) …) (goal F) (term P))
- `;` 开始行注释，编码 UTF-8
规则与目标中的自由变量不写类型，由函数/谓词的参数位置推断；也可写成 x:sort 显式标注。
"""

from dataclasses import dataclass
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import pyparsing as pp

from kernel_syntax import (And, Atom, BOT, Bot, Exists, Forall, FunApp, Formula, Implies, KernelSyntaxError, Or,
                           RewriteRule, Sequent, Signature, SortCheckError, TOP, Term, Theory, Top, Var, free_vars,
                           subst_formula, subst_term, term_vars)
from proof_terms import (App, Axiom, BotE, Case, ExElim, Fst, InjL, InjR, Lam, Pair, ProofTerm, Snd, TApp, TLam,
                         TopI, Witness, TOP_I)


pp.ParserElement.enable_packrat()


# ==================== S 表达式读入 ====================

class Sym(str):
    """带位置的符号"""
    line: int = 0
    col: int = 0


@dataclass
class SList:
    """带位置的列表"""
    items: List[Union["SList", Sym]]
    line: int = 0
    col: int = 0

    def __iter__(self):
        return iter(self.items)

    def __len__(self):
        return len(self.items)

    def __getitem__(self, i):
        return self.items[i]

    def head(self) -> Optional[str]:
        if self.items and isinstance(self.items[0], Sym):
            return str(self.items[0])
        return None


SExpr = Union[SList, Sym]


def _make_sym(s, loc, toks):
    sym = Sym(toks[0])
    sym.line, sym.col = pp.lineno(loc, s), pp.col(loc, s)
    return sym


def _make_list(s, loc, toks):
    return SList(list(toks[0]), pp.lineno(loc, s), pp.col(loc, s))


_SYMBOL = pp.Regex(r"[^\s();]+").set_parse_action(_make_sym)
_SEXPR = pp.Forward()
_LIST = pp.Group(pp.Suppress("(") + pp.ZeroOrMore(_SEXPR) + pp.Suppress(")")).set_parse_action(_make_list)
_SEXPR <<= _SYMBOL | _LIST
_COMMENT = pp.Regex(r";[^\n]*")
_LIST.ignore(_COMMENT)
_DOCUMENT = pp.ZeroOrMore(_SEXPR) + pp.StringEnd()
_DOCUMENT.ignore(_COMMENT)


def read_sexprs(text: str) -> List[SExpr]:
    try:
        return list(_DOCUMENT.parse_string(text, parse_all=True))
    except pp.ParseBaseException as e:
        raise KernelSyntaxError(f"malformed s-expression: {e.msg}", e.lineno, e.col)


def read_sexpr(text: str) -> SExpr:
    forms = read_sexprs(text)
    if len(forms) != 1:
        raise KernelSyntaxError(f"expected exactly one form, found {len(forms)}", 1, 1)
    return forms[0]


def _where(node: SExpr) -> Tuple[int, int]:
    return getattr(node, "line", 0), getattr(node, "col", 0)


def syntax_error(node: SExpr, message: str) -> KernelSyntaxError:
    line, col = _where(node)
    return KernelSyntaxError(message, line, col)


def expect_list(node: SExpr, head: Optional[str] = None, min_len: int = 0) -> SList:
    if not isinstance(node, SList):
        raise syntax_error(node, f"expected a list{f' ({head} …)' if head else ''}, found {node}")
    if head is not None and node.head() != head:
        raise syntax_error(node, f"expected ({head} …), found ({node.head()} …)")
    if len(node) < min_len:
        raise syntax_error(node, f"form ({node.head()} …) is too short")
    return node


def expect_sym(node: SExpr) -> str:
    if not isinstance(node, Sym):
        raise syntax_error(node, "expected a symbol")
    return str(node)


def expect_int(node: SExpr) -> int:
    text = expect_sym(node)
    if not text.isdigit():
        raise syntax_error(node, f"expected a natural number, found {text}")
    return int(text)


# ==================== 项与公式 ====================

UNSORTED = "?"

CONNECTIVES = {"and": And, "or": Or, "imp": Implies}


def _split_annotation(name: str) -> Tuple[str, Optional[str]]:
    if ":" in name and not name.startswith(":"):
        base, sort = name.split(":", 1)
        return base, sort
    return name, None


def parse_term(node: SExpr, signature: Signature, scope: Mapping[str, Var]) -> Term:
    if isinstance(node, Sym):
        name, sort = _split_annotation(str(node))
        if sort is not None:
            return Var(name, sort)
        if name in scope:
            return scope[name]
        if name in signature.functions and not signature.functions[name][0]:
            return FunApp(name, ())
        if name in signature.functions:
            raise syntax_error(node, f"function {name} used without arguments")
        return Var(name, UNSORTED)
    node = expect_list(node, min_len=1)
    head = node.head()
    if head is None:
        raise syntax_error(node, "term application needs a function symbol")
    if head not in signature.functions:
        raise SortCheckError(f"{node.line}:{node.col}: unknown function symbol {head}", head)
    return FunApp(head, tuple(parse_term(a, signature, scope) for a in node.items[1:]))


def parse_formula(node: SExpr, signature: Signature, scope: Optional[Mapping[str, Var]] = None) -> Formula:
    """解析公式；未标注类型的自由变量暂记为 '?'，由 infer_sorts 补全"""
    scope = dict(scope or {})
    if isinstance(node, Sym):
        text = str(node)
        if text == "top":
            return TOP
        if text == "bot":
            return BOT
        if text in signature.predicates and not signature.predicates[text]:
            return Atom(text, ())
        raise syntax_error(node, f"unknown formula {text}")
    node = expect_list(node, min_len=1)
    head = node.head()
    if head in CONNECTIVES:
        if len(node) < 3:
            raise syntax_error(node, f"({head} …) needs two operands")
        parts = [parse_formula(x, signature, scope) for x in node.items[1:]]
        out = parts[-1]
        for p in reversed(parts[:-1]):
            out = CONNECTIVES[head](p, out)
        return out
    if head == "not":
        if len(node) != 2:
            raise syntax_error(node, "(not A) takes one operand")
        return Implies(parse_formula(node[1], signature, scope), BOT)
    if head in ("forall", "exists"):
        if len(node) != 3:
            raise syntax_error(node, f"({head} (x sort) A) expected")
        binder = expect_list(node[1], min_len=2)
        if len(binder) != 2:
            raise syntax_error(binder, "binder must be (name sort)")
        v = Var(expect_sym(binder[0]), expect_sym(binder[1]))
        inner = dict(scope)
        inner[v.name] = v
        body = parse_formula(node[2], signature, inner)
        return Forall(v, body) if head == "forall" else Exists(v, body)
    if head in ("top", "bot") and len(node) == 1:
        return TOP if head == "top" else BOT
    if head is None:
        raise syntax_error(node, "atom needs a predicate symbol")
    if head not in signature.predicates:
        raise SortCheckError(f"{node.line}:{node.col}: unknown predicate symbol {head}", head)
    return Atom(head, tuple(parse_term(a, signature, scope) for a in node.items[1:]))


# ---------- 类型推断 ----------

def _collect_term(t: Term, expected: Optional[str], signature: Signature, found: Dict[str, str]) -> None:
    if isinstance(t, Var):
        if t.sort != UNSORTED or expected is None:
            return
        prev = found.get(t.name)
        if prev is not None and prev != expected:
            raise SortCheckError(f"variable {t.name} used at sorts {prev} and {expected}", t.name)
        found[t.name] = expected
        return
    args, _ = signature.functions[t.symbol]
    if len(args) != len(t.args):
        raise SortCheckError(f"{t.symbol} expects {len(args)} arguments, got {len(t.args)}", t.symbol)
    for s, a in zip(args, t.args):
        _collect_term(a, s, signature, found)


def _collect(a: Union[Formula, Term], signature: Signature, found: Dict[str, str], expected: Optional[str] = None) -> None:
    if isinstance(a, (Var, FunApp)):
        _collect_term(a, expected, signature, found)
    elif isinstance(a, Atom):
        args = signature.predicates[a.pred]
        if len(args) != len(a.args):
            raise SortCheckError(f"{a.pred} expects {len(args)} arguments, got {len(a.args)}", a.pred)
        for s, t in zip(args, a.args):
            _collect_term(t, s, signature, found)
    elif isinstance(a, (And, Or, Implies)):
        _collect(a.left, signature, found)
        _collect(a.right, signature, found)
    elif isinstance(a, (Forall, Exists)):
        _collect(a.body, signature, found)


def _placeholders(a: Union[Formula, Term]) -> List[Var]:
    if isinstance(a, (Var, FunApp)):
        vs = term_vars(a)
    else:
        vs = free_vars(a)
    return [v for v in vs if v.sort == UNSORTED]


def infer_sorts(items: Sequence[Union[Formula, Term]], signature: Signature,
                known: Optional[Mapping[str, str]] = None) -> List[Union[Formula, Term]]:
    """联合推断一组公式/项中未标注变量的类型；推不出或冲突时报 SortCheckError"""
    found: Dict[str, str] = dict(known or {})
    for it in items:
        _collect(it, signature, found)
    sigma: Dict[Var, Term] = {}
    for it in items:
        for v in _placeholders(it):
            if v.name not in found:
                raise SortCheckError(f"unsorted variable {v.name}", v.name)
            sigma[v] = Var(v.name, found[v.name])
    out: List[Union[Formula, Term]] = []
    for it in items:
        if isinstance(it, (Var, FunApp)):
            out.append(subst_term(it, sigma))
        else:
            out.append(subst_formula(it, sigma))
    return out


def read_formula(text: str, signature: Signature) -> Formula:
    """从文本读入单个公式并做类型检查"""
    f = infer_sorts([parse_formula(read_sexpr(text), signature)], signature)[0]
    signature.check_formula(f)
    return f


def read_term(text: str, signature: Signature, scope: Optional[Mapping[str, Var]] = None) -> Term:
    t = parse_term(read_sexpr(text), signature, scope or {})
    if _placeholders(t):
        if isinstance(t, Var):
            raise SortCheckError(f"unsorted variable {t.name}", t.name)
        t = infer_sorts([t], signature)[0]
    signature.sort_of(t)
    return t


# ==================== 打印 ====================

def print_term(t: Term) -> str:
    if isinstance(t, Var):
        return t.name
    if not t.args:
        return t.symbol
    return "(" + " ".join([t.symbol] + [print_term(a) for a in t.args]) + ")"


def print_formula(a: Formula) -> str:
    if isinstance(a, Top):
        return "top"
    if isinstance(a, Bot):
        return "bot"
    if isinstance(a, Atom):
        return "(" + " ".join([a.pred] + [print_term(t) for t in a.args]) + ")"
    if isinstance(a, Implies) and isinstance(a.right, Bot):
        return f"(not {print_formula(a.left)})"
    if isinstance(a, And):
        return f"(and {print_formula(a.left)} {print_formula(a.right)})"
    if isinstance(a, Or):
        return f"(or {print_formula(a.left)} {print_formula(a.right)})"
    if isinstance(a, Implies):
        return f"(imp {print_formula(a.left)} {print_formula(a.right)})"
    q = "forall" if isinstance(a, Forall) else "exists"
    return f"({q} ({a.var.name} {a.var.sort}) {print_formula(a.body)})"


def print_signature_decls(signature: Signature) -> List[str]:
    lines = [f"(sort {s})" for s in signature.sorts]
    for f, (args, res) in signature.functions.items():
        lines.append(f"(fun {f} ({' '.join(args)}) {res})")
    for p, args in signature.predicates.items():
        lines.append(f"(pred {p} ({' '.join(args)}))")
    return lines


def print_rule(r: RewriteRule) -> str:
    if r.kind == "term":
        return f"(rule term {print_term(r.lhs)} {print_term(r.rhs)})"
    return f"(rule prop {print_formula(r.lhs)} {print_formula(r.rhs)})"


def print_theory(theory: Theory) -> str:
    lines = ["(theory"]
    lines += ["  " + d for d in print_signature_decls(theory.signature)]
    lines += ["  " + print_rule(r) for r in theory.rules]
    lines += [f"  (axiom {print_formula(ax)})" for ax in theory.axioms]
    return "\n".join(lines) + ")\n"


# ==================== 理论文件 ====================

def _sort_list(node: SExpr) -> Tuple[str, ...]:
    return tuple(expect_sym(x) for x in expect_list(node))


def parse_signature_decls(forms: Iterable[SExpr]) -> Tuple[Signature, List[SList]]:
    """读出 sort/fun/pred 声明，返回签名与剩余表单"""
    sorts: List[str] = []
    functions: Dict[str, Tuple[Tuple[str, ...], str]] = {}
    predicates: Dict[str, Tuple[str, ...]] = {}
    rest: List[SList] = []
    for form in forms:
        form = expect_list(form, min_len=1)
        head = form.head()
        if head == "sort":
            if len(form) != 2:
                raise syntax_error(form, "(sort <name>) expected")
            name = expect_sym(form[1])
            if name in sorts:
                raise SortCheckError(f"{form.line}:{form.col}: duplicate sort {name}", name)
            sorts.append(name)
        elif head == "fun":
            if len(form) != 4:
                raise syntax_error(form, "(fun <name> (<argsorts>) <ressort>) expected")
            functions[expect_sym(form[1])] = (_sort_list(form[2]), expect_sym(form[3]))
        elif head == "pred":
            if len(form) != 3:
                raise syntax_error(form, "(pred <name> (<argsorts>)) expected")
            predicates[expect_sym(form[1])] = _sort_list(form[2])
        else:
            rest.append(form)
    signature = Signature(tuple(sorts), functions, predicates)
    signature.validate()
    return signature, rest


def parse_rule(form: SList, signature: Signature) -> RewriteRule:
    if len(form) != 4:
        raise syntax_error(form, "(rule term|prop <lhs> <rhs>) expected")
    kind = expect_sym(form[1])
    if kind == "term":
        lhs = parse_term(form[2], signature, {})
        rhs = parse_term(form[3], signature, {})
    elif kind == "prop":
        lhs = parse_formula(form[2], signature)
        rhs = parse_formula(form[3], signature)
        if not isinstance(lhs, Atom):
            raise syntax_error(form[2], "proposition rule must rewrite an atom")
    else:
        raise syntax_error(form[1], f"rule kind must be term or prop, found {kind}")
    if isinstance(lhs, Var):
        raise SortCheckError(f"{form.line}:{form.col}: rule left-hand side is a bare variable {lhs.name}", lhs.name)
    try:
        lhs, rhs = infer_sorts([lhs, rhs], signature)
    except SortCheckError as e:
        raise SortCheckError(f"{form.line}:{form.col}: {e}", e.symbol)
    rule = RewriteRule(kind, lhs, rhs)
    rule.validate(signature)
    return rule


def parse_theory(text: str) -> Theory:
    """解析 (theory …) 文档"""
    doc = expect_list(read_sexpr(text), "theory")
    signature, rest = parse_signature_decls(doc.items[1:])
    rules: List[RewriteRule] = []
    axioms: List[Formula] = []
    for form in rest:
        head = form.head()
        if head == "rule":
            rules.append(parse_rule(form, signature))
        elif head == "axiom":
            if len(form) != 2:
                raise syntax_error(form, "(axiom <formula>) expected")
            ax = parse_formula(form[1], signature)
            if _placeholders(ax):
                names = sorted(v.name for v in _placeholders(ax))
                raise SortCheckError(f"{form.line}:{form.col}: axiom is not closed, free: {names}", names[0])
            axioms.append(ax)
        else:
            raise syntax_error(form, f"unknown theory declaration ({head} …)")
    return Theory(signature, tuple(rules), tuple(axioms)).validate()


# ==================== 证明项 ====================

def print_proof(p: ProofTerm) -> str:
    if isinstance(p, Axiom):
        return f"(var {p.name})"
    if isinstance(p, TopI):
        return "topI"
    if isinstance(p, Lam):
        return f"(lam {p.var} {print_proof(p.body)})"
    if isinstance(p, App):
        return f"(app {print_proof(p.fun)} {print_proof(p.arg)})"
    if isinstance(p, Pair):
        return f"(pair {print_proof(p.left)} {print_proof(p.right)})"
    if isinstance(p, (Fst, Snd, InjL, InjR, BotE)):
        tag = {Fst: "fst", Snd: "snd", InjL: "inl", InjR: "inr", BotE: "botE"}[type(p)]
        return f"({tag} {print_proof(p.arg)})"
    if isinstance(p, Case):
        return (f"(case {print_proof(p.arg)} ({p.left_var} {print_proof(p.left)}) "
                f"({p.right_var} {print_proof(p.right)}))")
    if isinstance(p, TLam):
        return f"(tlam ({p.var.name} {p.var.sort}) {print_proof(p.body)})"
    if isinstance(p, TApp):
        return f"(tapp {print_proof(p.fun)} {print_term(p.term)})"
    if isinstance(p, Witness):
        return f"(wit {print_term(p.term)} {print_proof(p.body)})"
    if isinstance(p, ExElim):
        return (f"(exelim {print_proof(p.arg)} (({p.term_var.name} {p.term_var.sort}) "
                f"{p.proof_var} {print_proof(p.body)}))")
    raise TypeError(f"not a proof-term: {p!r}")


class _ProofReader:
    """证明项读入：项变量类型来自约束子、相继式的自由变量，或签名唯一的类型"""

    UNARY = {"fst": Fst, "snd": Snd, "inl": InjL, "inr": InjR, "botE": BotE}

    def __init__(self, signature: Signature, free: Mapping[str, Var]):
        self.signature = signature
        self.free = dict(free)

    def default_sort(self, node: SExpr, name: str) -> str:
        if len(self.signature.sorts) == 1:
            return self.signature.sorts[0]
        raise SortCheckError(f"{_where(node)[0]}:{_where(node)[1]}: cannot determine the sort of term variable "
                             f"{name}; write ({name} <sort>)", name)

    def binder(self, node: SExpr) -> Var:
        if isinstance(node, Sym):
            name, sort = _split_annotation(str(node))
            return Var(name, sort or self.default_sort(node, name))
        b = expect_list(node)
        if len(b) != 2:
            raise syntax_error(node, "term binder must be x or (x sort)")
        return Var(expect_sym(b[0]), expect_sym(b[1]))

    def term(self, node: SExpr, tscope: Mapping[str, Var]) -> Term:
        scope = dict(self.free)
        scope.update(tscope)
        t = parse_term(node, self.signature, scope)
        pending = [v for v in term_vars(t) if v.sort == UNSORTED]
        if pending:
            sigma = {v: Var(v.name, self.default_sort(node, v.name)) for v in pending}
            t = subst_term(t, sigma)
        self.signature.sort_of(t)
        return t

    def read(self, node: SExpr, tscope: Mapping[str, Var]) -> ProofTerm:
        if isinstance(node, Sym):
            text = str(node)
            if text == "topI":
                return TOP_I
            return Axiom(text)
        node = expect_list(node, min_len=1)
        head = node.head()
        n = len(node)
        if head == "var" and n == 2:
            return Axiom(expect_sym(node[1]))
        if head == "lam" and n == 3:
            return Lam(expect_sym(node[1]), self.read(node[2], tscope))
        if head in ("app", "pair") and n == 3:
            ctor = App if head == "app" else Pair
            return ctor(self.read(node[1], tscope), self.read(node[2], tscope))
        if head in self.UNARY and n == 2:
            return self.UNARY[head](self.read(node[1], tscope))
        if head == "topI" and n == 1:
            return TOP_I
        if head == "case" and n == 4:
            left = expect_list(node[2])
            right = expect_list(node[3])
            if len(left) != 2 or len(right) != 2:
                raise syntax_error(node, "(case p (a q) (b r)) expected")
            return Case(self.read(node[1], tscope), expect_sym(left[0]), self.read(left[1], tscope),
                        expect_sym(right[0]), self.read(right[1], tscope))
        if head == "tlam" and n == 3:
            v = self.binder(node[1])
            inner = dict(tscope)
            inner[v.name] = v
            return TLam(v, self.read(node[2], inner))
        if head == "tapp" and n == 3:
            return TApp(self.read(node[1], tscope), self.term(node[2], tscope))
        if head == "wit" and n == 3:
            return Witness(self.term(node[1], tscope), self.read(node[2], tscope))
        if head == "exelim" and n == 3:
            b = expect_list(node[2])
            if len(b) != 3:
                raise syntax_error(node, "(exelim p (x a q)) expected")
            v = self.binder(b[0])
            inner = dict(tscope)
            inner[v.name] = v
            return ExElim(self.read(node[1], tscope), v, expect_sym(b[1]), self.read(b[2], inner))
        raise syntax_error(node, f"unknown proof-term form ({head} …)")


def read_proof_term(node_or_text: Union[str, SExpr], signature: Optional[Signature] = None,
                    free: Optional[Mapping[str, Var]] = None) -> ProofTerm:
    node = read_sexpr(node_or_text) if isinstance(node_or_text, str) else node_or_text
    return _ProofReader(signature or Signature(), free or {}).read(node, {})


@dataclass(frozen=True)
class ProofDocument:
    sequent: Sequent
    term: ProofTerm


def parse_proof(text: str, signature: Signature) -> ProofDocument:
    """解析 (proof (context …) (goal …) (term …))"""
    doc = expect_list(read_sexpr(text), "proof")
    context: List[Tuple[str, Formula]] = []
    goal: Optional[Formula] = None
    term_node: Optional[SExpr] = None
    for form in doc.items[1:]:
        form = expect_list(form, min_len=1)
        head = form.head()
        if head == "context":
            for entry in form.items[1:]:
                entry = expect_list(entry)
                if len(entry) != 2:
                    raise syntax_error(entry, "context entry must be (<name> <formula>)")
                context.append((expect_sym(entry[0]), parse_formula(entry[1], signature)))
        elif head == "goal":
            if len(form) != 2:
                raise syntax_error(form, "(goal <formula>) expected")
            goal = parse_formula(form[1], signature)
        elif head == "term":
            if len(form) != 2:
                raise syntax_error(form, "(term <proofterm>) expected")
            term_node = form[1]
        else:
            raise syntax_error(form, f"unknown proof section ({head} …)")
    if goal is None or term_node is None:
        raise syntax_error(doc, "proof document needs (goal …) and (term …)")
    formulas = infer_sorts([f for _, f in context] + [goal], signature)
    hyps = tuple((name, f) for (name, _), f in zip(context, formulas[:-1]))
    sequent = Sequent(hyps, formulas[-1]).validate(signature)
    free = {v.name: v for v in sequent.free_vars()}
    term = _ProofReader(signature, free).read(term_node, {})
    return ProofDocument(sequent, term)


def print_sequent(seq: Sequent) -> str:
    hyps = ", ".join(f"{n}: {print_formula(f)}" for n, f in seq.hypotheses)
    return f"{hyps} ⊢ {print_formula(seq.conclusion)}" if hyps else f"⊢ {print_formula(seq.conclusion)}"


def print_proof_document(doc: ProofDocument) -> str:
    ctx = " ".join(f"({n} {print_formula(f)})" for n, f in doc.sequent.hypotheses)
    return (f"(proof (context {ctx}) (goal {print_formula(doc.sequent.conclusion)}) "
            f"(term {print_proof(doc.term)}))\n")
