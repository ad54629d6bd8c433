"""
内核命令行 - 把各模块串成批处理命令

核心原则：
1. 每个命令只读文件、写报告，不保留调用之间的状态
2. 退出码：0 接受/True/通过，1 拒绝/False/失败，2 Unknown/超界，3 输入错误（带位置的诊断）
3. 目标理论 U 缺省为 S：内置 PR 关系 + 可选 --prdefs 文件 + Red*/SN 缩写谓词

用法示例：
  python run_kernel.py sn samples/omega.proof --bound 10
  python run_kernel.py check samples/arith.theory samples/plus_zero.proof
  python run_kernel.py realize top
"""

import argparse
import os
import random
import sys
from typing import List, Optional, Sequence

from dotenv import load_dotenv

# 内核模块在导入时读取环境变量默认值，.env 必须先载入
load_dotenv()

from pydantic import BaseModel, Field, model_validator

from kernel_syntax import KernelError, Signature, Theory
from premodel_lab import Bounds, Lab, check_candidate_axioms, check_premodel_congruence, parse_premodel, proof_corpus
from primrec import PrRegistry, parse_prdefs
from proof_checker import DEFAULT_FUEL, check
from proof_terms import normalize, sn_check
from realizer import RealizabilitySpec, emit_realizability_obligations, parse_realizability, realize, \
    realize_sequent, statement
from relativizer import emit_interpretation_obligations, parse_interp, theorem_statement, translate_formula
from s_theory import emit_s_axioms, s_signature, tvar
from builtin_relations import builtin_relations
from sexpr_format import (SList, parse_proof, parse_theory, print_formula, print_proof, print_sequent, print_term,
                          print_theory, read_formula, read_proof_term, read_sexpr, read_term)
from tree_codec import Codebook, EMPTY_CODEBOOK, STANDARD_LANG, decode_proof, encode_proof, term_to_tree, tree_to_term
from tree_model import DEFAULT_SN_BOUND, DEFAULT_TREE_BOUND, EvalBounds, eval_formula


EXIT_OK = 0
EXIT_FAIL = 1
EXIT_UNKNOWN = 2
EXIT_INPUT = 3

OUTPUT_DIR = os.getenv("OUTPUT_DIR", "outputs")
DEFAULT_SEED = int(os.getenv("KERNEL_SEED", "20240917"))
DEFAULT_REDUCE_LIMIT = 100

COMMANDS = ("check", "reduce", "sn", "translate", "obligations", "realize", "eval", "emit-s", "encode", "decode",
            "premodel-test")


class Invocation(BaseModel):
    command: str
    inputs: List[str] = Field(default_factory=list, description="必须存在的输入文件")
    bound: Optional[int] = Field(default=None, ge=1, description="命令自身的界（sn 的步数、reduce 的步数）")
    tree_bound: int = Field(default=DEFAULT_TREE_BOUND, ge=1)
    sn_bound: int = Field(default=DEFAULT_SN_BOUND, ge=1)
    fuel: int = Field(default=DEFAULT_FUEL, ge=1)
    seed: int = Field(default=DEFAULT_SEED, ge=0)
    out: Optional[str] = None

    @model_validator(mode="after")
    def _check(self) -> "Invocation":
        if self.command not in COMMANDS:
            raise ValueError(f"unknown command {self.command}")
        missing = [p for p in self.inputs if p and not os.path.isfile(p)]
        if missing:
            raise ValueError(f"input file not found: {', '.join(missing)}")
        return self


def _read(path: str) -> str:
    with open(path, "r", encoding="utf-8") as f:
        return f.read()


def _text_or_file(arg: str) -> str:
    """参数是已存在的文件时读文件，否则当作字面文本"""
    return _read(arg) if os.path.isfile(arg) else arg


def _output_path(out: str) -> str:
    if not os.path.dirname(out):
        out = os.path.join(OUTPUT_DIR, out)
    os.makedirs(os.path.dirname(out), exist_ok=True)
    return out


def _emit(text: str, inv: Invocation) -> None:
    if inv.out:
        path = _output_path(inv.out)
        with open(path, "w", encoding="utf-8") as f:
            f.write(text if text.endswith("\n") else text + "\n")
        print(f"✅ 已写入 {path}")
    else:
        print(text)


# ==================== 输入装载 ====================

def _theory(path: Optional[str]) -> Theory:
    return parse_theory(_read(path)) if path else Theory(Signature())


def _registry(codebook: Codebook, prdefs: Sequence[str]) -> PrRegistry:
    registry = builtin_relations(codebook)
    for path in prdefs or ():
        registry.register_all(parse_prdefs(_read(path)))
    return registry


def _target(path: Optional[str], codebook: Codebook, prdefs: Sequence[str]) -> Theory:
    """U：给出文件就读文件，否则为 S"""
    if path:
        return parse_theory(_read(path))
    return Theory(s_signature(_registry(codebook, prdefs), with_derived=True))


def _proof_input(text: str, signature: Signature):
    """(proof …) 文档返回 (相继式, 证明项)；裸证明项返回 (None, 证明项)"""
    node = read_sexpr(text)
    if isinstance(node, SList) and node.head() == "proof":
        doc = parse_proof(text, signature)
        return doc.sequent, doc.term
    return None, read_proof_term(node, signature)


# ==================== 命令 ====================

def cmd_check(args, inv: Invocation) -> int:
    theory = _theory(args.theory)
    doc = parse_proof(_read(args.proof), theory.signature)
    result = check(theory, doc.sequent, doc.term, inv.fuel)
    if result.accepted:
        _emit("\n".join(["✅ accepted: " + print_sequent(doc.sequent)] + result.derivation.render()), inv)
        return EXIT_OK
    _emit(f"❌ rejected ({result.error_kind}): {'; '.join(result.errors)}", inv)
    return EXIT_FAIL


def cmd_reduce(args, inv: Invocation) -> int:
    _, p = _proof_input(_read(args.proof), _theory(args.theory).signature)
    trace = normalize(p, inv.bound or DEFAULT_REDUCE_LIMIT)
    lines = [print_proof(p)]
    for s in trace.steps:
        lines.append(f"  ▷ [{s.rule} @ {'.'.join(map(str, s.position)) or 'root'}] {print_proof(s.target)}")
    lines.append("normal form reached" if trace.normal else f"⚠️ no normal form within {len(trace.steps)} step(s)")
    _emit("\n".join(lines), inv)
    return EXIT_OK if trace.normal else EXIT_UNKNOWN


def cmd_sn(args, inv: Invocation) -> int:
    _, p = _proof_input(_read(args.proof), _theory(args.theory).signature)
    verdict = sn_check(p, inv.bound or inv.sn_bound)
    _emit(str(verdict), inv)
    if verdict.is_sn:
        return EXIT_OK
    return EXIT_FAIL if verdict.status == "CycleFound" else EXIT_UNKNOWN


def cmd_translate(args, inv: Invocation) -> int:
    t = _theory(args.theory)
    u = _target(args.target, Codebook.from_signature(t.signature), args.prdefs)
    spec = parse_interp(_read(args.interp), t.signature, u.signature)
    a = read_formula(_text_or_file(args.formula), t.signature)
    out = theorem_statement(spec, a) if args.theorem else translate_formula(spec, a)
    _emit(print_formula(out), inv)
    return EXIT_OK


def cmd_obligations(args, inv: Invocation) -> int:
    t = _theory(args.theory)
    codebook = Codebook.from_signature(t.signature)
    u = _target(args.target, codebook, args.prdefs)
    if args.realizability:
        spec = parse_realizability(_read(args.spec), t.signature, u.signature)
        obligations = emit_realizability_obligations(spec, t, u)
    else:
        spec = parse_interp(_read(args.spec), t.signature, u.signature)
        obligations = emit_interpretation_obligations(spec, t, u, emit_equivalences=args.with_equivalences)
    _emit("\n".join(ob.render() for ob in obligations), inv)
    return EXIT_OK


def cmd_realize(args, inv: Invocation) -> int:
    t = _theory(args.theory)
    codebook = Codebook.from_signature(t.signature)
    u = _target(args.target, codebook, args.prdefs)
    if args.spec:
        spec = parse_realizability(_read(args.spec), t.signature, u.signature)
    else:
        spec = RealizabilitySpec(codebook=codebook)
    pi = tvar(args.pi)
    if args.sequent:
        seq, proof = _proof_input(_read(args.sequent), t.signature)
        if seq is None:
            raise KernelError("--sequent expects a (proof …) document")
        if args.statement:
            subject = (seq, proof) if args.statement == "existence" else seq
            out = statement(args.statement, spec, subject, t.signature).formula
        else:
            out = realize_sequent(spec, seq, pi)
    else:
        if not args.formula:
            raise KernelError("realize needs a formula or --sequent")
        a = read_formula(_text_or_file(args.formula), t.signature)
        if args.statement:
            out = statement(args.statement, spec, a, t.signature).formula
        else:
            out = realize(spec, a, pi)
    _emit(print_formula(out), inv)
    return EXIT_OK


def cmd_eval(args, inv: Invocation) -> int:
    codebook = Codebook.from_signature(_theory(args.theory).signature) if args.theory else EMPTY_CODEBOOK
    registry = _registry(codebook, args.prdefs)
    signature = s_signature(registry, with_derived=True)
    a = read_formula(_text_or_file(args.formula), signature)
    verdict = eval_formula(a, EvalBounds(tree_bound=inv.tree_bound, sn_bound=inv.sn_bound), registry, codebook)
    _emit(str(verdict), inv)
    if verdict.value == "True":
        return EXIT_OK
    return EXIT_FAIL if verdict.value == "False" else EXIT_UNKNOWN


def cmd_emit_s(args, inv: Invocation) -> int:
    defs = list(builtin_relations().defs.values()) if args.builtins else []
    for path in args.prdefs or ():
        defs += parse_prdefs(_read(path))
    theory = emit_s_axioms(STANDARD_LANG, defs, with_definitions=args.with_definitions)
    _emit(print_theory(theory), inv)
    return EXIT_OK


def cmd_encode(args, inv: Invocation) -> int:
    t = _theory(args.theory)
    _, p = _proof_input(_read(args.proof), t.signature)
    tree = encode_proof(p, Codebook.from_signature(t.signature))
    _emit(print_term(tree_to_term(tree)), inv)
    return EXIT_OK


def cmd_decode(args, inv: Invocation) -> int:
    t = _theory(args.theory)
    term = read_term(_text_or_file(args.tree), s_signature(with_derived=False))
    tree = term_to_tree(term)
    if tree is None:
        raise KernelError("decode expects a closed constructor tree")
    _emit(print_proof(decode_proof(tree, Codebook.from_signature(t.signature))), inv)
    return EXIT_OK


def cmd_premodel_test(args, inv: Invocation) -> int:
    t = _theory(args.theory)
    model = parse_premodel(_read(args.premodel), t.signature)
    bounds = Bounds(sn_bound=inv.sn_bound, corpus_size=args.corpus_size, arg_size=args.arg_size)
    corpus = proof_corpus(bounds.corpus_size)
    if args.sample and args.sample < len(corpus):
        corpus = random.Random(inv.seed).sample(corpus, args.sample)
    print(f"🎯 语料：{len(corpus)} 个证明项（大小 ≤ {bounds.corpus_size}）")
    lab = Lab(model, bounds)
    seen, sections, passed = set(), [], True
    for table in model.predicates.values():
        for cand in table.values():
            if cand.describe() in seen:
                continue
            seen.add(cand.describe())
            report = check_candidate_axioms(cand, corpus, bounds, lab)
            passed = passed and report.passed
            sections.append(report.render())
    congruence = check_premodel_congruence(model, t.rules, corpus, bounds, lab)
    passed = passed and congruence.passed
    sections.append(congruence.render())
    _emit("\n\n".join(sections), inv)
    return EXIT_OK if passed else EXIT_FAIL


HANDLERS = {
    "check": cmd_check, "reduce": cmd_reduce, "sn": cmd_sn, "translate": cmd_translate,
    "obligations": cmd_obligations, "realize": cmd_realize, "eval": cmd_eval, "emit-s": cmd_emit_s,
    "encode": cmd_encode, "decode": cmd_decode, "premodel-test": cmd_premodel_test,
}


# ==================== 参数 ====================

class KernelArgumentParser(argparse.ArgumentParser):
    """用法错误也是输入错误，退出码 3"""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = KernelArgumentParser(add_help=False)
    common.add_argument("--bound", type=int, help="sn 的步数上限 / reduce 的最多步数")
    common.add_argument("--tree-bound", type=int, default=DEFAULT_TREE_BOUND, help="eval 枚举见证的树大小上限")
    common.add_argument("--sn-bound", type=int, default=DEFAULT_SN_BOUND, help="SN 检查的步数上限")
    common.add_argument("--fuel", type=int, default=DEFAULT_FUEL, help="改写步数上限")
    common.add_argument("--seed", type=int, default=DEFAULT_SEED, help="随机抽样的种子")
    common.add_argument("--out", help="输出文件（只给文件名时写到 OUTPUT_DIR 下）")

    parser = KernelArgumentParser(description="Deduction modulo kernel")
    sub = parser.add_subparsers(dest="command", help="命令")

    p = sub.add_parser("check", parents=[common], help="检查证明项")
    p.add_argument("theory", help="理论文件")
    p.add_argument("proof", help="证明文件 (proof (context …) (goal …) (term …))")

    for name, text in (("reduce", "最左最外归约到正规形"), ("sn", "有界强正规化判定"),
                       ("encode", "证明项编码为树")):
        p = sub.add_parser(name, parents=[common], help=text)
        p.add_argument("proof", help="证明文件或裸证明项文件")
        p.add_argument("--theory", help="理论文件（提供签名）")

    p = sub.add_parser("decode", parents=[common], help="树解码为证明项")
    p.add_argument("tree", help="树（文本或文件）")
    p.add_argument("--theory", help="理论文件（提供编号表）")

    p = sub.add_parser("translate", parents=[common], help="结构化解释下翻译公式")
    p.add_argument("theory", help="T 的理论文件")
    p.add_argument("interp", help="解释规格文件")
    p.add_argument("formula", help="T 公式（文本或文件）")
    p.add_argument("--theorem", action="store_true", help="输出带守卫的全称闭包")
    p.add_argument("--target", help="U 的理论文件（缺省为 S）")
    p.add_argument("--prdefs", action="append", help="追加到 S 的 prdef 文件")

    p = sub.add_parser("obligations", parents=[common], help="生成证明义务")
    p.add_argument("theory", help="T 的理论文件")
    p.add_argument("spec", help="解释或可实现性规格文件")
    p.add_argument("--realizability", action="store_true", help="按可实现性翻译生成义务")
    p.add_argument("--with-equivalences", action="store_true", help="同时生成联结词等价义务")
    p.add_argument("--target", help="U 的理论文件（缺省为 S）")
    p.add_argument("--prdefs", action="append", help="追加到 S 的 prdef 文件")

    p = sub.add_parser("realize", parents=[common], help="可实现性翻译")
    p.add_argument("formula", nargs="?", help="T 公式（文本或文件）")
    p.add_argument("--theory", help="T 的理论文件")
    p.add_argument("--spec", help="可实现性规格文件")
    p.add_argument("--sequent", help="证明文件：翻译其相继式")
    p.add_argument("--statement", help="typing / normalization / sequent-normalization / existence")
    p.add_argument("--pi", default="pi", help="实现子变量名")
    p.add_argument("--target", help="U 的理论文件（缺省为 S）")
    p.add_argument("--prdefs", action="append", help="追加到 S 的 prdef 文件")

    p = sub.add_parser("eval", parents=[common], help="在标准树模型里求值 S 公式")
    p.add_argument("formula", help="S 公式（文本或文件）")
    p.add_argument("--theory", help="T 的理论文件（提供编号表）")
    p.add_argument("--prdefs", action="append", help="追加的 prdef 文件")

    p = sub.add_parser("emit-s", parents=[common], help="输出理论 S 的公理")
    p.add_argument("--prdefs", action="append", help="prdef 文件")
    p.add_argument("--builtins", action="store_true", help="包含内置 PR 关系的定义")
    p.add_argument("--with-definitions", action="store_true", help="包含 Red*/SN 的定义公理")

    p = sub.add_parser("premodel-test", parents=[common], help="检验预模型")
    p.add_argument("theory", help="T 的理论文件")
    p.add_argument("premodel", help="预模型文件")
    p.add_argument("--corpus-size", type=int, default=6, help="语料证明项的最大大小")
    p.add_argument("--arg-size", type=int, default=2, help="→ 子句实参的最大大小")
    p.add_argument("--sample", type=int, help="从语料中随机抽取的项数")
    return parser


def _input_files(args) -> List[str]:
    names = ("theory", "proof", "interp", "spec", "sequent", "premodel", "target")
    files = [getattr(args, n) for n in names if getattr(args, n, None)]
    return files + list(getattr(args, "prdefs", None) or [])


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code in (None, 0) else EXIT_INPUT
    if not args.command:
        parser.print_help()
        return EXIT_INPUT
    try:
        inv = Invocation(command=args.command, inputs=_input_files(args), bound=args.bound,
                         tree_bound=args.tree_bound, sn_bound=args.sn_bound, fuel=args.fuel, seed=args.seed,
                         out=args.out)
        return HANDLERS[inv.command](args, inv)
    except KernelError as e:
        print(f"❌ {type(e).__name__}: {e}")
        return EXIT_INPUT
    except (OSError, ValueError) as e:
        print(f"❌ 输入错误: {e}")
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
