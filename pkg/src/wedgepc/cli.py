"""Command-line entry point.

Exit status: 0 affirmative, 1 negative, 2 usage or parse error, 3 refusal.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import arith, fo, sexpr
from .demos import DEMOS, run_demo
from .evaluator import EvaluationError, Refusal, evaluate
from .formulas import (
    FormulaError,
    code_vocab,
    fneg,
    formula_to_sexpr,
    has_family,
    instantiate,
    is_sentence,
    is_wedge,
    or_compose,
    parse_formula,
    validate,
)
from .pcsearch import PCDefinition, PCError, closed_under_substructures, parse_pc, pc_member, pc_prime_member
from .structures import StructureError, StructureSpace, parse_structure
from .trunc import DEFAULT_MAX_TUPLES, derive_bounds, verify_biconditional

OK, NEGATIVE, USAGE, REFUSED = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as e:
        raise UsageError(f"cannot read {path}: {e.strerror}") from None


def _formula(path: str):
    return parse_formula(_read(path))


def _structure(path: str):
    return parse_structure(_read(path))


def _one(values, flag: str) -> str:
    if not values:
        raise UsageError(f"{flag} is required")
    if len(values) > 1:
        raise UsageError(f"{flag} given more than once")
    return values[0]


def _check_code(code, vocab=None):
    rep = validate(code, vocab)
    if not rep.valid:
        v = rep.violations[0]
        raise UsageError(f"invalid formula at path {list(v.path)}: {v.message}")


# -- commands -------------------------------------------------------------------

def cmd_eval(args):
    code = _formula(_one(args.formula, "--formula"))
    m = _structure(_one(args.structure, "--structure"))
    _check_code(code, m.vocab)
    if not is_sentence(code):
        raise UsageError(f"formula has free variables {sorted(code.freevars)}")
    value = evaluate(code, m)
    return ["result", value], OK if value else NEGATIVE


def cmd_classify(args):
    code = _formula(_one(args.formula, "--formula"))
    _check_code(code)
    wedge = is_wedge(code)
    return ["wedge", wedge], OK if wedge else NEGATIVE


def cmd_negate(args):
    code = _formula(_one(args.formula, "--formula"))
    _check_code(code)
    return formula_to_sexpr(fneg(code)), OK


def cmd_or_compose(args):
    if len(args.formula) != 2:
        raise UsageError("or-compose needs exactly two --formula arguments")
    c1, c2 = (_formula(p) for p in args.formula)
    _check_code(c1)
    _check_code(c2)
    return formula_to_sexpr(or_compose(c1, c2)), OK


def _pc(args) -> PCDefinition:
    if not args.pc:
        raise UsageError("--pc is required")
    return parse_pc(_read(args.pc))


def cmd_pc_check(args):
    defn = _pc(args)
    m = _structure(_one(args.structure, "--structure"))
    v = pc_member(m, defn, args.jobs)
    return v.to_sexpr(), OK if v.member else NEGATIVE


def cmd_pc_prime_check(args):
    defn = _pc(args)
    m = _structure(_one(args.structure, "--structure"))
    v = pc_prime_member(m, defn, args.budget, args.jobs)
    status = {"member": OK, "non_member": NEGATIVE}.get(v.kind, REFUSED)
    return v.to_sexpr(), status


def cmd_substructure_check(args):
    if args.pc and args.formula:
        raise UsageError("give either --pc or --formula, not both")
    if args.pc:
        spec = _pc(args)
        vocab = spec.base
    else:
        spec = _formula(_one(args.formula, "--formula"))
        _check_code(spec)
        if not is_sentence(spec):
            raise UsageError("substructure-check needs a sentence")
        vocab = code_vocab(spec)
    if args.structure:
        family = [_structure(p) for p in args.structure]
    elif args.max_size:
        family = [m for n in range(1, args.max_size + 1) for m in StructureSpace(vocab, n)]
    else:
        raise UsageError("give --structure (repeatable) or --max-size")
    report = closed_under_substructures(spec, family)
    return report.to_sexpr(), OK if report.closed else NEGATIVE


def _finite_sentence(args):
    code = _formula(_one(args.formula, "--formula"))
    m = _structure(args.structure[0]) if args.structure else None
    _check_code(code, m.vocab if m else None)
    if has_family(code):
        if m is None:
            raise UsageError("formula has generated families; give --structure to cut them")
        code = instantiate(code, m)
    if not is_sentence(code):
        raise UsageError(f"formula has free variables {sorted(code.freevars)}")
    if not is_wedge(code):
        raise UsageError("compile needs a wedge sentence")
    return code, m


def cmd_compile(args):
    code, m = _finite_sentence(args)
    enc = arith.encode(code, m.vocab if m else None)
    bounds = derive_bounds(code, m, enc)
    chi = arith.emit_chi(code, enc)
    theta = arith.emit_theta(code, enc, bounds.s)
    out = ["compile", bounds.to_sexpr(),
           ["nodes"] + [[n.code, ["path"] + list(n.path), n.kind] for n in enc.nodes],
           ["pi1", bool(fo.validate_pi1(chi)) and bool(fo.validate_pi1(theta))],
           ["chi", fo.to_sexpr(chi)], ["theta", fo.to_sexpr(theta)]]
    return out, OK


def cmd_verify_lemma(args):
    code = _formula(_one(args.formula, "--formula"))
    m = _structure(_one(args.structure, "--structure"))
    _check_code(code, m.vocab)
    cap = None if args.max_tuples == 0 else args.max_tuples
    report = verify_biconditional(code, m, seed=args.seed, max_tuples=cap)
    return report.to_sexpr(), OK if report.passed else NEGATIVE


def cmd_demo(args):
    report = run_demo(args.name, args.jobs)
    return report.to_sexpr(), OK if report.ok else NEGATIVE


COMMANDS = {
    "eval": cmd_eval,
    "classify": cmd_classify,
    "negate": cmd_negate,
    "or-compose": cmd_or_compose,
    "pc-check": cmd_pc_check,
    "pc-prime-check": cmd_pc_prime_check,
    "substructure-check": cmd_substructure_check,
    "compile": cmd_compile,
    "verify-lemma": cmd_verify_lemma,
    "demo": cmd_demo,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--formula", action="append", default=[], metavar="PATH", help=".lform file")
    common.add_argument("--structure", action="append", default=[], metavar="PATH", help=".lstruct file")
    common.add_argument("--pc", metavar="PATH", help=".lpc file")
    common.add_argument("--budget", type=int, default=0, metavar="K", help="extra elements for pc-prime-check")
    common.add_argument("--seed", type=int, default=0, metavar="S")
    common.add_argument("--jobs", type=int, default=1, metavar="K")
    common.add_argument("--out", metavar="PATH", help="also write the report here")
    common.add_argument("--max-size", type=int, default=0, metavar="N",
                        help="substructure-check over every structure up to N elements")
    common.add_argument("--max-tuples", type=int, default=DEFAULT_MAX_TUPLES, metavar="N",
                        help="tuple-sort safety cap for verify-lemma (0 lifts it)")
    parser = _Parser(prog="wedgepc", description="Finite checks for infinitary and pseudo-elementary definitions.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    for name in COMMANDS:
        p = sub.add_parser(name, parents=[common])
        if name == "demo":
            p.add_argument("name", choices=sorted(DEMOS))
    return parser


def run(argv: Optional[Sequence[str]] = None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        args = build_parser().parse_args(argv)
        if args.command is None:
            raise UsageError("a command is required: " + ", ".join(COMMANDS))
        if args.budget < 0 or args.jobs < 1:
            raise UsageError("--budget must be non-negative and --jobs positive")
        report, status = COMMANDS[args.command](args)
    except UsageError as e:
        print(f"wedgepc: {e}", file=stderr)
        return USAGE
    except sexpr.SExprError as e:
        print(f"wedgepc: parse error: {e}", file=stderr)
        return USAGE
    except Refusal as e:
        print(f"wedgepc: refused: {e}", file=stderr)
        print(sexpr.dumps(["refused", str(e).replace(" ", "-")]), file=stdout)
        return REFUSED
    except (FormulaError, EvaluationError, StructureError, PCError) as e:
        print(f"wedgepc: {e}", file=stderr)
        return USAGE
    text = sexpr.dumps_pretty(report)
    print(text, file=stdout)
    if args.out:
        Path(args.out).write_text(text + "\n")
    return status


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
