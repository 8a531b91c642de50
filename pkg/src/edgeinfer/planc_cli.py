"""`planc` command line: compile graph sources into plan files."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .core import EdgeInferError
from .graphlang import parse_graph
from .plan import compile_graph, deserialize_plan
from .passes import PASS_NAMES
from .store import save_plan


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="planc", description="model plan compiler")
    sub = parser.add_subparsers(dest="command", required=True)

    p_compile = sub.add_parser("compile", help="compile a graph source into a plan")
    p_compile.add_argument("source", metavar="FILE.g")
    p_compile.add_argument("-o", "--out-dir", default="plans")
    p_compile.add_argument("--passes", default="all",
                           help=f"'all', 'none', or comma list of {','.join(PASS_NAMES)}")
    p_compile.add_argument("--name", default=None, help="plan file stem")

    p_info = sub.add_parser("info", help="print a plan's hash and specs")
    p_info.add_argument("plan", metavar="FILE.plan")

    p_corpus = sub.add_parser("corpus", help="compile the built-in model corpus")
    p_corpus.add_argument("-o", "--out-dir", default="plans")
    p_corpus.add_argument("--passes", default="all")

    args = parser.parse_args(argv)
    try:
        return _dispatch(args)
    except EdgeInferError as exc:
        print(f"planc: {exc.code.name}: {exc}", file=sys.stderr)
        return 2


def _parse_passes(spec: str):
    if spec == "all":
        return "all"
    if spec == "none":
        return ()
    return tuple(s.strip() for s in spec.split(",") if s.strip())


def _dispatch(args) -> int:
    if args.command == "compile":
        src = Path(args.source)
        graph = parse_graph(src.read_text(), base_dir=src.parent)
        plan = compile_graph(graph, _parse_passes(args.passes))
        path = save_plan(plan, args.out_dir, args.name or src.stem)
        print(f"{path}  {plan.hash_hex}")
        return 0
    if args.command == "info":
        plan = deserialize_plan(Path(args.plan).read_bytes())
        print(f"hash: {plan.hash_hex}")
        print(f"inputs: {[(d.name, list(s)) for d, s in plan.input_specs]}")
        print(f"outputs: {[(d.name, list(s)) for d, s in plan.output_specs]}")
        print(f"instructions: {len(plan.ops)}  consts: {len(plan.consts)}")
        for op in plan.ops:
            print(f"  {op.kind.value} {list(op.operands)} -> {op.out_slot} {op.attr_dict}")
        return 0
    if args.command == "corpus":
        from . import corpus

        plans = corpus.build_store(args.out_dir, _parse_passes(args.passes))
        for name, plan in plans.items():
            print(f"{name}  {plan.hash_hex}")
        return 0
    raise AssertionError


if __name__ == "__main__":
    raise SystemExit(main())
