"""Command-line entry point.

Exit codes: 0 noncontextual, 2 contextual, 3 undefined, 1 input or budget error.
Commands that do not classify exit 0 on success.
"""
from __future__ import annotations

import argparse
import json
import os
import sys

from . import audit, corpus
from .deciders import CONTEXTUAL, EXTENSIONS, NONCONTEXTUAL, decide
from .io import dumps, load, loads
from .lp import LPError, emit_lp
from .model import ModelError, SearchBudgetExceeded, connectedness_class, validate
from .transforms import BudgetExceeded, apply_pipeline

EXIT = {NONCONTEXTUAL: 0, CONTEXTUAL: 2}
EXIT_UNDEFINED, EXIT_ERROR = 3, 1


def _dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def _write(text: str, path: str | None) -> None:
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _read_behavior(path: str):
    if path == "-":
        return loads(sys.stdin.read())
    return load(path)


def cmd_validate(args) -> int:
    b = _read_behavior(args.file)
    problems = validate(b)
    for p in problems:
        print(p)
    if problems:
        return EXIT_ERROR
    print(f"ok: {len(b.scenario.observables)} observables, {len(b.scenario.contexts)} contexts, "
          f"class {connectedness_class(b)}")
    return 0


def cmd_classify(args) -> int:
    b = _read_behavior(args.file)
    problems = validate(b)
    if problems:
        for p in problems:
            print(f"error: {p}", file=sys.stderr)
        return EXIT_ERROR
    kwargs = {}
    if args.join_closure:
        if not args.extension.startswith("cbcbd2"):
            print("--join-closure only applies to cbcbd2-strict and cbcbd2-lifted", file=sys.stderr)
            return EXIT_ERROR
        kwargs["join_closure"] = True
    v = decide(b, args.extension, **kwargs)
    if args.emit_lp:
        if v.system is None:
            print(f"no linear system for extension {args.extension}", file=sys.stderr)
        else:
            _write(emit_lp(v.system), args.emit_lp)
    if args.format == "json":
        sys.stdout.write(_dump_json(v.to_json(with_witness=args.witness)))
    else:
        line = f"{v.extension}: {v.status}"
        if v.reason:
            line += f" ({v.reason})"
        print(line)
        if args.witness and v.witness is not None:
            sys.stdout.write(_dump_json(v.witness))
    return EXIT.get(v.status, EXIT_UNDEFINED)


def _resolver(base_dir: str):
    def resolve(ref):
        if isinstance(ref, str) and ref in corpus.names():
            return corpus.get(ref)
        path = ref if os.path.isabs(ref) else os.path.join(base_dir, ref)
        return load(path)
    return resolve


def cmd_transform(args) -> int:
    b = _read_behavior(args.file)
    with open(args.pipeline, encoding="utf-8") as fh:
        try:
            steps = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ModelError(f"{args.pipeline}: invalid JSON at line {exc.lineno}: {exc.msg}") from None
    if isinstance(steps, dict):
        steps = steps.get("steps", [steps])
    out = apply_pipeline(b, steps, _resolver(os.path.dirname(os.path.abspath(args.pipeline))))
    _write(dumps(out), args.output)
    return 0


def cmd_audit(args) -> int:
    axioms = [args.axiom] if args.axiom else list(audit.AXIOMS)
    reports = []
    for name in axioms:
        ax = audit.effective_axiom(args.extension, name)
        key = (args.extension, "Independence" if ax == "IndependenceCanonical" else ax)
        if key in audit.KNOWN_VIOLATIONS and not args.fuzz_only:
            r = audit.check_axiom(args.extension, ax, audit.KNOWN_VIOLATIONS[key]())
        else:
            r = audit.fuzz_axiom(args.extension, ax, args.trials, args.seed)
        reports.append(r)
    if args.format == "json":
        sys.stdout.write(_dump_json([r.to_json() for r in reports]))
    else:
        for r in reports:
            line = f"{r.extension} {r.axiom}: {r.outcome}"
            if r.outcome == "no-counterexample":
                line += f" in {r.trials} trials ({r.applicable} applicable, seed {r.seed})"
            elif r.reason:
                line += f" ({r.reason})"
            print(line)
            if r.witness is not None:
                sys.stdout.write(_dump_json(r.witness))
    return 0


def cmd_table1(args) -> int:
    t = audit.table1(trials=args.trials, seed=args.seed)
    _write(_dump_json(t.to_json()) if args.format == "json" else t.render(), args.output)
    return 0


def cmd_chain(args) -> int:
    r = audit.theorem_chain(args.which)
    sys.stdout.write(_dump_json(r.to_json()) if args.format == "json" else r.render())
    return 0


def cmd_examples(args) -> int:
    if args.list or not args.name:
        for n in corpus.names():
            print(n)
        return 0
    try:
        b = corpus.get(args.name)
    except KeyError as exc:
        print(f"error: {exc.args[0]}", file=sys.stderr)
        return EXIT_ERROR
    _write(dumps(b), args.output)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="contextuality",
        description="Exact contextuality decisions for finite, possibly disturbing behaviors.",
        epilog="exit codes: 0 noncontextual, 2 contextual, 3 undefined, 1 input or budget error",
    )
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("validate", help="check a behavior file")
    s.add_argument("file")
    s.set_defaults(func=cmd_validate)

    s = sub.add_parser("classify", help="decide contextuality under one extension")
    s.add_argument("file")
    s.add_argument("--extension", "-e", default="cbd2", choices=sorted(EXTENSIONS))
    s.add_argument("--witness", action="store_true", help="include the certificate")
    s.add_argument("--emit-lp", metavar="PATH", help="write the linear system as plain text")
    s.add_argument("--join-closure", action="store_true",
                   help="canonical form: also join composites that contain earlier joins")
    s.add_argument("--format", choices=("text", "json"), default="json")
    s.set_defaults(func=cmd_classify)

    s = sub.add_parser("transform", help="apply a JSON pipeline of transformations")
    s.add_argument("file")
    s.add_argument("pipeline")
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_transform)

    s = sub.add_parser("audit", help="check one extension against the axioms")
    s.add_argument("--extension", "-e", required=True, choices=sorted(EXTENSIONS))
    s.add_argument("--axiom", choices=audit.AXIOMS)
    s.add_argument("--trials", type=int, default=200)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--fuzz-only", action="store_true", help="skip the built-in witnesses")
    s.add_argument("--format", choices=("text", "json"), default="text")
    s.set_defaults(func=cmd_audit)

    s = sub.add_parser("table1", help="reproduce the axiom-by-extension table")
    s.add_argument("--trials", type=int, default=200)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--format", choices=("text", "json"), default="text")
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_table1)

    s = sub.add_parser("chain", help="replay an impossibility chain")
    s.add_argument("--which", choices=("thm2", "thm3"), default="thm2")
    s.add_argument("--format", choices=("text", "json"), default="text")
    s.set_defaults(func=cmd_chain)

    s = sub.add_parser("examples", help="list or export built-in behaviors")
    s.add_argument("--list", action="store_true")
    s.add_argument("--name")
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_examples)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (BudgetExceeded, SearchBudgetExceeded) as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
    except (ModelError, LPError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
    return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
