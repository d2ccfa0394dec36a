"""Command-line driver: ``bicheck {check,lint,trace,dump} SPEC ...``.

Reports go to stdout and diagnostics to stderr.  The process exit status is
derived from the report alone (:func:`bicheck.report.exit_status`).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Optional, Sequence

from bicheck import fixtures
from bicheck.dsl import ParseFailure, parse
from bicheck.model import HierarchyError, validate
from bicheck.refinement import BLOCKING, NONBLOCKING, CheckConfig, check_hierarchy
from bicheck.report import (
    config_dict,
    exit_status,
    finding_dict,
    lint_dict,
    new_report,
    render_json,
    render_text,
)
from bicheck.semantics import DEFAULT_STATE_CAP, StateSpaceTooLarge, dump_relations
from bicheck.system import (
    DEFAULT_DEPTH_CAP,
    GUARD,
    INVARIANT,
    DepthTooLarge,
    SimulationError,
    compare_substitutability,
    lint_freeness,
)

RELAXATIONS = ("virtual-ops", "abstract-classes")


def _relax_list(text: str) -> list[str]:
    items = [t.strip() for t in text.split(",") if t.strip()]
    for t in items:
        if t not in RELAXATIONS:
            raise argparse.ArgumentTypeError(f"unknown relaxation {t!r} (choose from {', '.join(RELAXATIONS)})")
    return items


def _positive(text: str) -> int:
    n = int(text)
    if n <= 0:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return n


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("spec", help="path to a .bi specification")
    common.add_argument("--format", choices=("text", "json"), default="text")
    common.add_argument("--state-cap", type=_positive, default=DEFAULT_STATE_CAP,
                        help="largest state or candidate space to enumerate")

    checking = argparse.ArgumentParser(add_help=False)
    checking.add_argument("--mode", choices=(NONBLOCKING, BLOCKING), default=NONBLOCKING)

    p = argparse.ArgumentParser(prog="bicheck", description="Check behavioural inheritance in class hierarchies.")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("check", parents=[common, checking], help="discharge the refinement obligations")
    c.add_argument("--relax", type=_relax_list, default=[],
                   help="comma list of relaxations: virtual-ops, abstract-classes")
    c.add_argument("--dump-relations", metavar="DIR", help="also write every operation relation to DIR")

    l = sub.add_parser("lint", parents=[common], help="flag global constraints placed on subclasses")
    l.add_argument("--strict", action="store_true",
                   help="report a constraint as an error when a proper ancestor is concrete")

    t = sub.add_parser("trace", parents=[common, checking], help="compare two classes on bounded call sequences")
    t.add_argument("class_a")
    t.add_argument("class_b")
    t.add_argument("--depth", type=_positive, default=3)
    t.add_argument("--depth-cap", type=_positive, default=DEFAULT_DEPTH_CAP)
    t.add_argument("--constraint-semantics", choices=(GUARD, INVARIANT), default=GUARD)

    d = sub.add_parser("dump", parents=[common], help="write every operation relation to a directory")
    d.add_argument("--dump-relations", metavar="DIR", required=True)
    return p


def resolve_spec(spec: str) -> Path:
    """The file at ``spec``; a missing ``.../<name>.bi`` falls back to the bundled fixture."""
    path = Path(spec)
    if not path.exists() and path.name in fixtures.NAMES:
        return fixtures.path(path.name)
    return path


def _span(span) -> Optional[dict]:
    if span is None:
        return None
    return {"file": span.file, "startLine": span.start_line, "startCol": span.start_col,
            "endLine": span.end_line, "endCol": span.end_col}


def _load(args, report: dict):
    try:
        source = resolve_spec(args.spec).read_text(encoding="utf-8")
    except OSError as exc:
        report["errors"].append({"category": "input", "message": f"cannot read {args.spec}: {exc.strerror}"})
        return None
    try:
        h = parse(source, args.spec)
    except ParseFailure as exc:
        for e in exc.errors:
            report["errors"].append({"category": "parse", "message": str(e), "span": _span(e.span)})
        return None
    for e in validate(h, cap=args.state_cap):
        report["errors"].append({"category": "structural", "rule": e.rule, "message": str(e)})
    return None if report["errors"] else h


def _run_check(args, h, report):
    config = CheckConfig(
        mode=args.mode,
        relax_virtual_ops="virtual-ops" in args.relax,
        relax_abstract_classes="abstract-classes" in args.relax,
        state_cap=args.state_cap,
    )
    result = check_hierarchy(h, config)
    report["findings"] = [finding_dict(f) for f in result.findings]
    report["overall"] = result.overall
    if args.dump_relations:
        dump_relations(h, args.dump_relations, args.state_cap)


def _run_trace(args, h, report):
    for c in (args.class_a, args.class_b):
        if c not in {k.name for k in h.classes}:
            raise SimulationError(f"unknown class {c}")
    div = compare_substitutability(
        h, args.class_a, args.class_b, args.depth, mode=args.mode, cap=args.state_cap,
        depth_cap=args.depth_cap, constraint_semantics=args.constraint_semantics,
    )
    report["divergence"] = None if div is None else div.to_dict()


def _config(args) -> dict:
    if args.command == "check":
        cfg = config_dict(CheckConfig(args.mode, "virtual-ops" in args.relax,
                                      "abstract-classes" in args.relax, args.state_cap))
    else:
        cfg = {"stateCap": args.state_cap}
    if args.command == "lint":
        cfg["strict"] = args.strict
    if args.command == "trace":
        cfg.update(mode=args.mode, relax=[], classA=args.class_a, classB=args.class_b,
                   depth=args.depth, constraintSemantics=args.constraint_semantics)
    return cfg


def run(argv: Optional[Sequence[str]] = None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    args = build_parser().parse_args(argv)
    report = new_report(args.command, args.spec, _config(args))

    try:
        h = _load(args, report)
        if h is not None and args.command == "check":
            _run_check(args, h, report)
        elif h is not None and args.command == "lint":
            report["findings"] = [lint_dict(f) for f in lint_freeness(h, strict=args.strict)]
        elif h is not None and args.command == "trace":
            _run_trace(args, h, report)
        elif h is not None:
            dump_relations(h, args.dump_relations, args.state_cap)
    except (StateSpaceTooLarge, DepthTooLarge) as exc:
        report["errors"].append({"category": "resource", "message": f"{type(exc).__name__}: {exc}"})
    except (SimulationError, HierarchyError, KeyError, ValueError) as exc:
        report["errors"].append({"category": "input", "message": str(exc)})

    for e in report["errors"]:
        print(f"bicheck: error: {e['message']}", file=stderr)
    stdout.write(render_json(report) if args.format == "json" else render_text(report))
    return exit_status(report)


def main(argv: Optional[Sequence[str]] = None) -> int:
    return run(argv)


if __name__ == "__main__":
    sys.exit(main())
