"""Command-line entry point: ``pddl-rag <subcommand> ...``.

Exit status is 0 on success, 1 when the input is well-formed but fails the
check (diagnostics, invalid plan, no plan), and 2 on usage or config errors.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .docs import CorpusError, load_corpus
from .harness import ConfigError, DatasetError, aggregate, emit_report, load_records, run_batch, RunConfig
from .planner import FeedbackStatus, PlannerConfig, PlannerConfigError, solve
from .retrieval import RetrieverConfig, build_index, retrieve
from .semantics import PlanValidationError, parse_plan, validate_plan
from .syntax import PddlSyntaxError, check_pair, errors_only, lint_domain, parse_domain, parse_problem

OK, FAIL, USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _read(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise UsageError(f"cannot read {path}: {e.strerror or e}") from None


def cmd_check(args) -> int:
    df = _read(args.df)
    pf = _read(args.pf) if args.pf else None
    if pf is None:
        try:
            dom = parse_domain(df, args.strict)
            diags = list(dom.warnings) + list(lint_domain(dom))
        except PddlSyntaxError as e:
            diags = list(e.diagnostics)
    else:
        _, _, diags = check_pair(df, pf, args.strict)
    for d in diags:
        print(d.to_json() if args.json else d.format())
    if not diags and not args.json:
        print("ok")
    return FAIL if errors_only(diags) else OK


def _parse_pair(df_path: str, pf_path: str, strict: bool = False):
    _, _, diags = check_pair(_read(df_path), _read(pf_path), strict)
    errs = errors_only(diags)
    if errs:
        for d in errs:
            print(d.format())
        return None
    return parse_domain(_read(df_path), strict), parse_problem(_read(pf_path), strict)


def cmd_validate(args) -> int:
    pair = _parse_pair(args.df, args.pf)
    if pair is None:
        return FAIL
    try:
        plan = parse_plan(_read(args.plan))
        verdict = validate_plan(*pair, plan)
    except (ValueError, PlanValidationError) as e:
        print(f"invalid plan: {e}")
        return FAIL
    print(verdict.describe())
    return OK if verdict.valid else FAIL


def cmd_solve(args) -> int:
    cfg = {"timeout_seconds": args.timeout}
    if args.planner_cmd:
        cfg.update(mode="external", external_command=args.planner_cmd)
    try:
        planner = PlannerConfig.from_dict(cfg)
    except PlannerConfigError as e:
        raise UsageError(str(e)) from None
    fb = solve(_read(args.df), _read(args.pf), planner)
    if args.json:
        print(json.dumps(fb.to_dict(), sort_keys=True))
    elif fb.status is FeedbackStatus.SUCCESS:
        print((fb.plan.to_text() if fb.plan is not None else "").rstrip("\n"))
    else:
        print(f"{fb.status.value}: {fb.message}")
    return OK if fb.status is FeedbackStatus.SUCCESS else FAIL


def _corpus_arg(value: str):
    return None if value in ("-", "bundled") else value


def cmd_ingest_docs(args) -> int:
    try:
        corpus = load_corpus(args.src)
    except CorpusError as e:
        print(f"corpus error: {e}", file=sys.stderr)
        return FAIL
    Path(args.out).write_text(corpus.to_json(), encoding="utf-8")
    print(f"{len(corpus.sections)} sections written to {args.out}")
    return OK


def cmd_retrieve(args) -> int:
    query = args.query if args.query is not None else _read(args.query_file)
    try:
        corpus = load_corpus(_corpus_arg(args.corpus))
    except CorpusError as e:
        print(f"corpus error: {e}", file=sys.stderr)
        return FAIL
    try:
        cfg = RetrieverConfig(top_k=args.top_k, k1=args.k1, b=args.b)
    except ValueError as e:
        raise UsageError(str(e)) from None
    hits = retrieve(build_index(corpus, cfg), query, cfg)
    if not hits:
        print("no section shares a term with the query")
        return FAIL
    for rank, h in enumerate(hits, 1):
        print(f"{rank}. {corpus.by_id(h.section_id).type_name} ({h.section_id}) {h.score:.6f}")
    return OK


def cmd_run(args) -> int:
    cfg = RunConfig.load(args.config)
    if args.out:
        cfg.output_dir = Path(args.out)
    if args.max_concurrency:
        cfg.max_concurrency = args.max_concurrency
    run_batch(cfg)
    return OK


def cmd_report(args) -> int:
    try:
        records = load_records(args.records)
    except (OSError, ValueError, TypeError) as e:
        raise UsageError(f"cannot load records from {args.records}: {e}") from None
    try:
        report = aggregate(records)
    except ValueError as e:
        print(f"cannot aggregate: {e}", file=sys.stderr)
        return FAIL
    emit_report(report, records, args.out)
    return OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pddl-rag", description="PDDL generation with documentation retrieval.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", metavar="<command>")

    c = sub.add_parser("check", help="parse and lint a domain (and problem) file")
    c.add_argument("df")
    c.add_argument("pf", nargs="?")
    c.add_argument("--json", action="store_true", help="one JSON diagnostic per line")
    c.add_argument("--strict", action="store_true", help="treat tolerated misspellings as errors")
    c.set_defaults(fn=cmd_check)

    v = sub.add_parser("validate", help="check a plan against a domain/problem pair")
    v.add_argument("df")
    v.add_argument("pf")
    v.add_argument("plan")
    v.set_defaults(fn=cmd_validate)

    s = sub.add_parser("solve", help="find a plan or report solver feedback")
    s.add_argument("df")
    s.add_argument("pf")
    s.add_argument("--planner-cmd", help="external planner command with {df} and {pf} placeholders")
    s.add_argument("--timeout", type=float, default=60.0)
    s.add_argument("--json", action="store_true")
    s.set_defaults(fn=cmd_solve)

    i = sub.add_parser("ingest-docs", help="build a corpus JSON file from local documentation")
    i.add_argument("src")
    i.add_argument("out")
    i.set_defaults(fn=cmd_ingest_docs)

    r = sub.add_parser("retrieve", help="rank documentation sections for a query")
    r.add_argument("corpus", help="corpus file or directory, or 'bundled'")
    q = r.add_mutually_exclusive_group(required=True)
    q.add_argument("--query")
    q.add_argument("--query-file")
    r.add_argument("--top-k", type=int, default=3)
    r.add_argument("--k1", type=float, default=1.2)
    r.add_argument("--b", type=float, default=0.75)
    r.set_defaults(fn=cmd_retrieve)

    b = sub.add_parser("run", help="run a batch from a JSON config")
    b.add_argument("config")
    b.add_argument("--out", help="override output_dir")
    b.add_argument("--max-concurrency", type=int)
    b.set_defaults(fn=cmd_run)

    m = sub.add_parser("report", help="aggregate a records.jsonl file")
    m.add_argument("records")
    m.add_argument("--out", help="also write report.json and curve.csv here")
    m.set_defaults(fn=cmd_report)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    if not getattr(args, "fn", None):
        parser.print_usage(sys.stderr)
        return USAGE
    try:
        return args.fn(args)
    except (UsageError, ConfigError, DatasetError, PlannerConfigError) as e:
        print(f"error: {e}", file=sys.stderr)
        return USAGE
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return USAGE


if __name__ == "__main__":
    sys.exit(main())
