"""Lexer, parser, linter and printer for the STRIPS + typing subset of PDDL."""
from __future__ import annotations

from .ast import (
    ROOT_TYPE,
    ActionSchema,
    And,
    Atom,
    DomainAst,
    Not,
    PredicateDecl,
    ProblemAst,
    TypedName,
    TypedVariable,
    is_subtype,
)
from .diagnostics import Diagnostic, FileKind, PddlSyntaxError, SourceFile, errors_only
from .extract import extract_pddl_blocks
from .lint import lint_domain, lint_pair, lint_problem
from .parser import parse_domain, parse_problem
from .render import render, render_domain, render_problem

__all__ = [
    "ROOT_TYPE", "ActionSchema", "And", "Atom", "DomainAst", "Not", "PredicateDecl",
    "ProblemAst", "TypedName", "TypedVariable", "is_subtype", "Diagnostic", "FileKind",
    "PddlSyntaxError", "SourceFile", "errors_only", "extract_pddl_blocks", "lint_domain",
    "lint_pair", "lint_problem", "parse_domain", "parse_problem", "render", "render_domain",
    "render_problem", "check_pair",
]


def check_pair(df_text: str, pf_text: str, strict: bool = False):
    """Parse and lint a DF/PF pair.

    Returns ``(domain, problem, diagnostics)``; either AST is None when its file
    failed to parse.  Domain diagnostics come before problem diagnostics.
    """
    diags: list[Diagnostic] = []
    domain = problem = None
    try:
        domain = parse_domain(SourceFile(FileKind.DF, df_text), strict)
        diags.extend(domain.warnings)
    except PddlSyntaxError as e:
        diags.extend(e.diagnostics)
    try:
        problem = parse_problem(SourceFile(FileKind.PF, pf_text), strict)
        diags.extend(problem.warnings)
    except PddlSyntaxError as e:
        diags.extend(e.diagnostics)
    if domain is not None and problem is not None:
        diags.extend(lint_pair(domain, problem))
    elif domain is not None:
        diags.extend(lint_domain(domain))
    diags.sort(key=lambda d: 0 if d.file is FileKind.DF else 1)
    return domain, problem, diags
