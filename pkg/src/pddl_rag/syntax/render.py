"""Canonical pretty-printer; output re-parses to an equal AST."""
from __future__ import annotations

from .ast import ROOT_TYPE, And, Atom, DomainAst, Not, ProblemAst


def _typed(names, force_types: bool = False) -> str:
    # group consecutive names sharing a type: "a b - t c - u"
    parts: list[str] = []
    i = 0
    names = list(names)
    while i < len(names):
        j = i
        while j < len(names) and names[j].type_name == names[i].type_name:
            j += 1
        parts.extend(n.name for n in names[i:j])
        # an untyped run is only safe at the end, else the next "- t" claims it
        later_typed = any(n.type_name != ROOT_TYPE for n in names[j:])
        if names[i].type_name != ROOT_TYPE or force_types or later_typed:
            parts += ["-", names[i].type_name]
        i = j
    return " ".join(parts)


def _atom(a: Atom) -> str:
    return "(" + " ".join((a.name,) + a.terms) + ")"


def _literal(lit) -> str:
    return f"(not {_atom(lit.child)})" if isinstance(lit, Not) else _atom(lit)


def _and(f: And, indent: str) -> str:
    if not f.children:
        return "(and)"
    if len(f.children) == 1:
        return f"(and {_literal(f.children[0])})"
    inner = f"\n{indent}     ".join(_literal(c) for c in f.children)
    return f"(and {inner})"


def render_domain(d: DomainAst) -> str:
    lines = [f"(define (domain {d.name})"]
    if d.requirements:
        lines.append(f"  (:requirements {' '.join(sorted(d.requirements))})")
    if d.types:
        lines.append(f"  (:types {_typed(d.types, force_types=True)})")
    if d.constants:
        lines.append(f"  (:constants {_typed(d.constants)})")
    if d.predicates:
        lines.append("  (:predicates")
        for p in d.predicates:
            params = _typed(p.parameters)
            lines.append(f"    ({p.name}{' ' + params if params else ''})")
        lines.append("  )")
    for a in d.actions:
        pad = " " * len("    :precondition ")
        lines.append(f"  (:action {a.name}")
        lines.append(f"    :parameters ({_typed(a.parameters)})")
        lines.append(f"    :precondition {_and(a.precondition, pad)}")
        lines.append(f"    :effect {_and(a.effect, ' ' * len('    :effect '))}")
        lines.append("  )")
    lines.append(")")
    return "\n".join(lines) + "\n"


def render_problem(p: ProblemAst) -> str:
    lines = [f"(define (problem {p.name})", f"  (:domain {p.domain_name})"]
    if p.requirements:
        lines.append(f"  (:requirements {' '.join(sorted(p.requirements))})")
    lines.append(f"  (:objects {_typed(p.objects)})" if p.objects else "  (:objects)")
    if p.init:
        lines.append("  (:init")
        lines.extend(f"    {_atom(a)}" for a in p.init)
        lines.append("  )")
    else:
        lines.append("  (:init)")
    lines.append(f"  (:goal {_and(p.goal, ' ' * len('  (:goal '))})")
    lines.append(")")
    return "\n".join(lines) + "\n"


def render(ast: DomainAst | ProblemAst) -> str:
    if isinstance(ast, DomainAst):
        return render_domain(ast)
    if isinstance(ast, ProblemAst):
        return render_problem(ast)
    raise TypeError(f"cannot render {type(ast).__name__}")

