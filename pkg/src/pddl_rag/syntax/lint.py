"""Cross-reference checks a planner performs before search."""
from __future__ import annotations

from .ast import ROOT_TYPE, And, Atom, DomainAst, ProblemAst, TypedName, is_subtype
from .diagnostics import Diagnostic, FileKind


def _at(pos, fallback: str = "") -> tuple[int, str]:
    return (pos.line, pos.token) if pos is not None else (1, fallback)


def _declared_types(domain: DomainAst) -> set[str]:
    names = {ROOT_TYPE}
    for t in domain.types:
        names.add(t.name)
        names.add(t.type_name)
    return names


def _check_type_refs(names, declared: set[str], kind: FileKind, out: list[Diagnostic]) -> None:
    for tn in names:
        if tn.type_name not in declared:
            line, tok = _at(tn.type_pos, tn.type_name)
            out.append(Diagnostic(kind, line, tok, "declared type expected", "typing"))


def _check_atom(atom: Atom, domain: DomainAst, term_types: dict[str, str], kind: FileKind, out: list) -> None:
    line, tok = _at(atom.pos, atom.name)
    decl = domain.predicate(atom.name)
    if decl is None:
        out.append(Diagnostic(kind, line, tok, "declared predicate expected", "naming"))
        return
    if decl.arity != len(atom.terms):
        out.append(Diagnostic(kind, line, tok, f"{decl.arity} argument(s) for '{decl.name}' expected", "arity"))
        return
    hierarchy = domain.type_hierarchy
    for i, (term, param) in enumerate(zip(atom.terms, decl.parameters)):
        raw = atom.raw_term(i)
        if term not in term_types:
            what = "declared parameter" if term.startswith("?") else "declared object"
            out.append(Diagnostic(kind, line, raw, f"{what} expected", "naming"))
        elif not is_subtype(term_types[term], param.type_name, hierarchy):
            out.append(Diagnostic(kind, line, raw, f"argument of type '{param.type_name}' expected", "typing"))


def _check_negatives(formula: And, reqs: frozenset[str], kind: FileKind, out: list) -> None:
    if ":negative-preconditions" in reqs:
        return
    for atom, positive in formula.atoms():
        if not positive:
            line, tok = _at(atom.pos, atom.name)
            out.append(Diagnostic(kind, line, tok, "requirement :negative-preconditions expected",
                                  "structure", "warning"))
            return


def lint_domain(domain: DomainAst) -> list[Diagnostic]:
    out: list[Diagnostic] = []
    kind = FileKind.DF
    hierarchy = domain.type_hierarchy
    for t in domain.types:
        seen = set()
        cur = t.name
        while cur in hierarchy:
            if cur in seen:
                line, tok = _at(t.pos, t.name)
                out.append(Diagnostic(kind, line, tok, "acyclic type hierarchy expected", "typing"))
                break
            seen.add(cur)
            cur = hierarchy[cur]

    declared = _declared_types(domain)
    uses_types = bool(domain.types) or any(
        tn.type_name != ROOT_TYPE
        for tn in _all_typed(domain)
    )
    if uses_types and ":typing" not in domain.requirements:
        line, tok = _at(domain.pos, domain.name)
        out.append(Diagnostic(kind, line, tok, "requirement :typing expected", "structure", "warning"))

    _check_type_refs(domain.constants, declared, kind, out)
    for pred in domain.predicates:
        _check_type_refs(pred.parameters, declared, kind, out)

    constants = {c.name: c.type_name for c in domain.constants}
    for act in domain.actions:
        _check_type_refs(act.parameters, declared, kind, out)
        term_types = dict(constants)
        term_types.update({p.name: p.type_name for p in act.parameters})
        for formula in (act.precondition, act.effect):
            for atom, _ in formula.atoms():
                _check_atom(atom, domain, term_types, kind, out)
        _check_negatives(act.precondition, domain.requirements, kind, out)
    return out


def _all_typed(domain: DomainAst):
    yield from domain.constants
    for p in domain.predicates:
        yield from p.parameters
    for a in domain.actions:
        yield from a.parameters


def lint_problem(domain: DomainAst, problem: ProblemAst) -> list[Diagnostic]:
    out: list[Diagnostic] = []
    kind = FileKind.PF
    if problem.domain_name != domain.name:
        line, tok = _at(problem.domain_pos, problem.domain_name)
        out.append(Diagnostic(kind, line, tok, f"domain name '{domain.name}' expected", "naming"))

    declared = _declared_types(domain)
    _check_type_refs(problem.objects, declared, kind, out)
    term_types = {c.name: c.type_name for c in domain.constants}
    for obj in problem.objects:
        term_types[obj.name] = obj.type_name
    for atom in problem.init:
        _check_atom(atom, domain, term_types, kind, out)
    for atom, _ in problem.goal.atoms():
        _check_atom(atom, domain, term_types, kind, out)
    _check_negatives(problem.goal, domain.requirements | problem.requirements, kind, out)
    return out


def lint_pair(domain: DomainAst, problem: ProblemAst) -> list[Diagnostic]:
    """Domain diagnostics first, then problem diagnostics; warnings included."""
    return lint_domain(domain) + lint_problem(domain, problem)


def typed_objects(domain: DomainAst, problem: ProblemAst) -> list[TypedName]:
    """Constants followed by problem objects, without duplicates."""
    seen = set()
    out = []
    for tn in list(domain.constants) + list(problem.objects):
        if tn.name not in seen:
            seen.add(tn.name)
            out.append(tn)
    return out
