"""Immutable AST for the STRIPS + typing subset of PDDL.

Names are stored lower-cased.  Source positions ride along in fields excluded
from equality, so a parsed AST and its re-parsed rendering compare equal.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

ROOT_TYPE = "object"


@dataclass(frozen=True)
class SrcPos:
    line: int
    token: str


def _pos():
    return field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class TypedName:
    """A variable (``?x``) or object name with exactly one type."""

    name: str
    type_name: str = ROOT_TYPE
    pos: SrcPos | None = _pos()
    type_pos: SrcPos | None = _pos()

    @property
    def is_variable(self) -> bool:
        return self.name.startswith("?")


TypedVariable = TypedName


@dataclass(frozen=True)
class PredicateDecl:
    name: str
    parameters: tuple[TypedName, ...] = ()
    pos: SrcPos | None = _pos()

    @property
    def arity(self) -> int:
        return len(self.parameters)


@dataclass(frozen=True)
class Atom:
    name: str
    terms: tuple[str, ...] = ()
    pos: SrcPos | None = _pos()
    raw_terms: tuple[str, ...] | None = _pos()

    def raw_term(self, i: int) -> str:
        return self.raw_terms[i] if self.raw_terms else self.terms[i]


@dataclass(frozen=True)
class Not:
    child: Atom


Literal = Union[Atom, Not]


@dataclass(frozen=True)
class And:
    children: tuple[Literal, ...] = ()

    def atoms(self):
        for lit in self.children:
            yield (lit.child, False) if isinstance(lit, Not) else (lit, True)


Formula = Union[Atom, Not, And]


@dataclass(frozen=True)
class ActionSchema:
    name: str
    parameters: tuple[TypedName, ...] = ()
    precondition: And = And()
    effect: And = And()
    pos: SrcPos | None = _pos()


@dataclass(frozen=True)
class DomainAst:
    name: str
    requirements: frozenset[str] = frozenset()
    types: tuple[TypedName, ...] = ()
    constants: tuple[TypedName, ...] = ()
    predicates: tuple[PredicateDecl, ...] = ()
    actions: tuple[ActionSchema, ...] = ()
    pos: SrcPos | None = _pos()
    warnings: tuple = field(default=(), compare=False, repr=False)

    @property
    def type_hierarchy(self) -> dict[str, str]:
        return {t.name: t.type_name for t in self.types}

    def predicate(self, name: str) -> PredicateDecl | None:
        for p in self.predicates:
            if p.name == name:
                return p
        return None

    def action(self, name: str) -> ActionSchema | None:
        for a in self.actions:
            if a.name == name:
                return a
        return None


@dataclass(frozen=True)
class ProblemAst:
    name: str
    domain_name: str
    objects: tuple[TypedName, ...] = ()
    init: tuple[Atom, ...] = ()
    goal: And = And()
    requirements: frozenset[str] = frozenset()
    pos: SrcPos | None = _pos()
    domain_pos: SrcPos | None = _pos()
    warnings: tuple = field(default=(), compare=False, repr=False)


def is_subtype(child: str, parent: str, hierarchy: dict[str, str]) -> bool:
    """True if ``child`` equals ``parent`` or has it as an ancestor."""
    if parent == ROOT_TYPE:
        return True
    seen = set()
    t = child
    while t is not None and t not in seen:
        if t == parent:
            return True
        seen.add(t)
        t = hierarchy.get(t)
    return False
