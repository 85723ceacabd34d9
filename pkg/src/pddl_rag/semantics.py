"""Grounding, STRIPS state transitions and plan validation."""
from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple

from .syntax import ActionSchema, And, DomainAst, ProblemAst, is_subtype
from .syntax.lint import typed_objects

DEFAULT_GROUNDING_CAP = 5_000_000


class GroundAtom(NamedTuple):
    predicate: str
    args: tuple[str, ...] = ()

    def __str__(self) -> str:
        return "(" + " ".join((self.predicate,) + self.args) + ")"


State = frozenset  # frozenset[GroundAtom]; closed world


class GroundingCapacityError(RuntimeError):
    pass


class InapplicableActionError(ValueError):
    pass


class PlanValidationError(ValueError):
    """The plan references an unknown action, wrong arity or unknown object."""


@dataclass(frozen=True)
class GroundAction:
    schema_name: str
    args: tuple[str, ...]
    precondition_pos: frozenset
    precondition_neg: frozenset
    add_set: frozenset
    delete_set: frozenset
    # precondition literals in source order, for reporting the first failure
    precondition: tuple[tuple[GroundAtom, bool], ...] = ()

    def __str__(self) -> str:
        return "(" + " ".join((self.schema_name,) + self.args) + ")"


class PlanStep(NamedTuple):
    name: str
    args: tuple[str, ...] = ()

    def __str__(self) -> str:
        return "(" + " ".join((self.name,) + self.args) + ")"


@dataclass(frozen=True)
class Plan:
    steps: tuple[PlanStep, ...] = ()

    def __len__(self) -> int:
        return len(self.steps)

    def __iter__(self):
        return iter(self.steps)

    def to_text(self) -> str:
        return "".join(f"{s}\n" for s in self.steps)


_STEP = re.compile(
    r"^\s*(?:\d+(?:\.\d+)?\s*:\s*)?\(\s*([^\s()]+)((?:\s+[^\s()]+)*)\s*\)\s*(?:\[[\d.]+\])?\s*$"
)


def parse_plan_step(line: str) -> PlanStep | None:
    m = _STEP.match(line)
    if not m:
        return None
    return PlanStep(m.group(1).lower(), tuple(a.lower() for a in m.group(2).split()))


def parse_plan(text: str) -> Plan:
    """Parse one ``(action arg ...)`` step per line.

    Blank lines and ``;`` comments are skipped; an optional ``N:`` step prefix
    and trailing ``[cost]`` are tolerated.  Any other line is a ValueError.
    """
    steps = []
    for n, line in enumerate(text.splitlines(), start=1):
        s = line.strip()
        if not s or s.startswith(";"):
            continue
        step = parse_plan_step(s)
        if step is None:
            raise ValueError(f"line {n}: plan step expected, got {s!r}")
        steps.append(step)
    return Plan(tuple(steps))


class Verdict(str, Enum):
    VALID = "valid"
    PRECONDITION_FAILURE = "precondition_failure"
    GOAL_UNSATISFIED = "goal_unsatisfied"


@dataclass(frozen=True)
class PlanVerdict:
    status: Verdict
    failing_step: int | None = None  # 1-based
    witness: GroundAtom | None = None
    witness_positive: bool = True

    @property
    def valid(self) -> bool:
        return self.status is Verdict.VALID

    def describe(self) -> str:
        if self.status is Verdict.VALID:
            return "valid"
        lit = str(self.witness) if self.witness_positive else f"(not {self.witness})"
        if self.status is Verdict.PRECONDITION_FAILURE:
            return f"precondition_failure at step {self.failing_step}: {lit} not satisfied"
        return f"goal_unsatisfied: {lit}"


def _bind(atom, sub: dict[str, str]) -> GroundAtom:
    return GroundAtom(atom.name, tuple(sub.get(t, t) for t in atom.terms))


def instantiate(schema: ActionSchema, args: tuple[str, ...]) -> GroundAction:
    sub = {p.name: a for p, a in zip(schema.parameters, args)}
    pre = tuple((_bind(atom, sub), positive) for atom, positive in schema.precondition.atoms())
    adds, dels = set(), set()
    for atom, positive in schema.effect.atoms():
        (adds if positive else dels).add(_bind(atom, sub))
    # delete-before-add: an atom both deleted and added stays true
    dels -= adds
    return GroundAction(
        schema.name,
        tuple(args),
        frozenset(a for a, pos in pre if pos),
        frozenset(a for a, pos in pre if not pos),
        frozenset(adds),
        frozenset(dels),
        pre,
    )


def _candidates(domain: DomainAst, problem: ProblemAst) -> dict[str, list[str]]:
    hierarchy = domain.type_hierarchy
    objs = typed_objects(domain, problem)
    types = {p.type_name for a in domain.actions for p in a.parameters}
    return {t: sorted(o.name for o in objs if is_subtype(o.type_name, t, hierarchy)) for t in types}


def count_groundings(domain: DomainAst, problem: ProblemAst) -> int:
    cands = _candidates(domain, problem)
    total = 0
    for a in domain.actions:
        n = 1
        for p in a.parameters:
            n *= len(cands[p.type_name])
        total += n
    return total


def ground(domain: DomainAst, problem: ProblemAst, cap: int = DEFAULT_GROUNDING_CAP) -> list[GroundAction]:
    """All type-consistent instantiations, in schema order then lexicographic args."""
    total = count_groundings(domain, problem)
    if total > cap:
        raise GroundingCapacityError(f"grounding would produce {total} actions (cap {cap})")
    cands = _candidates(domain, problem)
    out = []
    for schema in domain.actions:
        pools = [cands[p.type_name] for p in schema.parameters]
        for args in itertools.product(*pools):
            out.append(instantiate(schema, args))
    return out


def initial_state(problem: ProblemAst) -> frozenset:
    return frozenset(GroundAtom(a.name, a.terms) for a in problem.init)


def applicable(state: frozenset, action: GroundAction) -> bool:
    return action.precondition_pos <= state and not (action.precondition_neg & state)


def apply(state: frozenset, action: GroundAction) -> frozenset:
    if not applicable(state, action):
        raise InapplicableActionError(f"{action} is not applicable")
    return (state - action.delete_set) | action.add_set


def unsatisfied(state: frozenset, literals) -> tuple[GroundAtom, bool] | None:
    """First literal (atom, positive) not holding in ``state``."""
    for atom, positive in literals:
        if (atom in state) != positive:
            return atom, positive
    return None


def goal_literals(goal: And) -> tuple[tuple[GroundAtom, bool], ...]:
    return tuple((GroundAtom(a.name, a.terms), pos) for a, pos in goal.atoms())


def goal_satisfied(state: frozenset, goal: And) -> bool:
    return unsatisfied(state, goal_literals(goal)) is None


def resolve_step(domain: DomainAst, problem: ProblemAst, step: PlanStep) -> GroundAction:
    schema = domain.action(step.name)
    if schema is None:
        raise PlanValidationError(f"unknown action '{step.name}'")
    if len(schema.parameters) != len(step.args):
        raise PlanValidationError(
            f"action '{step.name}' takes {len(schema.parameters)} argument(s), got {len(step.args)}"
        )
    objs = {o.name: o.type_name for o in typed_objects(domain, problem)}
    hierarchy = domain.type_hierarchy
    for param, arg in zip(schema.parameters, step.args):
        if arg not in objs:
            raise PlanValidationError(f"unknown object '{arg}' in {step}")
        if not is_subtype(objs[arg], param.type_name, hierarchy):
            raise PlanValidationError(f"object '{arg}' is not of type '{param.type_name}' in {step}")
    return instantiate(schema, step.args)


def validate_plan(domain: DomainAst, problem: ProblemAst, plan: Plan) -> PlanVerdict:
    """Simulate ``plan`` from the initial state and check the goal."""
    actions = [resolve_step(domain, problem, s) for s in plan]
    state = initial_state(problem)
    for i, act in enumerate(actions, start=1):
        miss = unsatisfied(state, act.precondition)
        if miss is not None:
            return PlanVerdict(Verdict.PRECONDITION_FAILURE, i, miss[0], miss[1])
        state = (state - act.delete_set) | act.add_set
    miss = unsatisfied(state, goal_literals(problem.goal))
    if miss is not None:
        return PlanVerdict(Verdict.GOAL_UNSATISFIED, None, miss[0], miss[1])
    return PlanVerdict(Verdict.VALID)
