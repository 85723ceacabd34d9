"""Turn DF/PF text into a plan or classified solver feedback.

Every outcome, whether from our own pre-flight checks, the built-in
breadth-first planner or an external planner binary, is normalized into a
:class:`SolverFeedback`.
"""
from __future__ import annotations

import os
import re
import shlex
import signal
import subprocess
import tempfile
import time
from collections import deque
from dataclasses import asdict, dataclass
from enum import Enum
from pathlib import Path

from .semantics import (
    DEFAULT_GROUNDING_CAP,
    GroundingCapacityError,
    Plan,
    PlanStep,
    PlanValidationError,
    goal_literals,
    ground,
    initial_state,
    parse_plan_step,
    validate_plan,
)
from .syntax import DomainAst, FileKind, ProblemAst, check_pair, errors_only


class FeedbackStatus(str, Enum):
    SUCCESS = "success"
    SYNTAX_ERROR = "syntax_error"
    SEMANTIC_ERROR = "semantic_error"
    TIMEOUT = "timeout"
    # no domain or problem block could be extracted from the LLM response
    GENERATION_FAILURE = "generation_failure"


@dataclass(frozen=True)
class SolverFeedback:
    status: FeedbackStatus
    file: FileKind | None = None
    message: str = ""
    line: int | None = None
    token: str | None = None
    plan: Plan | None = None

    @property
    def consistent(self) -> bool:
        if (self.status is FeedbackStatus.SUCCESS) != (self.plan is not None):
            return False
        if self.status is FeedbackStatus.SYNTAX_ERROR:
            return self.file is not None
        if self.status in (FeedbackStatus.SEMANTIC_ERROR, FeedbackStatus.TIMEOUT):
            return self.file is None
        return True

    def to_dict(self) -> dict:
        return {
            "status": self.status.value,
            "file": self.file.value if self.file else None,
            "message": self.message,
            "line": self.line,
            "token": self.token,
            "plan": [str(s) for s in self.plan] if self.plan is not None else None,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SolverFeedback":
        plan = None
        if d.get("plan") is not None:
            plan = Plan(tuple(parse_plan_step(s) for s in d["plan"]))
        return cls(
            FeedbackStatus(d["status"]),
            FileKind(d["file"]) if d.get("file") else None,
            d.get("message", ""),
            d.get("line"),
            d.get("token"),
            plan,
        )


class PlannerConfigError(ValueError):
    pass


class PlannerTimeout(RuntimeError):
    pass


class SearchLimitExceeded(RuntimeError):
    pass


@dataclass
class PlannerConfig:
    mode: str = "builtin"  # builtin | external
    timeout_seconds: float = 60.0
    external_command: str | None = None  # e.g. "planner {df} {pf}"
    search_node_cap: int = 2_000_000
    grounding_cap: int = DEFAULT_GROUNDING_CAP
    scratch_dir: str | None = None
    strict: bool = False

    def __post_init__(self):
        if self.mode not in ("builtin", "external"):
            raise PlannerConfigError(f"unknown planner mode {self.mode!r}")
        if self.timeout_seconds <= 0:
            raise PlannerConfigError("timeout_seconds must be positive")
        if self.search_node_cap <= 0:
            raise PlannerConfigError("search_node_cap must be positive")
        if (self.mode == "external") != bool(self.external_command):
            raise PlannerConfigError("external_command is required exactly when mode is 'external'")

    @classmethod
    def from_dict(cls, d: dict | None) -> "PlannerConfig":
        try:
            return cls(**(d or {}))
        except TypeError as e:
            raise PlannerConfigError(str(e)) from None

    def to_dict(self) -> dict:
        return asdict(self)


# -- normalization ----------------------------------------------------------

_SYNTAX_LINE = {
    FileKind.DF: re.compile(r"^\s*domain: syntax error.*$", re.MULTILINE | re.IGNORECASE),
    FileKind.PF: re.compile(r"^\s*problem: syntax error.*$", re.MULTILINE | re.IGNORECASE),
}
_LINE_NO = re.compile(r"in line (\d+)", re.IGNORECASE)
_TOKEN = re.compile(r",\s*'(.*?)'(?::|\s*$)")
_NO_PLAN = re.compile(r"no (?:plan|solution)|unsolvable|goal (?:can|could)\s*not be", re.IGNORECASE)
_PLAN_FOUND = re.compile(r"found legal plan|plan found|solution found", re.IGNORECASE)


def normalize_feedback(raw: str, origin: str = "external") -> SolverFeedback:
    """Classify raw solver output.  Total: every string maps to one feedback.

    ``origin`` (preflight, builtin, external) is informational only; the
    classification depends on the text alone.
    """
    raw = raw or ""
    for kind in (FileKind.DF, FileKind.PF):
        m = _SYNTAX_LINE[kind].search(raw)
        if m:
            text = m.group(0).strip()
            ln = _LINE_NO.search(text)
            tok = _TOKEN.search(text)
            return SolverFeedback(
                FeedbackStatus.SYNTAX_ERROR,
                kind,
                text,
                int(ln.group(1)) if ln else None,
                tok.group(1) if tok else None,
            )
    steps = [s for s in (parse_plan_step(line) for line in raw.splitlines()) if s is not None]
    if steps:
        return SolverFeedback(FeedbackStatus.SUCCESS, None, raw.strip(), plan=Plan(tuple(steps)))
    if _PLAN_FOUND.search(raw) and not _NO_PLAN.search(raw):
        return SolverFeedback(FeedbackStatus.SUCCESS, None, raw.strip(), plan=Plan())
    return SolverFeedback(FeedbackStatus.SEMANTIC_ERROR, None, raw.strip() or "no plan found")


# -- built-in search --------------------------------------------------------


def solve_builtin(domain: DomainAst, problem: ProblemAst, cfg: PlannerConfig | None = None) -> Plan | None:
    """Breadth-first search with duplicate detection; shortest plan or None.

    Raises :class:`SearchLimitExceeded` when the node cap or the time budget
    is exhausted.
    """
    cfg = cfg or PlannerConfig()
    deadline = time.monotonic() + cfg.timeout_seconds
    try:
        actions = ground(domain, problem, cfg.grounding_cap)
    except GroundingCapacityError as e:
        raise SearchLimitExceeded(str(e)) from None

    ids: dict = {}

    def intern(atoms):
        return frozenset(ids.setdefault(a, len(ids)) for a in atoms)

    compiled = [
        (intern(a.precondition_pos), intern(a.precondition_neg), intern(a.add_set), intern(a.delete_set))
        for a in actions
    ]
    goal = goal_literals(problem.goal)
    goal_pos = intern(a for a, pos in goal if pos)
    goal_neg = intern(a for a, pos in goal if not pos)
    start = intern(initial_state(problem))

    def is_goal(s):
        return goal_pos <= s and not (goal_neg & s)

    def extract(s):
        steps = []
        while parents[s] is not None:
            s, idx = parents[s]
            steps.append(PlanStep(actions[idx].schema_name, actions[idx].args))
        return Plan(tuple(reversed(steps)))

    parents: dict = {start: None}
    if is_goal(start):
        return Plan()
    frontier = deque([start])
    while frontier:
        if time.monotonic() > deadline:
            raise SearchLimitExceeded(f"time budget of {cfg.timeout_seconds}s exhausted")
        s = frontier.popleft()
        for idx, (pre, neg, add, dele) in enumerate(compiled):
            if pre <= s and not (neg & s):
                t = (s - dele) | add
                if t in parents:
                    continue
                parents[t] = (s, idx)
                if is_goal(t):
                    return extract(t)
                if len(parents) > cfg.search_node_cap:
                    raise SearchLimitExceeded(f"search node cap {cfg.search_node_cap} exceeded")
                frontier.append(t)
    return None


# -- external planner -------------------------------------------------------


@dataclass(frozen=True)
class ExternalRun:
    output: str
    returncode: int


def solve_external(df_path: str | Path, pf_path: str | Path, cfg: PlannerConfig) -> ExternalRun:
    """Run the configured planner command; combined stdout/stderr is captured."""
    if cfg.mode != "external" or not cfg.external_command:
        raise PlannerConfigError("solve_external requires mode='external' and an external_command")
    argv = [a.replace("{df}", str(df_path)).replace("{pf}", str(pf_path)) for a in shlex.split(cfg.external_command)]
    try:
        proc = subprocess.Popen(
            argv, stdout=subprocess.PIPE, stderr=subprocess.STDOUT, start_new_session=True,
        )
    except (FileNotFoundError, PermissionError) as e:
        raise PlannerConfigError(f"cannot launch planner {argv[0]!r}: {e}") from None
    try:
        out, _ = proc.communicate(timeout=cfg.timeout_seconds)
    except subprocess.TimeoutExpired:
        try:
            os.killpg(proc.pid, signal.SIGKILL)
        except ProcessLookupError:
            pass
        proc.communicate()
        raise PlannerTimeout(f"planner exceeded {cfg.timeout_seconds}s") from None
    return ExternalRun(out.decode("utf-8", errors="replace"), proc.returncode)


# -- entry point ------------------------------------------------------------


def _timeout(msg: str) -> SolverFeedback:
    return SolverFeedback(FeedbackStatus.TIMEOUT, None, msg)


def solve(df_text: str, pf_text: str, cfg: PlannerConfig | None = None) -> SolverFeedback:
    """Pre-flight parse and lint, then search.  DF errors mask PF errors."""
    cfg = cfg or PlannerConfig()
    domain, problem, diags = check_pair(df_text, pf_text, strict=cfg.strict)
    errs = errors_only(diags)
    if errs:
        return normalize_feedback(errs[0].format(), "preflight")

    if cfg.mode == "builtin":
        try:
            plan = solve_builtin(domain, problem, cfg)
        except SearchLimitExceeded as e:
            return _timeout(str(e))
        if plan is None:
            return SolverFeedback(FeedbackStatus.SEMANTIC_ERROR, None, "no plan found")
        return SolverFeedback(FeedbackStatus.SUCCESS, None, plan.to_text().strip(), plan=plan)

    if cfg.scratch_dir:
        Path(cfg.scratch_dir).mkdir(parents=True, exist_ok=True)
    with tempfile.TemporaryDirectory(dir=cfg.scratch_dir, prefix="solve-") as tmp:
        df_path, pf_path = Path(tmp, "domain.pddl"), Path(tmp, "problem.pddl")
        df_path.write_text(df_text, encoding="utf-8")
        pf_path.write_text(pf_text, encoding="utf-8")
        try:
            run = solve_external(df_path, pf_path, cfg)
        except PlannerTimeout as e:
            return _timeout(str(e))
    fb = normalize_feedback(run.output, "external")
    if fb.status is FeedbackStatus.SUCCESS:
        if run.returncode != 0:
            return SolverFeedback(FeedbackStatus.SEMANTIC_ERROR, None, run.output.strip())
        try:
            verdict = validate_plan(domain, problem, fb.plan)
        except PlanValidationError as e:
            return SolverFeedback(FeedbackStatus.SEMANTIC_ERROR, None, f"planner returned an unusable plan: {e}")
        if not verdict.valid:
            return SolverFeedback(FeedbackStatus.SEMANTIC_ERROR, None, f"planner returned an invalid plan: {verdict.describe()}")
    return fb
