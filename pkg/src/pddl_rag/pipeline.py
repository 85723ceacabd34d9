"""Generation variants and the solve / retrieve / refine loop.

One task runs sequentially: generate a DF/PF pair, solve it, and while the
solver reports an error and the round budget allows, refine.  What each
refinement sees depends on the variant and on the error class:

* DF syntax error under ``code_retrieved``: the LLM first quotes the
  offending code, that snippet is the retrieval query, and the refinement
  prompt carries snippet, feedback and retrieved documentation.
* syntax error under ``feedback_retrieved``: the feedback message is the
  query; the refinement prompt carries feedback and documentation.
* everything else (``no_doc``, PF syntax errors under ``code_retrieved``,
  semantic errors, timeouts): feedback only.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import Callable, Sequence

from .docs import COMPONENT_SECTIONS, DocCorpus, render_section, section_for_component, view
from .llm import GatewayError, Provider, Transcript, complete, render_prompt
from .planner import FeedbackStatus, PlannerConfig, SolverFeedback, solve
from .retrieval import (
    EmbeddingRetriever,
    RetrievalUnavailable,
    RetrieverConfig,
    ScoredSection,
    build_index,
    retrieve,
)
from .syntax import FileKind, PddlSyntaxError, extract_pddl_blocks, parse_domain, parse_problem

GENERATIONS = ("base", "once_whole_doc", "once_whole_examples", "once_whole_descriptions", "modular_specific_doc")
REFINEMENTS = ("none", "no_doc", "feedback_retrieved", "code_retrieved")
MAX_ROUNDS = 3

_ONCE_VIEWS = {
    "once_whole_doc": "whole",
    "once_whole_examples": "examples_only",
    "once_whole_descriptions": "descriptions_only",
}
_GEN_TEMPLATE = {
    "base": "base_generate",
    **{g: "whole_doc_generate" for g in _ONCE_VIEWS},
    "modular_specific_doc": "modular_generate",
}
MODULAR_ORDER = ("types", "predicates", "actions", "objects", "init", "goal")
_DOMAIN_COMPONENTS = {"types", "predicates", "actions"}


class UnknownErrorType(ValueError):
    """Feedback whose status/file combination no branch handles."""


@dataclass(frozen=True)
class MethodVariant:
    generation: str = "base"
    refinement: str = "none"
    max_rounds: int | None = None
    # feedback_retrieved: skip retrieval for PF syntax errors, like code_retrieved
    strict_algorithm: bool = False

    def __post_init__(self):
        if self.generation not in GENERATIONS:
            raise ValueError(f"unknown generation {self.generation!r}")
        if self.refinement not in REFINEMENTS:
            raise ValueError(f"unknown refinement {self.refinement!r}")
        if self.max_rounds is None:
            object.__setattr__(self, "max_rounds", 0 if self.refinement == "none" else MAX_ROUNDS)
        if not 0 <= self.max_rounds <= MAX_ROUNDS:
            raise ValueError(f"max_rounds must be in [0, {MAX_ROUNDS}]")
        if (self.max_rounds == 0) != (self.refinement == "none"):
            raise ValueError("max_rounds is 0 exactly when refinement is 'none'")

    @property
    def label(self) -> str:
        return f"{self.generation}+{self.refinement}@{self.max_rounds}"

    def to_dict(self) -> dict:
        return {
            "generation": self.generation,
            "refinement": self.refinement,
            "max_rounds": self.max_rounds,
            "strict_algorithm": self.strict_algorithm,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MethodVariant":
        return cls(**d)


@dataclass(frozen=True)
class GeneratedPair:
    df_text: str | None
    pf_text: str | None
    df_ast: object = field(default=None, compare=False, repr=False)
    pf_ast: object = field(default=None, compare=False, repr=False)

    @classmethod
    def from_texts(cls, df_text: str | None, pf_text: str | None) -> "GeneratedPair":
        df_ast = pf_ast = None
        if df_text:
            try:
                df_ast = parse_domain(df_text)
            except PddlSyntaxError:
                pass
        if pf_text:
            try:
                pf_ast = parse_problem(pf_text)
            except PddlSyntaxError:
                pass
        return cls(df_text, pf_text, df_ast, pf_ast)

    def to_dict(self) -> dict:
        return {"df": self.df_text, "pf": self.pf_text}


@dataclass(frozen=True)
class ErrorLocalization:
    snippet: str
    offending_token: str | None = None

    def query(self) -> str:
        return f"{self.snippet} {self.offending_token}" if self.offending_token else self.snippet


@dataclass
class RoundRecord:
    round: int
    pair_before: GeneratedPair | None
    pair_after: GeneratedPair
    feedback: SolverFeedback
    tags: list[str] = field(default_factory=list)
    template: str | None = None
    query: str | None = None
    retrieved: list[ScoredSection] = field(default_factory=list)
    localization: ErrorLocalization | None = None
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "round": self.round,
            "tags": list(self.tags),
            "template": self.template,
            "pair_before": self.pair_before.to_dict() if self.pair_before else None,
            "pair_after": self.pair_after.to_dict(),
            "feedback": self.feedback.to_dict(),
            "query": self.query,
            "retrieved": [{"section_id": s.section_id, "score": s.score} for s in self.retrieved],
            "localization": (
                {"snippet": self.localization.snippet, "offending_token": self.localization.offending_token}
                if self.localization else None
            ),
            "notes": list(self.notes),
        }


@dataclass
class PipelineTrace:
    task_id: str
    variant: MethodVariant
    rounds: list[RoundRecord] = field(default_factory=list)
    error: str | None = None

    @property
    def final_feedback(self) -> SolverFeedback | None:
        return self.rounds[-1].feedback if self.rounds else None

    @property
    def final_pair(self) -> GeneratedPair | None:
        return self.rounds[-1].pair_after if self.rounds else None

    @property
    def refinements(self) -> int:
        return max(0, len(self.rounds) - 1)

    def to_dict(self) -> dict:
        return {
            "task_id": self.task_id,
            "variant": self.variant.to_dict(),
            "error": self.error,
            "rounds": [r.to_dict() for r in self.rounds],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, ensure_ascii=False) + "\n"


class DocRetriever:
    """BM25 over the corpus, or embeddings with a BM25 fallback."""

    def __init__(self, corpus: DocCorpus, cfg: RetrieverConfig | None = None,
                 embedder: Callable[[str], Sequence[float]] | None = None, model_name: str = "default",
                 cache_path=None):
        self.corpus = corpus
        self.cfg = cfg or RetrieverConfig()
        self.index = build_index(corpus, self.cfg)
        self.embedding = None
        if self.cfg.kind == "embedding":
            if embedder is None:
                raise ValueError("embedding retrieval needs an embedder")
            self.embedding = EmbeddingRetriever(corpus, embedder, model_name, cache_path)

    def retrieve(self, query: str) -> tuple[list[ScoredSection], str | None]:
        """Ranked sections plus a note when the embedding backend fell back."""
        if self.embedding is not None:
            try:
                return self.embedding.retrieve(query, self.cfg), None
            except RetrievalUnavailable as e:
                bm25_cfg = RetrieverConfig("bm25", self.cfg.k1, self.cfg.b, self.cfg.top_k)
                return retrieve(self.index, query, bm25_cfg), f"embedding retrieval unavailable, used bm25: {e}"
        return retrieve(self.index, query, self.cfg), None

    def render(self, hits: list[ScoredSection]) -> str:
        return "\n\n".join(render_section(self.corpus.by_id(h.section_id)) for h in hits)


def _ask(template_id: str, bindings: dict, tag: str, provider: Provider,
         transcript: Transcript | None, calls: list[str] | None) -> str:
    req = render_prompt(template_id, bindings, tag=tag)
    if calls is not None:
        calls.append(tag)
    return complete(req, provider, transcript)


def generate_initial(task, variant: MethodVariant, corpus: DocCorpus | None, provider: Provider,
                     transcript: Transcript | None = None, calls: list[str] | None = None) -> GeneratedPair:
    """Round-0 generation for every generation variant."""
    dd, pd = task.dd_text, task.pd_text
    gen = variant.generation
    if gen != "base" and corpus is None:
        raise ValueError(f"generation {gen!r} needs a documentation corpus")

    if gen == "base":
        text = _ask("base_generate", {"DD": dd, "PD": pd}, "base", provider, transcript, calls)
        return GeneratedPair.from_texts(*extract_pddl_blocks(text))

    if gen in _ONCE_VIEWS:
        doc = view(corpus, _ONCE_VIEWS[gen])
        tag = gen.replace("_", "-")
        text = _ask("whole_doc_generate", {"DD": dd, "PD": pd, "DOC": doc}, tag, provider, transcript, calls)
        return GeneratedPair.from_texts(*extract_pddl_blocks(text))

    df = pf = None
    for component in MODULAR_ORDER:
        bindings = {
            "DD": dd,
            "PD": pd,
            "SECTION_DOC": render_section(section_for_component(corpus, component)),
            "COMPONENT_KIND": component,
            "PARTIAL_DF": df or "(empty)",
            "PARTIAL_PF": pf or "(empty)",
        }
        text = _ask("modular_generate", bindings, f"modular-{component}", provider, transcript, calls)
        got_df, got_pf = extract_pddl_blocks(text)
        if component in _DOMAIN_COMPONENTS:
            df = got_df or df
        else:
            pf = got_pf or pf
    return GeneratedPair.from_texts(df, pf)


@dataclass
class RefineOutcome:
    pair: GeneratedPair
    template: str
    query: str | None = None
    retrieved: list[ScoredSection] = field(default_factory=list)
    localization: ErrorLocalization | None = None
    notes: list[str] = field(default_factory=list)


_FENCE_BODY = re.compile(r"```[^\n`]*\n(.*?)```", re.DOTALL)


def _localized_snippet(text: str, pair: GeneratedPair, feedback: SolverFeedback) -> str:
    m = _FENCE_BODY.search(text)
    snippet = (m.group(1) if m else text).strip()
    if not snippet and pair.df_text and feedback.line:
        lines = pair.df_text.splitlines()
        if 0 < feedback.line <= len(lines):
            snippet = lines[feedback.line - 1].strip()
    return snippet or (feedback.token or feedback.message)


def refine_once(pair: GeneratedPair, feedback: SolverFeedback, variant: MethodVariant,
                corpus: DocCorpus | None, provider: Provider, *, round_index: int = 1,
                retriever: DocRetriever | None = None, transcript: Transcript | None = None,
                calls: list[str] | None = None) -> RefineOutcome:
    """One refinement step; the branch follows the error class and variant."""
    if variant.refinement == "none":
        raise ValueError("variant has no refinement")
    if feedback.status is FeedbackStatus.SUCCESS or not feedback.consistent:
        raise UnknownErrorType(f"cannot refine on feedback {feedback.status.value}/{feedback.file}")

    df, pf = pair.df_text or "", pair.pf_text or ""
    is_syntax = feedback.status is FeedbackStatus.SYNTAX_ERROR
    mode = variant.refinement
    use_code = is_syntax and mode == "code_retrieved" and feedback.file is FileKind.DF
    use_feedback = is_syntax and mode == "feedback_retrieved" and (
        feedback.file is FileKind.DF or not variant.strict_algorithm
    )

    out = RefineOutcome(pair, "refine_no_doc")
    if use_code or use_feedback:
        if corpus is None:
            raise ValueError(f"refinement {mode!r} needs a documentation corpus")
        retriever = retriever or DocRetriever(corpus)
        err_code = None
        if use_code:
            text = _ask("localize_error_code", {"DF": df, "FEEDBACK": feedback.message},
                        f"localize-round-{round_index}", provider, transcript, calls)
            out.localization = ErrorLocalization(_localized_snippet(text, pair, feedback), feedback.token)
            out.query = out.localization.query()
            err_code = out.localization.snippet
        else:
            out.query = feedback.message
        out.retrieved, note = retriever.retrieve(out.query)
        if note:
            out.notes.append(note)
        out.template = "refine_with_doc"
        bindings = {"DF": df, "PF": pf, "FEEDBACK": feedback.message,
                    "ERR_CODE": err_code, "REL_DOC": retriever.render(out.retrieved)}
    else:
        bindings = {"DF": df, "PF": pf, "FEEDBACK": feedback.message}

    text = _ask(out.template, bindings, f"refine-round-{round_index}", provider, transcript, calls)
    new_df, new_pf = extract_pddl_blocks(text)
    if new_df is None and new_pf is None:
        out.notes.append("refinement response had no PDDL; previous pair retained")
        return out
    out.pair = GeneratedPair.from_texts(new_df or pair.df_text, new_pf or pair.pf_text)
    return out


def check_pair_feedback(pair: GeneratedPair, planner_cfg: PlannerConfig) -> SolverFeedback:
    if not pair.df_text:
        return SolverFeedback(FeedbackStatus.GENERATION_FAILURE, FileKind.DF, "no domain file found in the response")
    if not pair.pf_text:
        return SolverFeedback(FeedbackStatus.GENERATION_FAILURE, FileKind.PF, "no problem file found in the response")
    return solve(pair.df_text, pair.pf_text, planner_cfg)


def run_task(task, variant: MethodVariant, corpus: DocCorpus | None, provider: Provider,
             planner_cfg: PlannerConfig | None = None, *, retriever: DocRetriever | None = None,
             transcript: Transcript | None = None) -> PipelineTrace:
    """Generate, then solve and refine until success or the round budget ends.

    Gateway failures stop the task and are recorded in ``trace.error``.
    """
    planner_cfg = planner_cfg or PlannerConfig()
    trace = PipelineTrace(task.task_id, variant)
    calls: list[str] = []
    try:
        pair = generate_initial(task, variant, corpus, provider, transcript, calls)
    except GatewayError as e:
        trace.error = f"{type(e).__name__}: {e}"
        return trace
    feedback = check_pair_feedback(pair, planner_cfg)
    trace.rounds.append(RoundRecord(0, None, pair, feedback, calls, _GEN_TEMPLATE[variant.generation]))

    if variant.refinement != "none" and corpus is not None and retriever is None:
        retriever = DocRetriever(corpus)
    for r in range(1, variant.max_rounds + 1):
        if feedback.status is FeedbackStatus.SUCCESS:
            break
        calls = []
        try:
            out = refine_once(pair, feedback, variant, corpus, provider, round_index=r,
                              retriever=retriever, transcript=transcript, calls=calls)
        except GatewayError as e:
            trace.error = f"{type(e).__name__}: {e}"
            break
        feedback = check_pair_feedback(out.pair, planner_cfg)
        trace.rounds.append(RoundRecord(r, pair, out.pair, feedback, calls, out.template, out.query,
                                        out.retrieved, out.localization, out.notes))
        pair = out.pair
    return trace


__all__ = [
    "COMPONENT_SECTIONS", "GENERATIONS", "REFINEMENTS", "MODULAR_ORDER", "DocRetriever", "ErrorLocalization",
    "GeneratedPair", "MethodVariant", "PipelineTrace", "RefineOutcome", "RoundRecord", "UnknownErrorType",
    "check_pair_feedback", "generate_initial", "refine_once", "run_task",
]
