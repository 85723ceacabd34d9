"""Prompt templates for each generation and refinement step."""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from string import Template

PLACEHOLDERS: dict[str, frozenset[str]] = {
    "base_generate": frozenset({"DD", "PD"}),
    "whole_doc_generate": frozenset({"DD", "PD", "DOC"}),
    "modular_generate": frozenset({"DD", "PD", "SECTION_DOC", "COMPONENT_KIND", "PARTIAL_DF", "PARTIAL_PF"}),
    "refine_no_doc": frozenset({"DF", "PF", "FEEDBACK"}),
    "refine_with_doc": frozenset({"DF", "PF", "FEEDBACK", "REL_DOC"}),
    "localize_error_code": frozenset({"DF", "FEEDBACK"}),
}
OPTIONAL: dict[str, frozenset[str]] = {"refine_with_doc": frozenset({"ERR_CODE"})}

DEFAULT_MAX_TOKENS = 4096


class PromptError(KeyError):
    pass


@dataclass(frozen=True)
class ChatRequest:
    messages: tuple[tuple[str, str], ...]
    tag: str
    temperature: float = 0.0
    max_tokens: int = DEFAULT_MAX_TOKENS

    def __post_init__(self):
        if not self.messages:
            raise ValueError("a chat request needs at least one message")
        if not self.tag:
            raise ValueError("a chat request needs a tag")
        if self.max_tokens <= 0:
            raise ValueError("max_tokens must be positive")

    def payload(self) -> dict:
        return {
            "messages": [{"role": r, "content": c} for r, c in self.messages],
            "temperature": self.temperature,
            "max_tokens": self.max_tokens,
        }

    def digest(self) -> str:
        blob = json.dumps(self.payload(), sort_keys=True, ensure_ascii=False).encode("utf-8")
        return hashlib.sha256(blob).hexdigest()

    @property
    def user_text(self) -> str:
        return "\n".join(c for r, c in self.messages if r == "user")


@lru_cache(maxsize=None)
def template_body(template_id: str) -> str:
    if template_id not in PLACEHOLDERS and template_id != "system":
        raise PromptError(f"unknown template {template_id!r}")
    return resources.files("pddl_rag.llm").joinpath("templates").joinpath(f"{template_id}.txt").read_text(encoding="utf-8")


def render_prompt(template_id: str, bindings: dict[str, str], tag: str | None = None,
                  max_tokens: int = DEFAULT_MAX_TOKENS) -> ChatRequest:
    """Bind a template.  Missing or unexpected placeholders raise PromptError."""
    required = PLACEHOLDERS.get(template_id)
    if required is None:
        raise PromptError(f"unknown template {template_id!r}")
    optional = OPTIONAL.get(template_id, frozenset())
    given = {k for k, v in bindings.items() if v is not None}
    missing = required - given
    if missing:
        raise PromptError(f"{template_id}: unbound placeholder(s) {sorted(missing)}")
    extra = given - required - optional
    if extra:
        raise PromptError(f"{template_id}: unknown placeholder(s) {sorted(extra)}")

    values = {k: str(bindings[k]) for k in required}
    if template_id == "refine_with_doc":
        err = bindings.get("ERR_CODE")
        values["ERR_CODE_BLOCK"] = f"\nCode that caused the error:\n{err}\n" if err else ""
    body = Template(template_body(template_id)).substitute(values)
    system = template_body("system").strip()
    return ChatRequest((("system", system), ("user", body)), tag or template_id, 0.0, max_tokens)
