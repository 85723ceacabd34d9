"""PDDL documentation corpus: typed sections plus the views the prompts use."""
from __future__ import annotations

import json
import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

TYPE_NAMES = (
    "Domain", "Requirements", "Types", "Predicates", "Actions",
    "Problem", "Objects", "InitialState", "Goal",
)
DOMAIN_LEVEL = {"Requirements", "Types", "Predicates", "Actions"}
PROBLEM_LEVEL = {"Objects", "InitialState", "Goal"}

COMPONENT_SECTIONS = {
    "types": "Types",
    "predicates": "Predicates",
    "actions": "Actions",
    "objects": "Objects",
    "init": "InitialState",
    "goal": "Goal",
}

VIEW_MODES = ("whole", "examples_only", "descriptions_only", "section")


class CorpusError(ValueError):
    pass


@dataclass(frozen=True)
class DocSection:
    section_id: str
    type_name: str
    description: str
    examples: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {
            "section_id": self.section_id,
            "type_name": self.type_name,
            "documentation": self.description,
            "examples": list(self.examples),
        }


@dataclass(frozen=True)
class DocCorpus:
    sections: tuple[DocSection, ...]
    source_label: str = ""

    def __post_init__(self):
        if not self.sections:
            raise CorpusError("corpus has no sections")
        ids, types = set(), set()
        for s in self.sections:
            if s.type_name not in TYPE_NAMES:
                raise CorpusError(f"unknown type_name {s.type_name!r} in section {s.section_id!r}")
            if not s.description.strip():
                raise CorpusError(f"section {s.section_id!r} has an empty description")
            if s.section_id in ids:
                raise CorpusError(f"duplicate section_id {s.section_id!r}")
            if s.type_name in types:
                raise CorpusError(f"duplicate type_name {s.type_name!r}")
            ids.add(s.section_id)
            types.add(s.type_name)

    def by_type(self, type_name: str) -> DocSection:
        for s in self.sections:
            if s.type_name == type_name:
                return s
        raise CorpusError(f"corpus has no {type_name!r} section")

    def by_id(self, section_id: str) -> DocSection:
        for s in self.sections:
            if s.section_id == section_id:
                return s
        raise KeyError(section_id)

    def to_json(self) -> str:
        return json.dumps([s.to_dict() for s in self.sections], indent=2, ensure_ascii=False) + "\n"


def _section_from_dict(d: dict, where: str) -> DocSection:
    try:
        examples = d.get("examples", [])
        if isinstance(examples, str):
            examples = [examples]
        return DocSection(
            str(d.get("section_id") or d["type_name"].lower()),
            d["type_name"],
            d.get("documentation", d.get("description", "")),
            tuple(examples),
        )
    except (KeyError, TypeError, AttributeError) as e:
        raise CorpusError(f"{where}: malformed section record ({e})") from None


_FIELD = re.compile(r"^(type_name|section_id|documentation)\s*:\s*(.*)$", re.IGNORECASE)
_EXAMPLE_HDR = re.compile(r"^\s*examples?\s*:\s*$", re.IGNORECASE)
_FENCED = re.compile(r"```[^\n]*\n(.*?)```", re.DOTALL)


def parse_section_text(text: str, where: str = "<text>") -> DocSection:
    """Parse the ``type_name: / documentation: / Example:`` record layout."""
    fields: dict[str, str] = {}
    doc_lines: list[str] = []
    lines = text.splitlines()
    i = 0
    in_doc = False
    while i < len(lines):
        line = lines[i]
        if _EXAMPLE_HDR.match(line):
            break
        m = _FIELD.match(line)
        if m:
            key = m.group(1).lower()
            in_doc = key == "documentation"
            if in_doc:
                doc_lines = [m.group(2)]
            else:
                fields[key] = m.group(2).strip()
        elif in_doc:
            doc_lines.append(line)
        i += 1
    rest = "\n".join(lines[i + 1:])
    examples = [b.strip("\n") for b in _FENCED.findall(rest)]
    if not examples and rest.strip():
        examples = [rest.strip("\n")]
    if "type_name" not in fields:
        raise CorpusError(f"{where}: missing type_name")
    fields["documentation"] = " ".join(l.strip() for l in doc_lines).strip()
    fields["examples"] = examples
    return _section_from_dict(fields, where)


def load_corpus(path: str | Path | None = None) -> DocCorpus:
    """Load a corpus file (JSON array) or a directory of per-section files.

    With no path, the bundled corpus is returned.
    """
    if path is None:
        text = resources.files("pddl_rag.data").joinpath("corpus.json").read_text(encoding="utf-8")
        return _from_records(json.loads(text), "bundled")
    p = Path(path)
    if p.is_dir():
        files = sorted(f for f in p.iterdir() if f.suffix.lower() in (".json", ".md", ".txt"))
        if not files:
            raise CorpusError(f"{p}: no section files found")
        sections = []
        for f in files:
            text = f.read_text(encoding="utf-8")
            if f.suffix.lower() == ".json":
                data = json.loads(text)
                records = data if isinstance(data, list) else [data]
                sections.extend(_section_from_dict(r, str(f)) for r in records)
            else:
                sections.append(parse_section_text(text, str(f)))
        return DocCorpus(tuple(sections), str(p))
    if not p.exists():
        raise CorpusError(f"{p}: no such corpus")
    try:
        data = json.loads(p.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise CorpusError(f"{p}: invalid JSON ({e})") from None
    if not isinstance(data, list):
        raise CorpusError(f"{p}: expected a JSON array of sections")
    return _from_records(data, str(p))


def _from_records(records: list, label: str) -> DocCorpus:
    return DocCorpus(tuple(_section_from_dict(r, label) for r in records), label)


def render_section(section: DocSection, descriptions: bool = True, examples: bool = True) -> str:
    out = [f"type_name: {section.type_name}"]
    if descriptions:
        out.append(f"documentation: {section.description}")
    if examples and section.examples:
        out.append("Example:")
        out.append("\n\n".join(section.examples))
    return "\n".join(out)


def view(corpus: DocCorpus, mode: str = "whole", type_name: str | None = None) -> str:
    """Render the corpus (or one section) as prompt text."""
    if mode == "section":
        if type_name is None:
            raise CorpusError("section view needs a type_name")
        return render_section(corpus.by_type(type_name)) + "\n"
    if mode not in VIEW_MODES:
        raise CorpusError(f"unknown view mode {mode!r}")
    desc = mode in ("whole", "descriptions_only")
    ex = mode in ("whole", "examples_only")
    return "\n\n".join(render_section(s, desc, ex) for s in corpus.sections) + "\n"


def section_for_component(corpus: DocCorpus, component: str) -> DocSection:
    try:
        type_name = COMPONENT_SECTIONS[component]
    except KeyError:
        raise CorpusError(f"unknown component {component!r}") from None
    return corpus.by_type(type_name)


def wrap_example(type_name: str, snippet: str) -> tuple[str, str | None]:
    """Wrap a documentation snippet into parseable file text.

    Returns ``(df_text, pf_text)``; ``pf_text`` is None for domain-level
    snippets.  Full ``define`` snippets are returned as-is.
    """
    reqs = "(:requirements :strips :typing :negative-preconditions)"
    if type_name == "Domain":
        return snippet, None
    if type_name == "Problem":
        return "", snippet
    if type_name in DOMAIN_LEVEL:
        extra = "" if type_name == "Requirements" else reqs
        return f"(define (domain doc-example)\n{extra}\n{snippet})\n", None
    parts = {"Objects": "", "InitialState": "(:init)", "Goal": "(:goal (and))"}
    parts[type_name] = snippet
    pf = (
        "(define (problem doc-example)\n(:domain doc-example)\n"
        f"{parts['Objects']}\n{parts['InitialState']}\n{parts['Goal']})\n"
    )
    return "", pf
