"""Pull domain/problem definitions out of free-form LLM responses."""
from __future__ import annotations

import re

_HEAD = re.compile(r"\(\s*define\s*\(\s*(domain|problem)\b", re.IGNORECASE)
_FENCE = re.compile(r"```[^\n`]*\n(.*?)(?:```|\Z)", re.DOTALL)


def _balanced_end(text: str, start: int) -> int | None:
    depth = 0
    i = start
    while i < len(text):
        ch = text[i]
        if ch == ";":
            nl = text.find("\n", i)
            i = len(text) if nl < 0 else nl
            continue
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
            if depth == 0:
                return i + 1
        i += 1
    return None


def _blocks(text: str):
    """Yield (kind, block, start) for every define block, fence-aware."""
    fences = [(m.start(1), m.end(1)) for m in _FENCE.finditer(text)]
    for m in _HEAD.finditer(text):
        end = _balanced_end(text, m.start())
        if end is None:
            # truncated block: keep it up to its fence end (or end of text)
            limit = next((fe for fs, fe in fences if fs <= m.start() < fe), len(text))
            end = limit
        yield m.group(1).lower(), text[m.start():end].rstrip(), m.start()


def extract_pddl_blocks(llm_text: str) -> tuple[str | None, str | None]:
    """Return the last domain block and the last problem block, or None."""
    df = pf = None
    for kind, block, _ in _blocks(llm_text or ""):
        if kind == "domain":
            df = block
        else:
            pf = block
    return df, pf


def extract_section(llm_text: str, keyword: str) -> str | None:
    """Last balanced ``(:keyword ...)`` form in the text, if any."""
    found = None
    pat = re.compile(r"\(\s*" + re.escape(keyword) + r"\b", re.IGNORECASE)
    for m in pat.finditer(llm_text or ""):
        end = _balanced_end(llm_text, m.start())
        if end is not None:
            found = llm_text[m.start():end]
    return found
