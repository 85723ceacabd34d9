"""Tokenizer and s-expression reader for PDDL text.

Lexing problems (illegal characters, unbalanced parentheses) are reported as
``lex`` diagnostics; the reader never guesses a repair.
"""
from __future__ import annotations

import re
from dataclasses import dataclass

from .diagnostics import Diagnostic, SourceFile

_SYMBOL_CHARS = re.compile(r"[A-Za-z0-9_\-?:.=<>+*/!#^~]+")
_ILLEGAL_RUN = re.compile(r"[^\s();]+")


@dataclass(frozen=True)
class Token:
    kind: str  # "(", ")" or "sym"
    text: str
    line: int


@dataclass
class Sym:
    text: str
    line: int

    @property
    def lower(self) -> str:
        return self.text.lower()


@dataclass
class SList:
    items: list
    line: int
    end_line: int

    def head(self) -> str | None:
        if self.items and isinstance(self.items[0], Sym):
            return self.items[0].lower
        return None


def tokenize(src: SourceFile) -> tuple[list[Token], list[Diagnostic]]:
    text = src.text
    tokens: list[Token] = []
    diags: list[Diagnostic] = []
    i, n, line = 0, len(text), 1
    while i < n:
        ch = text[i]
        if ch == "\n":
            line += 1
            i += 1
        elif ch.isspace():
            i += 1
        elif ch == ";":
            while i < n and text[i] != "\n":
                i += 1
        elif ch in "()":
            tokens.append(Token(ch, ch, line))
            i += 1
        else:
            m = _ILLEGAL_RUN.match(text, i)
            run = m.group(0)
            if _SYMBOL_CHARS.fullmatch(run):
                tokens.append(Token("sym", run, line))
            else:
                diags.append(Diagnostic(src.kind, line, run, "legal token expected", "lex"))
            i = m.end()
    return tokens, diags


def read_sexpr(src: SourceFile) -> tuple[SList | None, list[Diagnostic]]:
    """Read exactly one top-level list from ``src``."""
    tokens, diags = tokenize(src)
    if diags:
        return None, diags
    stack: list[SList] = []
    roots: list = []
    for tok in tokens:
        if tok.kind == "(":
            stack.append(SList([], tok.line, tok.line))
        elif tok.kind == ")":
            if not stack:
                return None, [Diagnostic(src.kind, tok.line, ")", "balanced parentheses expected", "lex")]
            node = stack.pop()
            node.end_line = tok.line
            (stack[-1].items if stack else roots).append(node)
        else:
            (stack[-1].items if stack else roots).append(Sym(tok.text, tok.line))
    if stack:
        # innermost unclosed list carries the most useful position
        return None, [Diagnostic(src.kind, stack[-1].line, "(", "closing parenthesis expected", "lex")]
    if not roots:
        what = "domain" if src.kind.value == "DF" else "problem"
        return None, [Diagnostic(src.kind, 1, "", f"{what} definition expected", "structure")]
    first = roots[0]
    if not isinstance(first, SList):
        what = "domain" if src.kind.value == "DF" else "problem"
        return None, [Diagnostic(src.kind, first.line, first.text, f"{what} definition expected", "structure")]
    if len(roots) > 1:
        extra = roots[1]
        tok = extra.text if isinstance(extra, Sym) else "("
        return None, [Diagnostic(src.kind, extra.line, tok, "end of file expected", "structure")]
    return first, []
