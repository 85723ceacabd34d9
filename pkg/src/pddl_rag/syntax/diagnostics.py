"""Source files and solver-style diagnostics."""
from __future__ import annotations

import json
from bisect import bisect_right
from dataclasses import asdict, dataclass, field
from enum import Enum
from pathlib import Path


class FileKind(str, Enum):
    DF = "DF"
    PF = "PF"

    @property
    def label(self) -> str:
        return "domain" if self is FileKind.DF else "problem"


CATEGORIES = ("lex", "structure", "arity", "typing", "naming")


@dataclass(frozen=True)
class SourceFile:
    kind: FileKind
    text: str
    line_index: tuple[int, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        offsets = [0]
        for i, ch in enumerate(self.text):
            if ch == "\n":
                offsets.append(i + 1)
        object.__setattr__(self, "line_index", tuple(offsets))

    @classmethod
    def from_path(cls, kind: FileKind, path: str | Path) -> "SourceFile":
        return cls(kind, Path(path).read_text(encoding="utf-8"))

    @property
    def n_lines(self) -> int:
        return len(self.line_index)

    def line_of(self, offset: int) -> int:
        return bisect_right(self.line_index, offset)

    def line_text(self, line: int) -> str:
        start = self.line_index[line - 1]
        end = self.line_index[line] - 1 if line < self.n_lines else len(self.text)
        return self.text[start:end]


@dataclass(frozen=True)
class Diagnostic:
    file: FileKind
    line: int
    token: str
    message: str
    category: str
    severity: str = "error"

    @property
    def is_error(self) -> bool:
        return self.severity == "error"

    def format(self) -> str:
        """Render in the planner's message format, token echoed upper-cased."""
        what = "syntax error" if self.is_error else "warning"
        return f"{self.file.label}: {what} in line {self.line}, '{self.token.upper()}': {self.message}"

    def to_dict(self) -> dict:
        d = asdict(self)
        d["file"] = self.file.value
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "Diagnostic":
        return cls(FileKind(d["file"]), d["line"], d["token"], d["message"], d["category"], d.get("severity", "error"))


class PddlSyntaxError(Exception):
    """Raised when a PDDL file cannot be turned into an AST."""

    def __init__(self, diagnostics: list[Diagnostic]):
        self.diagnostics = list(diagnostics)
        super().__init__("\n".join(d.format() for d in self.diagnostics))


def errors_only(diags) -> list[Diagnostic]:
    return [d for d in diags if d.is_error]
