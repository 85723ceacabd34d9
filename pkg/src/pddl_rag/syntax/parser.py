"""Parser for PDDL domain and problem files.

Supported subset: ``:strips``, ``:typing`` and ``:negative-preconditions``.
On any error-level diagnostic the parse raises :class:`PddlSyntaxError`;
warnings are attached to the returned AST.
"""
from __future__ import annotations

from .ast import (
    ROOT_TYPE,
    ActionSchema,
    And,
    Atom,
    DomainAst,
    Not,
    PredicateDecl,
    ProblemAst,
    SrcPos,
    TypedName,
)
from .diagnostics import Diagnostic, FileKind, PddlSyntaxError, SourceFile
from .lexer import SList, Sym, read_sexpr

SUPPORTED_REQUIREMENTS = frozenset({":strips", ":typing", ":negative-preconditions"})
UNSUPPORTED_SECTIONS = frozenset(
    {":functions", ":derived", ":durative-action", ":constraints", ":metric", ":process", ":event"}
)
UNSUPPORTED_CONNECTIVES = frozenset(
    {"or", "imply", "exists", "forall", "when", "either", "=", "increase", "decrease",
     "assign", "scale-up", "scale-down", "<", ">", "<=", ">="}
)


class _Abort(Exception):
    pass


class _Parser:
    def __init__(self, src: SourceFile, strict: bool = False):
        self.src = src
        self.kind = src.kind
        self.strict = strict
        self.diags: list[Diagnostic] = []
        self.warnings: list[Diagnostic] = []

    # -- diagnostics --------------------------------------------------------

    def fail(self, line: int, token: str, message: str, category: str = "structure"):
        self.diags.append(Diagnostic(self.kind, line, token, message, category))
        raise _Abort

    def warn(self, line: int, token: str, message: str, category: str = "structure"):
        self.warnings.append(Diagnostic(self.kind, line, token, message, category, "warning"))

    def expect_sym(self, node, what: str, parent: SList) -> Sym:
        if node is None:
            self.fail(parent.end_line, ")", f"{what} expected")
        if not isinstance(node, Sym):
            self.fail(node.line, "(", f"{what} expected")
        return node

    def expect_list(self, node, what: str, parent: SList) -> SList:
        if node is None:
            self.fail(parent.end_line, ")", f"{what} expected")
        if not isinstance(node, SList):
            self.fail(node.line, node.text, f"{what} expected")
        return node

    def section_guard(self, fn, *args):
        """Run a section parser, collecting its diagnostic and continuing."""
        try:
            return fn(*args)
        except _Abort:
            return None

    # -- shared pieces ------------------------------------------------------

    def header(self, root: SList, keyword: str) -> tuple[str, Sym]:
        what = f"{keyword} definition"
        first = root.items[0] if root.items else None
        if not isinstance(first, Sym) or first.lower != "define":
            tok = first.text if isinstance(first, Sym) else "("
            line = first.line if first is not None else root.line
            self.fail(line, tok, f"{what} expected")
        decl = root.items[1] if len(root.items) > 1 else None
        decl = self.expect_list(decl, f"({keyword} <name>)", root)
        if decl.head() != keyword or len(decl.items) != 2 or not isinstance(decl.items[1], Sym):
            tok = decl.items[0].text if decl.items and isinstance(decl.items[0], Sym) else "("
            self.fail(decl.line, tok, f"{what} expected")
        return decl.items[1].lower, decl.items[1]

    def requirements(self, sec: SList) -> frozenset[str]:
        reqs = set()
        for item in sec.items[1:]:
            sym = self.expect_sym(item, "requirement flag", sec)
            if not sym.lower.startswith(":"):
                self.fail(sym.line, sym.text, "requirement flag expected")
            if sym.lower not in SUPPORTED_REQUIREMENTS:
                self.fail(sym.line, sym.text, f"supported requirement expected (unsupported construct '{sym.lower}')")
            reqs.add(sym.lower)
        return frozenset(reqs)

    def typed_list(self, items: list, parent: SList, variables: bool) -> list[TypedName]:
        """Parse ``a b - t c`` style lists; each name receives exactly one type."""
        out: list[TypedName] = []
        pending: list[Sym] = []
        i = 0
        while i < len(items):
            item = items[i]
            if isinstance(item, Sym) and item.text == "-":
                if not pending:
                    self.fail(item.line, "-", "one type per parameter expected", "typing")
                nxt = items[i + 1] if i + 1 < len(items) else None
                if nxt is None:
                    self.fail(item.line, "-", "type name expected", "typing")
                if isinstance(nxt, SList):
                    self.fail(nxt.line, "(", "one type per parameter expected", "typing")
                if nxt.text == "-":
                    self.fail(nxt.line, "-", "one type per parameter expected", "typing")
                if nxt.text.startswith("?") or nxt.text.startswith(":"):
                    self.fail(nxt.line, nxt.text, "type name expected", "typing")
                for sym in pending:
                    out.append(TypedName(sym.lower, nxt.lower, SrcPos(sym.line, sym.text), SrcPos(nxt.line, nxt.text)))
                pending = []
                i += 2
                continue
            if isinstance(item, SList):
                self.fail(item.line, "(", "variable expected" if variables else "name expected")
            if variables and not item.text.startswith("?"):
                self.fail(item.line, item.text, "variable expected")
            if not variables and (item.text.startswith("?") or item.text.startswith(":")):
                self.fail(item.line, item.text, "name expected")
            pending.append(item)
            i += 1
        for sym in pending:
            out.append(TypedName(sym.lower, ROOT_TYPE, SrcPos(sym.line, sym.text)))
        return out

    def unique(self, names: list[TypedName], what: str) -> None:
        seen = set()
        for tn in names:
            if tn.name in seen:
                self.fail(tn.pos.line, tn.pos.token, f"unique {what} name expected", "naming")
            seen.add(tn.name)

    def atom(self, node: SList, variables: set[str] | None, ground_msg: str = "constant expected") -> Atom:
        """``variables`` is the declared set, or None when the atom must be ground."""
        head = node.items[0] if node.items else None
        if head is None:
            self.fail(node.line, "(", "atomic formula expected")
        if not isinstance(head, Sym):
            self.fail(head.line, "(", "predicate name expected")
        if head.lower in UNSUPPORTED_CONNECTIVES:
            self.fail(head.line, head.text, f"STRIPS literal expected (unsupported construct '{head.lower}')")
        if head.lower.startswith(":") or head.lower.startswith("?") or head.text == "-":
            self.fail(head.line, head.text, "predicate name expected")
        terms, raw = [], []
        for t in node.items[1:]:
            if isinstance(t, SList):
                self.fail(t.line, "(", "term expected")
            if t.text.startswith("?"):
                if variables is None:
                    self.fail(t.line, t.text, ground_msg)
                if t.lower not in variables:
                    self.fail(t.line, t.text, "declared parameter expected", "naming")
            elif t.text.startswith(":") or t.text == "-":
                self.fail(t.line, t.text, "term expected")
            terms.append(t.lower)
            raw.append(t.text)
        return Atom(head.lower, tuple(terms), SrcPos(head.line, head.text), tuple(raw))

    def formula(self, node, variables: set[str] | None, what: str) -> And:
        """Parse a conjunction of literals, flattening nested ``and``."""
        if isinstance(node, Sym):
            self.fail(node.line, node.text, f"{what} formula expected")
        lits: list = []
        self._collect(node, variables, lits)
        return And(tuple(lits))

    def _collect(self, node: SList, variables, out: list) -> None:
        if not node.items:
            return
        head = node.head()
        if head == "and":
            for child in node.items[1:]:
                if isinstance(child, Sym):
                    self.fail(child.line, child.text, "formula expected")
                self._collect(child, variables, out)
        elif head == "not":
            if len(node.items) != 2 or not isinstance(node.items[1], SList):
                tok = node.items[1].text if len(node.items) > 1 and isinstance(node.items[1], Sym) else node.items[0].text
                self.fail(node.line, tok, "atomic formula expected")
            inner = node.items[1]
            if inner.head() in ("and", "not"):
                self.fail(inner.line, inner.items[0].text, "atomic formula expected")
            out.append(Not(self.atom(inner, variables)))
        else:
            out.append(self.atom(node, variables))


class _DomainParser(_Parser):
    def parse(self) -> DomainAst:
        root, diags = read_sexpr(self.src)
        if diags:
            raise PddlSyntaxError(diags)
        try:
            name, name_sym = self.header(root, "domain")
        except _Abort:
            raise PddlSyntaxError(self.diags)

        reqs: frozenset[str] = frozenset()
        types, constants, predicates, actions = [], [], [], []
        seen_sections: set[str] = set()
        for sec in root.items[2:]:
            if isinstance(sec, Sym):
                self.section_guard(self.fail, sec.line, sec.text, "domain definition expected")
                continue
            head = sec.head()
            tok = sec.items[0].text if sec.items and isinstance(sec.items[0], Sym) else "("
            if head in UNSUPPORTED_SECTIONS:
                self.section_guard(self.fail, sec.line, tok, f"domain definition expected (unsupported construct '{head}')")
                continue
            if head != ":action" and head in seen_sections:
                self.section_guard(self.fail, sec.line, tok, f"single {head} section expected")
                continue
            seen_sections.add(head)
            if head == ":requirements":
                reqs = self.section_guard(self.requirements, sec) or frozenset()
            elif head == ":types":
                types = self.section_guard(self.types, sec) or []
            elif head == ":constants":
                constants = self.section_guard(self.constants, sec) or []
            elif head == ":predicates":
                predicates = self.section_guard(self.predicates, sec) or []
            elif head == ":action":
                act = self.section_guard(self.action, sec)
                if act is not None:
                    if any(a.name == act.name for a in actions):
                        self.section_guard(self.fail, act.pos.line, act.pos.token, "unique action name expected", "naming")
                    actions.append(act)
            else:
                self.section_guard(self.fail, sec.line, tok, "domain definition expected")

        if self.diags:
            raise PddlSyntaxError(self.diags)
        return DomainAst(
            name, reqs, tuple(types), tuple(constants), tuple(predicates), tuple(actions),
            SrcPos(name_sym.line, name_sym.text), tuple(self.warnings),
        )

    def types(self, sec: SList) -> list[TypedName]:
        decl = self.typed_list(sec.items[1:], sec, variables=False)
        self.unique(decl, "type")
        for t in decl:
            if t.name == ROOT_TYPE and t.type_name != ROOT_TYPE:
                self.fail(t.pos.line, t.pos.token, "acyclic type hierarchy expected", "typing")
        return [t for t in decl if t.name != ROOT_TYPE]

    def constants(self, sec: SList) -> list[TypedName]:
        decl = self.typed_list(sec.items[1:], sec, variables=False)
        self.unique(decl, "constant")
        return decl

    def predicates(self, sec: SList) -> list[PredicateDecl]:
        out: list[PredicateDecl] = []
        for item in sec.items[1:]:
            node = self.expect_list(item, "predicate declaration", sec)
            head = node.items[0] if node.items else None
            if not isinstance(head, Sym) or head.text.startswith("?") or head.text.startswith(":"):
                tok = head.text if isinstance(head, Sym) else "("
                self.fail(node.line, tok, "predicate name expected")
            params = self.typed_list(node.items[1:], node, variables=True)
            self.unique(params, "parameter")
            if any(p.name == head.lower for p in out):
                self.fail(head.line, head.text, "unique predicate name expected", "naming")
            out.append(PredicateDecl(head.lower, tuple(params), SrcPos(head.line, head.text)))
        return out

    def action(self, sec: SList) -> ActionSchema:
        name = self.expect_sym(sec.items[1] if len(sec.items) > 1 else None, "action name", sec)
        if name.text.startswith(":") or name.text.startswith("?"):
            self.fail(name.line, name.text, "action name expected")
        params: list[TypedName] = []
        pre_node = eff_node = None
        seen: set[str] = set()
        items = sec.items[2:]
        i = 0
        while i < len(items):
            key = items[i]
            if isinstance(key, SList) or not key.text.startswith(":"):
                tok = "(" if isinstance(key, SList) else key.text
                self.fail(key.line, tok, "domain definition expected")
            k = key.lower
            if k == ":effects":
                if self.strict:
                    self.fail(key.line, key.text, "domain definition expected")
                self.warn(key.line, key.text, ":effect expected (non-standard plural keyword accepted)")
                k = ":effect"
            if k not in (":parameters", ":precondition", ":effect"):
                self.fail(key.line, key.text, "domain definition expected")
            if k in seen:
                self.fail(key.line, key.text, f"single {k} expected")
            seen.add(k)
            value = items[i + 1] if i + 1 < len(items) else None
            if value is None:
                self.fail(key.line, key.text, f"value for {k} expected")
            if k == ":parameters":
                plist = self.expect_list(value, "parameter list", sec)
                params = self.typed_list(plist.items, plist, variables=True)
                self.unique(params, "parameter")
            elif k == ":precondition":
                pre_node = value
            else:
                eff_node = value
            i += 2
        variables = {p.name for p in params}
        pre = self.formula(pre_node, variables, "precondition") if pre_node is not None else And()
        eff = self.formula(eff_node, variables, "effect") if eff_node is not None else And()
        return ActionSchema(name.lower, tuple(params), pre, eff, SrcPos(name.line, name.text))


class _ProblemParser(_Parser):
    def parse(self) -> ProblemAst:
        root, diags = read_sexpr(self.src)
        if diags:
            raise PddlSyntaxError(diags)
        try:
            name, name_sym = self.header(root, "problem")
        except _Abort:
            raise PddlSyntaxError(self.diags)

        domain_name = domain_sym = None
        reqs: frozenset[str] = frozenset()
        objects: list[TypedName] = []
        init: list[Atom] | None = None
        goal: And | None = None
        seen_sections: set[str] = set()
        for sec in root.items[2:]:
            if isinstance(sec, Sym):
                self.section_guard(self.fail, sec.line, sec.text, "problem definition expected")
                continue
            head = sec.head()
            tok = sec.items[0].text if sec.items and isinstance(sec.items[0], Sym) else "("
            if head in UNSUPPORTED_SECTIONS:
                self.section_guard(self.fail, sec.line, tok, f"problem definition expected (unsupported construct '{head}')")
                continue
            if head in seen_sections:
                self.section_guard(self.fail, sec.line, tok, f"single {head} section expected")
                continue
            seen_sections.add(head)
            if head == ":domain":
                if len(sec.items) != 2 or not isinstance(sec.items[1], Sym):
                    self.section_guard(self.fail, sec.line, tok, "domain name expected")
                else:
                    domain_sym = sec.items[1]
                    domain_name = domain_sym.lower
            elif head == ":requirements":
                reqs = self.section_guard(self.requirements, sec) or frozenset()
            elif head == ":objects":
                objects = self.section_guard(self.objects, sec) or []
            elif head == ":init":
                init = self.section_guard(self.init, sec)
                if init is None:
                    init = []
            elif head == ":goal":
                goal = self.section_guard(self.goal, sec)
                if goal is None:
                    goal = And()
            else:
                self.section_guard(self.fail, sec.line, tok, "problem definition expected")

        for missing, present in ((":domain", domain_name), (":init", init), (":goal", goal)):
            if present is None:
                what = missing[1:]
                self.section_guard(self.fail, root.end_line, ")", f"{what} definition expected (missing {missing})")

        if self.diags:
            raise PddlSyntaxError(self.diags)
        return ProblemAst(
            name, domain_name, tuple(objects), tuple(init), goal, reqs,
            SrcPos(name_sym.line, name_sym.text), SrcPos(domain_sym.line, domain_sym.text), tuple(self.warnings),
        )

    def objects(self, sec: SList) -> list[TypedName]:
        decl = self.typed_list(sec.items[1:], sec, variables=False)
        self.unique(decl, "object")
        return decl

    def init(self, sec: SList) -> list[Atom]:
        out: list[Atom] = []
        for item in sec.items[1:]:
            node = self.expect_list(item, "ground atom", sec)
            if node.head() == "not":
                self.fail(node.line, node.items[0].text, "ground atom expected")
            out.append(self.atom(node, None))
        return out

    def goal(self, sec: SList) -> And:
        if len(sec.items) < 2:
            self.fail(sec.end_line, ")", "goal formula expected")
        if len(sec.items) > 2:
            extra = sec.items[2]
            self.fail(extra.line, extra.text if isinstance(extra, Sym) else "(", "single goal formula expected")
        return self.formula(sec.items[1], None, "goal")


def parse_domain(src: SourceFile | str, strict: bool = False) -> DomainAst:
    """Parse a domain file; raises :class:`PddlSyntaxError` on errors.

    ``strict`` rejects the plural ``:effects`` keyword instead of warning.
    """
    if isinstance(src, str):
        src = SourceFile(FileKind.DF, src)
    if src.kind is not FileKind.DF:
        raise ValueError("parse_domain expects a DF source")
    return _DomainParser(src, strict).parse()


def parse_problem(src: SourceFile | str, strict: bool = False) -> ProblemAst:
    if isinstance(src, str):
        src = SourceFile(FileKind.PF, src)
    if src.kind is not FileKind.PF:
        raise ValueError("parse_problem expects a PF source")
    return _ProblemParser(src, strict).parse()
