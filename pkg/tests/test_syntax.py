import json

import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from pddl_rag.syntax import (
    And,
    Atom,
    Diagnostic,
    FileKind,
    Not,
    PddlSyntaxError,
    SourceFile,
    check_pair,
    errors_only,
    extract_pddl_blocks,
    lint_pair,
    parse_domain,
    parse_problem,
    render,
)
from pddl_rag.syntax.extract import extract_section
from pddl_rag.syntax.lexer import read_sexpr, tokenize

from samples import (
    BARMAN_BUG,
    BARMAN_FIXED,
    BW_DOMAIN,
    DATASET,
    LOGISTICS_DOMAIN,
    LOGISTICS_PROBLEM,
    PICKUP_BUG,
    PICKUP_FIXED,
    bw_problem,
)

MINIMAL_DOMAIN = "(define (domain d) (:predicates (p ?x)))"
MINIMAL_PROBLEM = "(define (problem p) (:domain d) (:objects a) (:init (on-table a)) (:goal (and (on-table a))))"


def diags_of(fn, text):
    with pytest.raises(PddlSyntaxError) as exc:
        fn(text)
    return exc.value.diagnostics


# -- lexer ------------------------------------------------------------------


def test_tokens_carry_lines():
    toks, diags = tokenize(SourceFile(FileKind.DF, "(define\n  (domain d))"))
    assert not diags
    assert [(t.text, t.line) for t in toks][:3] == [("(", 1), ("define", 1), ("(", 2)]


def test_comments_are_skipped():
    toks, _ = tokenize(SourceFile(FileKind.DF, "; (define\n(a) ; b\n"))
    assert [t.text for t in toks] == ["(", "a", ")"]


def test_illegal_characters_are_reported():
    _, diags = tokenize(SourceFile(FileKind.DF, "(a\n b$c)"))
    assert diags[0].line == 2 and diags[0].category == "lex"


def test_unbalanced_close():
    tree, diags = read_sexpr(SourceFile(FileKind.DF, "(a))"))
    assert tree is None and diags[0].message == "balanced parentheses expected"


def test_unclosed_open_reports_innermost_line():
    tree, diags = read_sexpr(SourceFile(FileKind.DF, "(a\n (b\n"))
    assert tree is None and diags[0].line == 2 and diags[0].token == "("


# -- parser -----------------------------------------------------------------


def test_minimal_domain():
    d = parse_domain(MINIMAL_DOMAIN)
    assert d.name == "d"
    assert len(d.predicates) == 1
    p = d.predicates[0]
    assert (p.name, p.arity, p.parameters[0].type_name) == ("p", 1, "object")


def test_minimal_problem():
    p = parse_problem(MINIMAL_PROBLEM)
    assert len(p.objects) == 1 and len(p.init) == 1
    assert p.goal == And((Atom("on-table", ("a",)),))


def test_names_are_case_insensitive():
    d = parse_domain("(DEFINE (DOMAIN D) (:PREDICATES (P ?X)))")
    assert d == parse_domain(MINIMAL_DOMAIN)


def test_preconditions_keyword_is_a_domain_error():
    (d,) = diags_of(parse_domain, PICKUP_BUG)
    assert d.file is FileKind.DF
    assert d.line == 12
    assert d.token.upper() == ":PRECONDITIONS"
    assert "domain definition expected" in d.message
    assert d.format() == "domain: syntax error in line 12, ':PRECONDITIONS': domain definition expected"


def test_corrected_pickup_parses():
    d = parse_domain(PICKUP_FIXED)
    assert [w.severity for w in d.warnings] == ["warning"]
    assert ":effects" in d.warnings[0].message or d.warnings[0].token.lower() == ":effects"
    with pytest.raises(PddlSyntaxError):
        parse_domain(PICKUP_FIXED, strict=True)


def test_multi_type_parameter_is_a_typing_error():
    diags = diags_of(parse_domain, BARMAN_BUG)
    d = diags[0]
    assert (d.file, d.line, d.token, d.category) == (FileKind.DF, 14, "(", "typing")
    assert "one type per parameter" in d.message


def test_corrected_barman_parses_clean():
    d = parse_domain(BARMAN_FIXED)
    assert not d.warnings


@pytest.mark.parametrize("params", [
    "?x - (a b)",
    "?x - - a",
    "?x - (either a b)",
    "?y - t ?x - (t u)",
])
def test_single_type_rule(params):
    text = f"(define (domain d) (:requirements :typing) (:types a b t u) (:predicates (p {params})))"
    diags = diags_of(parse_domain, text)
    assert any(d.category == "typing" for d in diags)


@given(st.lists(st.sampled_from(["a", "b", "c"]), min_size=2, max_size=4, unique=True),
       st.integers(0, 2))
def test_single_type_rule_property(types, where):
    decls = ["?p - a", "?q - b"]
    decls.insert(where, f"?z - ({' '.join(types)})")
    text = ("(define (domain d) (:requirements :typing) (:types a b c)\n"
            f"(:predicates (p {' '.join(decls)})))")
    assert any(d.category == "typing" for d in diags_of(parse_domain, text))


def test_init_rejects_variables():
    text = MINIMAL_PROBLEM.replace("(:init (on-table a))", "(:init (holding ?h))")
    d = diags_of(parse_problem, text)[0]
    assert d.category == "structure" and d.token == "?h"


def test_missing_goal():
    text = "(define (problem p) (:domain d) (:objects a) (:init (on-table a)))"
    d = diags_of(parse_problem, text)[0]
    assert d.category == "structure" and "missing :goal" in d.message


def test_unsupported_construct_is_rejected():
    text = MINIMAL_PROBLEM.replace("(and (on-table a))", "(or (on-table a) (clear a))")
    d = diags_of(parse_problem, text)[0]
    assert d.token.lower() == "or"


def test_unsupported_requirement_is_rejected():
    d = diags_of(parse_domain, "(define (domain d) (:requirements :fluents) (:predicates (p)))")[0]
    assert "unsupported" in d.message


def test_undeclared_action_variable():
    text = ("(define (domain d) (:predicates (p ?x))"
            " (:action a :parameters (?x) :precondition (p ?y) :effect (p ?x)))")
    d = diags_of(parse_domain, text)[0]
    assert (d.token, d.category) == ("?y", "naming")


def test_negative_precondition_parsed():
    text = ("(define (domain d) (:requirements :strips :negative-preconditions) (:predicates (p ?x) (q ?x))"
            " (:action a :parameters (?x) :precondition (and (p ?x) (not (q ?x))) :effect (q ?x)))")
    a = parse_domain(text).actions[0]
    assert a.precondition.children[1] == Not(Atom("q", ("?x",)))


def test_error_messages_are_deterministic():
    texts = [PICKUP_BUG, BARMAN_BUG, "(define (domain", "(define (domain d) (:action))"]
    for t in texts:
        a = [x.to_json() for x in diags_of(parse_domain, t)]
        b = [x.to_json() for x in diags_of(parse_domain, t)]
        assert a == b


def test_diagnostic_json_round_trip():
    d = diags_of(parse_domain, PICKUP_BUG)[0]
    assert Diagnostic.from_dict(json.loads(d.to_json())) == d


# -- lint -------------------------------------------------------------------


def test_gold_pairs_lint_clean():
    for task in sorted(DATASET.iterdir()):
        _, _, diags = check_pair((task / "gold_domain.pddl").read_text(), (task / "gold_problem.pddl").read_text())
        assert diags == [], task.name


def test_logistics_lints_clean():
    _, _, diags = check_pair(LOGISTICS_DOMAIN, LOGISTICS_PROBLEM)
    assert diags == []


def test_arity_mismatch():
    pf = bw_problem(["a", "b", "c"], [("on", "a", "b", "c")], [("clear", "a")])
    _, _, diags = check_pair(BW_DOMAIN, pf)
    assert [d.category for d in diags] == ["arity"]
    assert diags[0].file is FileKind.PF


def test_domain_name_mismatch():
    pf = bw_problem(["a"], [("clear", "a")], [("clear", "a")], domain="blocks")
    _, _, diags = check_pair(BW_DOMAIN, pf)
    assert diags[0].category == "naming" and diags[0].token == "blocks"


def test_undeclared_predicate_and_object():
    pf = bw_problem(["a"], [("glued", "a"), ("clear", "z")], [("clear", "a")])
    _, _, diags = check_pair(BW_DOMAIN, pf)
    assert {d.token for d in diags} == {"glued", "z"}
    assert all(d.category == "naming" for d in diags)


def test_type_mismatch():
    df = ("(define (domain t) (:requirements :strips :typing) (:types box room)"
          " (:predicates (in ?b - box ?r - room)))")
    pf = "(define (problem q) (:domain t) (:objects b1 - box r1 - room) (:init (in r1 b1)) (:goal (and (in b1 r1))))"
    d, p, _ = check_pair(df, pf)
    diags = lint_pair(d, p)
    assert diags and all(x.category == "typing" for x in diags)


def test_problem_errors_come_after_domain_errors():
    _, _, diags = check_pair(PICKUP_BUG, "(define (problem p) (:domain blocksworld))")
    assert diags[0].file is FileKind.DF and diags[-1].file is FileKind.PF


# -- render -----------------------------------------------------------------


def test_render_round_trip_on_bundled_files():
    texts = [BW_DOMAIN, BARMAN_FIXED, LOGISTICS_DOMAIN, MINIMAL_DOMAIN]
    for t in texts:
        ast = parse_domain(t)
        assert parse_domain(render(ast)) == ast
    for t in [LOGISTICS_PROBLEM, MINIMAL_PROBLEM, *(p.read_text() for p in DATASET.glob("*/gold_problem.pddl"))]:
        ast = parse_problem(t)
        assert parse_problem(render(ast)) == ast


def test_rendered_action_has_single_precondition_keyword():
    text = render(parse_domain(PICKUP_FIXED))
    pickup = text[text.index("(:action pickup"):]
    pickup = pickup[:pickup.index("(:action", 1)] if "(:action" in pickup[1:] else pickup
    assert pickup.count(":precondition") == 1


def test_empty_init_is_rendered():
    p = parse_problem("(define (problem p) (:domain d) (:objects a) (:init) (:goal (and)))")
    assert "(:init)" in render(p)


NAMES = st.sampled_from(["p", "q", "on", "at-x", "r2"])
VARS = ["?a", "?b", "?c"]


@st.composite
def domains(draw):
    typing = draw(st.booleans())
    types = ["t1", "t2", "t3"] if typing else []
    type_decls = []
    for i, t in enumerate(types):
        parent = draw(st.sampled_from(["object", *types[:i]]))
        type_decls.append(f"{t} - {parent}")
    type_of = st.sampled_from(["object", *types])

    preds = {}
    for name in draw(st.lists(NAMES, min_size=1, max_size=4, unique=True)):
        preds[name] = draw(st.integers(0, 3))

    def typed(vs):
        if not typing:
            return " ".join(vs)
        return " ".join(f"{v} - {draw(type_of)}" for v in vs)

    pred_txt = " ".join(f"({n}{' ' if k else ''}{typed([f'?v{i}' for i in range(k)])})" for n, k in preds.items())

    actions = []
    for j in range(draw(st.integers(0, 3))):
        params = VARS[: draw(st.integers(0, 3))]

        def literals():
            out = []
            for _ in range(draw(st.integers(0, 3))):
                n = draw(st.sampled_from(sorted(preds)))
                k = preds[n]
                if k and not params:
                    continue
                args = " ".join(draw(st.sampled_from(params)) for _ in range(k))
                atom = f"({n}{' ' + args if args else ''})"
                out.append(f"(not {atom})" if draw(st.booleans()) else atom)
            return "(and " + " ".join(out) + ")"

        actions.append(f"(:action act{j} :parameters ({typed(params)}) :precondition {literals()} :effect {literals()})")

    reqs = ":strips :negative-preconditions" + (" :typing" if typing else "")
    types_txt = f"(:types {' '.join(type_decls)})" if typing else ""
    return (f"(define (domain gen) (:requirements {reqs}) {types_txt}\n"
            f"(:predicates {pred_txt})\n" + "\n".join(actions) + ")")


@settings(max_examples=150, suppress_health_check=[HealthCheck.too_slow])
@given(domains())
def test_domain_round_trip_property(text):
    ast = parse_domain(text)
    again = parse_domain(render(ast))
    assert again == ast
    assert render(again) == render(ast)


@st.composite
def problems(draw):
    objs = draw(st.lists(st.sampled_from(["a", "b", "c", "d"]), min_size=0, max_size=4, unique=True))
    atoms = []
    for _ in range(draw(st.integers(0, 5))):
        n = draw(NAMES)
        args = [draw(st.sampled_from(objs)) for _ in range(draw(st.integers(0, 2)))] if objs else []
        atoms.append(f"({n}{' ' if args else ''}{' '.join(args)})")
    goal = draw(st.lists(st.sampled_from(atoms), max_size=3)) if atoms else []
    return (f"(define (problem gen) (:domain d) (:objects {' '.join(objs)})\n"
            f"(:init {' '.join(atoms)}) (:goal (and {' '.join(goal)})))")


@settings(max_examples=150)
@given(problems())
def test_problem_round_trip_property(text):
    ast = parse_problem(text)
    assert parse_problem(render(ast)) == ast


MUTATION_CHARS = "()?-:ab#@ \n"


@settings(max_examples=300, suppress_health_check=[HealthCheck.too_slow])
@given(st.sampled_from([BW_DOMAIN, LOGISTICS_DOMAIN, BARMAN_FIXED]),
       st.lists(st.tuples(st.sampled_from(["del", "ins", "dup"]), st.floats(0, 1), st.sampled_from(MUTATION_CHARS)),
                min_size=1, max_size=3))
def test_diagnostics_point_at_real_tokens(text, edits):
    for op, where, ch in edits:
        i = int(where * (len(text) - 1))
        if op == "del":
            text = text[:i] + text[i + 1:]
        elif op == "ins":
            text = text[:i] + ch + text[i:]
        else:
            j = text.find(" ", i)
            j = len(text) if j < 0 else j
            text = text[:j] + " " + text[i:j] + text[j:]
    try:
        diags = list(parse_domain(text).warnings)
    except PddlSyntaxError as e:
        diags = list(e.diagnostics)
    lines = text.splitlines()
    for d in diags:
        assert 1 <= d.line <= max(1, len(lines)), d
        if lines:
            assert d.token.lower() in lines[d.line - 1].lower(), (d, lines[d.line - 1])


def test_gold_domain_parses_identically_twice():
    a = [d.to_json() for d in check_pair(PICKUP_BUG, MINIMAL_PROBLEM)[2]]
    b = [d.to_json() for d in check_pair(PICKUP_BUG, MINIMAL_PROBLEM)[2]]
    assert a == b


# -- extraction -------------------------------------------------------------


def test_extract_fenced_pair_verbatim():
    df = "(define (domain d)\n  (:predicates (p)))"
    pf = "(define (problem q) (:domain d) (:init) (:goal (and)))"
    text = f"Sure!\n```pddl\n{df}\n```\nand\n```lisp\n{pf}\n```\n"
    assert extract_pddl_blocks(text) == (df, pf)


def test_extract_last_domain_wins():
    first = "(define (domain one) (:predicates (p)))"
    second = "(define (domain two) (:predicates (q)))"
    df, pf = extract_pddl_blocks(f"draft:\n{first}\nfinal:\n{second}\n")
    assert df == second and pf is None


def test_extract_prose_only():
    assert extract_pddl_blocks("I cannot help with that.") == (None, None)


def test_extract_ignores_parens_in_comments():
    df = "(define (domain d) ; (unbalanced\n (:predicates (p)))"
    assert extract_pddl_blocks(df)[0] == df


def test_extract_truncated_block_runs_to_fence_end():
    text = "```\n(define (domain d) (:predicates (p)\n```\nthen prose"
    df, _ = extract_pddl_blocks(text)
    assert df.startswith("(define (domain d)") and "prose" not in df


def test_extract_section():
    assert extract_section(BW_DOMAIN, ":predicates").startswith("(:predicates")
    assert extract_section("nothing", ":goal") is None


def test_errors_only_filters_warnings():
    d = parse_domain(PICKUP_FIXED)
    assert errors_only(d.warnings) == []
