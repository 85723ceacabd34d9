import json

import pytest

from pddl_rag.docs import (
    TYPE_NAMES,
    CorpusError,
    DocCorpus,
    DocSection,
    load_corpus,
    parse_section_text,
    render_section,
    section_for_component,
    view,
    wrap_example,
)
from pddl_rag.syntax import PddlSyntaxError, parse_domain, parse_problem

CORPUS = load_corpus()


def test_bundled_corpus_has_every_type():
    assert [s.type_name for s in CORPUS.sections] == list(TYPE_NAMES)


def test_actions_section():
    s = CORPUS.by_type("Actions")
    assert s.description.startswith("An action defines a transformation")
    assert any("BUILD-WALL" in e for e in s.examples)


def test_predicates_section():
    assert CORPUS.by_type("Predicates").description.startswith("Predicates represent the state of the system")


def test_section_view_contains_example():
    assert "BUILD-WALL" in view(CORPUS, "section", "Actions")


def test_empty_directory_is_an_error(tmp_path):
    with pytest.raises(CorpusError):
        load_corpus(tmp_path)


def test_missing_path_is_an_error(tmp_path):
    with pytest.raises(CorpusError):
        load_corpus(tmp_path / "nope.json")


def test_json_round_trip(tmp_path):
    path = tmp_path / "c.json"
    path.write_text(CORPUS.to_json())
    again = load_corpus(path)
    assert again.sections == CORPUS.sections


def test_directory_of_records(tmp_path):
    (tmp_path / "a.md").write_text(
        "type_name: Goal\ndocumentation: The goal is a formula\nover atoms.\nExample:\n```\n(:goal (and (p)))\n```\n"
    )
    (tmp_path / "b.json").write_text(json.dumps({"type_name": "Objects", "documentation": "Things.", "examples": []}))
    c = load_corpus(tmp_path)
    goal = c.by_type("Goal")
    assert goal.description == "The goal is a formula over atoms."
    assert goal.examples == ("(:goal (and (p)))",)
    assert c.by_type("Objects").examples == ()


def test_section_text_without_type_name():
    with pytest.raises(CorpusError):
        parse_section_text("documentation: hi")


def test_invalid_corpus_records():
    with pytest.raises(CorpusError):
        DocCorpus(())
    with pytest.raises(CorpusError):
        DocCorpus((DocSection("x", "Nonsense", "d"),))
    with pytest.raises(CorpusError):
        DocCorpus((DocSection("x", "Goal", "d"), DocSection("x", "Objects", "d")))


def test_examples_only_without_examples_is_headers():
    c = DocCorpus((DocSection("g", "Goal", "Some text."), DocSection("o", "Objects", "Other.")))
    assert view(c, "examples_only") == "type_name: Goal\n\ntype_name: Objects\n"


def test_whole_view_decomposes():
    whole = set(view(CORPUS, "whole").splitlines())
    parts = set(view(CORPUS, "descriptions_only").splitlines()) | set(view(CORPUS, "examples_only").splitlines())
    assert whole == parts


def test_descriptions_only_has_no_example_bodies():
    text = view(CORPUS, "descriptions_only")
    assert "BUILD-WALL" not in text and "Example:" not in text


def test_component_mapping():
    assert section_for_component(CORPUS, "actions").type_name == "Actions"
    assert section_for_component(CORPUS, "init").type_name == "InitialState"
    partial = DocCorpus((CORPUS.by_type("Actions"),))
    with pytest.raises(CorpusError):
        section_for_component(partial, "types")


def test_render_section_layout():
    lines = render_section(CORPUS.by_type("Actions")).splitlines()
    assert lines[0] == "type_name: Actions"
    assert lines[1].startswith("documentation: ")
    assert "Example:" in lines


@pytest.mark.parametrize("type_name", TYPE_NAMES)
def test_examples_parse_when_wrapped(type_name):
    section = CORPUS.by_type(type_name)
    assert section.examples
    ok = 0
    for snippet in section.examples:
        df, pf = wrap_example(type_name, snippet)
        try:
            if df:
                parse_domain(df)
            if pf:
                parse_problem(pf)
            ok += 1
        except PddlSyntaxError:
            pass
    assert ok >= 1
