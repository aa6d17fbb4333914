import pytest

from propforge.capture import Bounds, WidgetAttributes, build_page_capture
from propforge.grounding import HeuristicAnnotator, build_context_store
from propforge.propdsl import Do, Lit, PropertyAST, parse_property, validate
from propforge.propdsl.ast import Action
from conftest import corpus_paths


def _parse(body: str):
    return parse_property(body)


def errors(diags):
    return [d for d in diags if d.severity == "error"]


def warnings(diags):
    return [d for d in diags if d.severity == "warning"]


def _store():
    widgets = [
        WidgetAttributes("android.widget.TextView", Bounds(0, 0, 10, 10), 0,
                         text="Settings", resource_id="app.settings", clickable=True),
        WidgetAttributes("android.widget.TextView", Bounds(0, 10, 10, 20), 1,
                         text="Download", resource_id="app:id/file_item", clickable=True),
    ]
    cap = build_page_capture("Demo", "Main", None, widgets)
    return build_context_store([cap], HeuristicAnnotator())


def test_validate_clean_property():
    ast = _parse(
        'property p { pre { exists(widget(text="Settings")) } '
        'run { click(widget(text="Settings")) } post { assert true } }'
    )
    assert validate(ast) == []


def test_validate_unbound_variable():
    ast = _parse(
        'property p { pre { true } run { click(ghost) } post { assert true } }'
    )
    diags = errors(validate(ast))
    assert len(diags) == 1
    assert "ghost" in diags[0].message and "not bound" in diags[0].message


def test_validate_unbound_var_in_assertion():
    ast = _parse(
        'property p { pre { true } run { press_back() } post { assert equals(attr(x, "text"), "a") } }'
    )
    assert any("'x' is not bound" in d.message for d in errors(validate(ast)))


def test_validate_pick_from_non_list():
    ast = _parse(
        'property p { pre { true } run { '
        'let xs = find_all widget(text="a") '
        'let x = pick from xs where true '
        'let y = pick from x where true '
        'click(y) } post { assert true } }'
    )
    assert any("find_all list" in d.message for d in errors(validate(ast)))


def test_validate_rebinding_rejected():
    ast = _parse(
        'property p { pre { true } run { '
        'let xs = find_all widget(text="a") '
        'let xs = find_all widget(text="b") '
        'press_back() } post { assert true } }'
    )
    assert any("already bound" in d.message for d in errors(validate(ast)))


def test_validate_branch_bindings_stay_local():
    ast = _parse(
        'property p { pre { true } run { '
        'if true { let xs = find_all widget(text="a") press_back() } '
        'click(widget(text="b")) } '
        'post { assert equals(attr(xs, "text"), "a") } }'
    )
    msgs = [d.message for d in errors(validate(ast))]
    assert any("'xs' is not bound" in m for m in msgs)


def test_validate_type_mismatches():
    ast = _parse(
        'property p { pre { contains(true, "x") } run { press_back() } post { assert true } }'
    )
    assert any("got bool" in d.message for d in errors(validate(ast)))
    ast2 = _parse(
        'property p { pre { true and "str" } run { press_back() } post { assert true } }'
    )
    assert any("boolean operand" in d.message for d in errors(validate(ast2)))
    ast3 = _parse(
        'property p { pre { "loose" } run { press_back() } post { assert true } }'
    )
    assert any("precondition must be boolean" in d.message for d in errors(validate(ast3)))


def test_validate_widget_var_used_as_string():
    ast = _parse(
        'property p { pre { true } run { '
        'let xs = find_all widget(text="a") '
        'let x = pick from xs where true '
        'click(x) } post { assert contains(attr(widget(id="bar"), "text"), x) } }'
    )
    assert any("attr" in d.message for d in errors(validate(ast)))


def test_validate_click_on_list_var():
    ast = _parse(
        'property p { pre { true } run { let xs = find_all widget(text="a") click(xs) } '
        'post { assert true } }'
    )
    assert any("single widget" in d.message for d in errors(validate(ast)))


def test_validate_directly_constructed_bad_action():
    ast = PropertyAST(
        name="p",
        precondition=Lit(True),
        interaction=(Do(Action(kind="fly")),),
        postcondition=(Lit(True),),
    )
    msgs = [d.message for d in errors(validate(ast))]
    assert any("unknown action kind" in m for m in msgs)


def test_validate_set_text_needs_argument():
    ast = PropertyAST(
        name="p",
        precondition=Lit(True),
        interaction=(Do(Action(kind="set_text", target="x")),),
        postcondition=(Lit(True),),
    )
    msgs = [d.message for d in errors(validate(ast))]
    assert any("text argument" in m for m in msgs)


def test_validate_interaction_needs_action():
    ast = PropertyAST(
        name="p", precondition=Lit(True), interaction=(), postcondition=(Lit(True),)
    )
    assert any("at least one action" in d.message for d in errors(validate(ast)))


def test_validate_grounding_warnings_with_store():
    store = _store()
    ok = _parse(
        'property p { pre { exists(widget(text="Settings")) } '
        'run { click(widget(id="app.settings")) } post { assert true } }'
    )
    assert warnings(validate(ok, store)) == []
    missing = _parse(
        'property p { pre { exists(widget(id="nonexistent")) } '
        'run { click(widget(text="Settings")) } post { assert true } }'
    )
    warns = warnings(validate(missing, store))
    assert len(warns) == 1
    assert "matches no widget" in warns[0].message
    assert 'id="nonexistent"' in warns[0].message


def test_validate_contains_selector_against_store():
    store = _store()
    ast = _parse(
        'property p { pre { exists(widget(text~="Down")) } '
        'run { click(widget(text~="Down")) } post { assert true } }'
    )
    assert warnings(validate(ast, store)) == []


def test_validate_no_store_no_warnings():
    ast = _parse(
        'property p { pre { exists(widget(id="whatever")) } '
        'run { click(widget(id="whatever")) } post { assert true } }'
    )
    assert validate(ast) == []


@pytest.mark.parametrize("path", corpus_paths(), ids=lambda p: p.stem)
def test_validate_corpus_clean(path):
    ast = parse_property(path.read_text(encoding="utf-8"))
    assert errors(validate(ast)) == []
