"""Scripted app model execution: schema checks, selector evaluation, verdicts."""

import json

import pytest

from propforge.propdsl import parse_property
from propforge.propdsl.ast import Selector, SelectorClause
from propforge.simulator import (
    EXECUTION_ERROR,
    PASSED,
    PRECONDITION_UNSATISFIED,
    VIOLATED,
    DanglingReference,
    SchemaError,
    evaluate_selector,
    execute_property,
    load_app_model,
    parse_app_model,
)

from conftest import SUITE_DIR


@pytest.fixture(scope="module")
def filer():
    return load_app_model(SUITE_DIR / "filer" / "models" / "model.json")


@pytest.fixture(scope="module")
def filer_buggy():
    return load_app_model(SUITE_DIR / "filer" / "models" / "model_buggy.json")


def prop(text):
    return parse_property(text)


# --- loading and validation ---


def test_load_filer_model(filer):
    assert filer.initial_screen == "file_list"
    assert set(filer.state_vars) == {"path", "typed_name", "query"}
    assert set(filer.screens) == {
        "file_list", "dir_view", "file_dialog", "search_screen", "create_dialog",
    }
    assert len(filer.transitions) == 9
    # widgets keep document order and carry parsed attributes
    first = filer.screens["file_list"][0]
    assert first.attributes.resource_id == "app:id/path_bar"
    assert first.text_var == "path"


def test_load_rejects_invalid_json(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    with pytest.raises(SchemaError):
        load_app_model(path)


def base_model():
    return {
        "initial": "home",
        "state": {"v": "x"},
        "screens": {"home": [{"id": "a", "text": "Go", "clickable": True}]},
        "transitions": [],
    }


def test_missing_required_keys():
    with pytest.raises(SchemaError):
        parse_app_model({"screens": {"home": []}})
    with pytest.raises(SchemaError):
        parse_app_model({"initial": "home"})


def test_state_must_be_string_map():
    payload = base_model()
    payload["state"] = {"v": 3}
    with pytest.raises(SchemaError):
        parse_app_model(payload)


def test_empty_screens_rejected():
    payload = base_model()
    payload["screens"] = {}
    with pytest.raises(SchemaError):
        parse_app_model(payload)


def test_initial_screen_must_exist():
    payload = base_model()
    payload["initial"] = "nowhere"
    with pytest.raises(DanglingReference):
        parse_app_model(payload)


def test_text_var_must_exist():
    payload = base_model()
    payload["screens"]["home"].append({"id": "b", "text_var": "missing"})
    with pytest.raises(DanglingReference):
        parse_app_model(payload)


def test_unknown_action_rejected():
    payload = base_model()
    payload["transitions"] = [
        {"screen": "home", "widget": {"id": "a"}, "action": "swipe", "effects": []}
    ]
    with pytest.raises(SchemaError):
        parse_app_model(payload)


def test_press_back_takes_no_widget_key():
    payload = base_model()
    payload["transitions"] = [
        {"screen": "home", "widget": {"id": "a"}, "action": "press_back", "effects": []}
    ]
    with pytest.raises(SchemaError):
        parse_app_model(payload)


def test_widget_key_unknown_field():
    payload = base_model()
    payload["transitions"] = [
        {"screen": "home", "widget": {"label": "Go"}, "action": "click", "effects": []}
    ]
    with pytest.raises(SchemaError):
        parse_app_model(payload)


def test_widget_key_must_match_a_screen_widget():
    payload = base_model()
    payload["transitions"] = [
        {"screen": "home", "widget": {"text": "Stop"}, "action": "click", "effects": []}
    ]
    with pytest.raises(DanglingReference):
        parse_app_model(payload)


def test_goto_must_reference_screen():
    payload = base_model()
    payload["transitions"] = [
        {"screen": "home", "widget": {"id": "a"}, "action": "click",
         "effects": [{"goto": "nowhere"}]}
    ]
    with pytest.raises(DanglingReference):
        parse_app_model(payload)


def test_set_must_reference_state_var():
    payload = base_model()
    payload["transitions"] = [
        {"screen": "home", "widget": {"id": "a"}, "action": "click",
         "effects": [{"set": {"var": "missing", "value": "y"}}]}
    ]
    with pytest.raises(DanglingReference):
        parse_app_model(payload)


def test_transition_screen_must_exist():
    payload = base_model()
    payload["transitions"] = [
        {"screen": "nowhere", "widget": {"id": "a"}, "action": "click", "effects": []}
    ]
    with pytest.raises(DanglingReference):
        parse_app_model(payload)


# --- selector evaluation ---


def sel(field, value, contains=False):
    return Selector(clauses=(SelectorClause(field=field, value=value, contains=contains),))


def test_selector_exact_text(filer):
    widgets = filer.screens["file_list"]
    hits = evaluate_selector(widgets, filer.state_vars, sel("text", "Download"))
    assert len(hits) == 1
    assert hits[0].attributes.text == "Download"


def test_selector_contains(filer):
    widgets = filer.screens["file_list"]
    hits = evaluate_selector(widgets, filer.state_vars, sel("text", "Down", contains=True))
    assert [w.attributes.text for w in hits] == ["Download"]


def test_selector_id_matches_all_rows(filer):
    widgets = filer.screens["file_list"]
    hits = evaluate_selector(widgets, filer.state_vars, sel("id", "app:id/file_item"))
    assert [w.attributes.text for w in hits] == ["Download", "notes.txt"]


def test_selector_resolves_state_bound_text(filer):
    widgets = filer.screens["file_list"]
    hits = evaluate_selector(widgets, {"path": "/sdcard"}, sel("text", "/sdcard"))
    assert len(hits) == 1
    assert hits[0].text_var == "path"


def test_selector_no_match(filer):
    widgets = filer.screens["file_list"]
    assert evaluate_selector(widgets, filer.state_vars, sel("text", "zzz")) == []


def test_selector_multi_clause(filer):
    selector = Selector(clauses=(
        SelectorClause(field="id", value="app:id/file_item"),
        SelectorClause(field="text", value="notes.txt"),
    ))
    hits = evaluate_selector(filer.screens["file_list"], filer.state_vars, selector)
    assert [w.attributes.text for w in hits] == ["notes.txt"]


# --- end-to-end verdicts ---

OPEN_DIRECTORY = (SUITE_DIR / "filer" / "ground_truth" / "p01_open_directory.prop").read_text()


def test_directory_click_passes_on_correct_model(filer):
    verdict, trace = execute_property(filer, prop(OPEN_DIRECTORY))
    assert verdict.status == PASSED
    assert len(trace.events) == 1
    event = trace.events[0]
    assert event.action == "click"
    assert event.screen_before == "file_list"
    assert event.screen_after == "dir_view"
    assert trace.assertion_results[0][1] is True


def test_directory_click_violated_on_buggy_model(filer_buggy):
    verdict, trace = execute_property(filer_buggy, prop(OPEN_DIRECTORY))
    assert verdict.status == VIOLATED
    assert "assertion failed" in verdict.message
    # the click landed on the dialog screen instead of the directory view
    assert trace.events[0].screen_after == "file_dialog"


def test_precondition_unsatisfied(filer):
    text = """property ghost {
  pre { exists(widget(text="Ghost")) }
  run { click(widget(text="Ghost")) }
  post { assert exists(widget(text="Ghost")) }
}
"""
    verdict, trace = execute_property(filer, prop(text))
    assert verdict.status == PRECONDITION_UNSATISFIED
    assert trace.events == ()


def test_execution_error_on_unresolvable_target(filer):
    text = """property missing_target {
  pre { exists(widget(text="Download")) }
  run { click(widget(text="Ghost")) }
  post { assert exists(widget(text="Download")) }
}
"""
    verdict, trace = execute_property(filer, prop(text))
    assert verdict.status == EXECUTION_ERROR
    assert "matches nothing" in verdict.message
    assert trace.events == ()


def test_execution_error_on_empty_pick(filer):
    text = """property empty_pick {
  pre { exists(widget(text="Download")) }
  run {
    let items = find_all widget(id="app:id/file_item")
    let item = pick from items where contains(attr(elem, "text"), "zzz")
    click(item)
  }
  post { assert exists(widget(text="Download")) }
}
"""
    verdict, _ = execute_property(filer, prop(text))
    assert verdict.status == EXECUTION_ERROR
    assert "pick" in verdict.message


def test_bound_widget_unusable_after_navigation(filer):
    # item was bound on file_list; after the click we are on dir_view
    text = """property stale_binding {
  pre { exists(widget(text="Download")) }
  run {
    let items = find_all widget(text="Download")
    let item = pick from items where equals(attr(elem, "text"), "Download")
    click(item)
    click(item)
  }
  post { assert exists(widget(text="Download")) }
}
"""
    verdict, trace = execute_property(filer, prop(text))
    assert verdict.status == EXECUTION_ERROR
    assert "not on screen" in verdict.message
    assert len(trace.events) == 1


def test_unmatched_click_is_silent_noop(filer):
    text = """property noop_click {
  pre { exists(widget(text="Download")) }
  run {
    click(widget(text="Download"))
    click(widget(text="No files"))
  }
  post { assert contains(attr(widget(id="app:id/path_bar"), "text"), "Download") }
}
"""
    verdict, trace = execute_property(filer, prop(text))
    assert verdict.status == PASSED
    assert len(trace.events) == 2
    noop = trace.events[1]
    assert noop.screen_before == "dir_view"
    assert noop.screen_after == "dir_view"


def test_press_back_without_transition_is_noop(filer):
    text = """property back_at_root {
  pre { exists(widget(text="Download")) }
  run { press_back() }
  post { assert exists(widget(text="Download")) }
}
"""
    verdict, trace = execute_property(filer, prop(text))
    assert verdict.status == PASSED
    assert trace.events[0].action == "press_back"
    assert trace.events[0].widget == ""
    assert trace.events[0].screen_after == "file_list"


def test_wait_records_event_without_side_effects(filer):
    text = """property pause {
  pre { exists(widget(text="Download")) }
  run { wait(0.5) }
  post { assert exists(widget(text="Download")) }
}
"""
    verdict, trace = execute_property(filer, prop(text))
    assert verdict.status == PASSED
    assert trace.events[0].action == "wait"
    assert trace.events[0].screen_after == "file_list"


def test_set_text_writes_bound_state_var(filer):
    text = """property typed_name {
  pre { exists(widget(text="New folder")) }
  run {
    click(widget(text="New folder"))
    set_text(widget(desc="Folder name"), "Projects")
  }
  post { assert equals(attr(widget(desc="Folder name"), "text"), "Projects") }
}
"""
    verdict, trace = execute_property(filer, prop(text))
    assert verdict.status == PASSED
    assert [e.action for e in trace.events] == ["click", "set_text"]


def test_set_text_argument_substitution_in_effects():
    model = parse_app_model({
        "initial": "form",
        "state": {"greeting": ""},
        "screens": {
            "form": [
                {"class": "android.widget.EditText", "id": "app:id/name_field"},
                {"class": "android.widget.TextView", "id": "app:id/greeting",
                 "text_var": "greeting"},
            ]
        },
        "transitions": [
            {"screen": "form", "widget": {"id": "app:id/name_field"}, "action": "set_text",
             "effects": [{"set": {"var": "greeting", "value": "Hello $text"}}]}
        ],
    })
    text = """property greets {
  pre { exists(widget(id="app:id/name_field")) }
  run { set_text(widget(id="app:id/name_field"), "Ada") }
  post { assert equals(attr(widget(id="app:id/greeting"), "text"), "Hello Ada") }
}
"""
    verdict, _ = execute_property(model, prop(text))
    assert verdict.status == PASSED


def test_branch_taken_and_skipped(filer):
    text = """property branching {
  pre { exists(widget(text="Download")) }
  run {
    if exists(widget(text="notes.txt")) {
      click(widget(text="New folder"))
    } else {
      click(widget(text="Download"))
    }
  }
  post { assert exists(widget(desc="Folder name")) }
}
"""
    verdict, trace = execute_property(filer, prop(text))
    assert verdict.status == PASSED
    assert len(trace.events) == 1
    assert trace.events[0].screen_after == "create_dialog"


def test_violated_reports_first_failed_assertion(filer):
    text = """property two_asserts {
  pre { exists(widget(text="Download")) }
  run { click(widget(text="Download")) }
  post {
    assert exists(widget(id="app:id/path_bar"))
    assert equals(attr(widget(id="app:id/path_bar"), "text"), "/nope")
  }
}
"""
    verdict, trace = execute_property(filer, prop(text))
    assert verdict.status == VIOLATED
    assert "/nope" in verdict.message
    assert [ok for _, ok in trace.assertion_results] == [True, False]


def test_execution_is_deterministic(filer):
    ast = prop(OPEN_DIRECTORY)
    first = execute_property(filer, ast)
    second = execute_property(filer, ast)
    assert first == second


def test_model_state_is_not_mutated(filer):
    before = dict(filer.state_vars)
    execute_property(filer, prop(OPEN_DIRECTORY))
    assert filer.state_vars == before


def test_suite_ground_truths_pass_on_correct_models():
    expected_violations = {
        "filer": "p01_open_directory",
        "notes": "p06_save_note",
        "player": "p09_play_track",
    }
    for app_dir in sorted(SUITE_DIR.iterdir()):
        correct = load_app_model(app_dir / "models" / "model.json")
        buggy = load_app_model(app_dir / "models" / "model_buggy.json")
        for path in sorted((app_dir / "ground_truth").glob("*.prop")):
            ast = prop(path.read_text())
            verdict, _ = execute_property(correct, ast)
            assert verdict.status == PASSED, f"{path.name} on correct model: {verdict}"
            verdict, _ = execute_property(buggy, ast)
            expected = (
                VIOLATED if path.stem == expected_violations[app_dir.name] else PASSED
            )
            assert verdict.status == expected, f"{path.name} on buggy model: {verdict}"


def test_buggy_models_differ_only_in_listed_transitions():
    # keeps the fixture pairs honest: same screens and state, fewer or
    # redirected transitions
    for app_dir in sorted(SUITE_DIR.iterdir()):
        correct = json.loads((app_dir / "models" / "model.json").read_text())
        buggy = json.loads((app_dir / "models" / "model_buggy.json").read_text())
        assert correct["screens"] == buggy["screens"]
        assert correct["state"] == buggy["state"]
        assert correct["initial"] == buggy["initial"]
        assert correct["transitions"] != buggy["transitions"]
