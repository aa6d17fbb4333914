"""Scripted app models and the property interpreter that runs against them.

A model is a small state machine: named screens holding widgets, transitions
fired by actions on widgets, and string state variables that widget text can
bind to.  Executing a property walks its triple: precondition on the initial
screen, interaction statements in order, assertions on the final screen.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

from .capture import Bounds, WidgetAttributes
from .propdsl.ast import (
    Action,
    And,
    Attr,
    Cmp,
    Do,
    ELEM_BINDING,
    Exists,
    Expr,
    If,
    LetAll,
    LetPick,
    Lit,
    Not,
    Or,
    PropertyAST,
    Selector,
    Var,
)
from .propdsl.printer import print_expr

PASSED = "Passed"
VIOLATED = "Violated"
PRECONDITION_UNSATISFIED = "PreconditionUnsatisfied"
EXECUTION_ERROR = "ExecutionError"


class ModelError(Exception):
    pass


class SchemaError(ModelError):
    """The model JSON is missing required structure."""


class DanglingReference(ModelError):
    """A transition, goto, or variable binding points at nothing."""


@dataclass(frozen=True)
class SimWidget:
    """A widget scripted on a model screen; text may bind to a state var."""

    attributes: WidgetAttributes
    text_var: Optional[str] = None

    def resolved_text(self, state: dict[str, str]) -> Optional[str]:
        if self.text_var is not None:
            return state[self.text_var]
        return self.attributes.text


@dataclass(frozen=True)
class Effect:
    goto: Optional[str] = None
    set_var: Optional[str] = None
    set_value: Optional[str] = None


@dataclass(frozen=True)
class Transition:
    screen: str
    widget_key: Optional[dict]  # raw field=value match; None for press_back
    action: str
    effects: tuple[Effect, ...]


@dataclass(frozen=True)
class AppModel:
    initial_screen: str
    state_vars: dict[str, str]
    screens: dict[str, tuple[SimWidget, ...]]
    transitions: tuple[Transition, ...]


@dataclass(frozen=True)
class TraceEvent:
    action: str
    widget: str  # compact identity of the acted widget, "" for targetless
    screen_before: str
    screen_after: str


@dataclass(frozen=True)
class RunTrace:
    events: tuple[TraceEvent, ...] = ()
    assertion_results: tuple[tuple[str, bool], ...] = ()


@dataclass(frozen=True)
class Verdict:
    status: str
    message: str = ""


TRANSITION_ACTIONS = ("click", "long_click", "set_text", "press_back")
_WIDGET_KEY_FIELDS = ("text", "id", "desc", "class")
_FIELD_TO_ATTR = {
    "text": "text",
    "id": "resource_id",
    "desc": "content_description",
    "class": "class_name",
}


def load_app_model(path: str | Path) -> AppModel:
    """Parse and validate a model file; every reference must resolve."""
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
    except ValueError as exc:
        raise SchemaError(f"model file is not valid JSON: {exc}") from exc
    return parse_app_model(payload)


def parse_app_model(payload: dict) -> AppModel:
    if not isinstance(payload, dict):
        raise SchemaError("model must be a JSON object")
    for key in ("initial", "screens"):
        if key not in payload:
            raise SchemaError(f"model missing required key {key!r}")
    state = payload.get("state", {})
    if not isinstance(state, dict) or not all(
        isinstance(k, str) and isinstance(v, str) for k, v in state.items()
    ):
        raise SchemaError("state must map string vars to string values")
    screens_raw = payload["screens"]
    if not isinstance(screens_raw, dict) or not screens_raw:
        raise SchemaError("screens must be a non-empty object")

    screens: dict[str, tuple[SimWidget, ...]] = {}
    for screen_id, widgets_raw in screens_raw.items():
        if not isinstance(widgets_raw, list):
            raise SchemaError(f"screen {screen_id!r} must hold a list of widgets")
        widgets = []
        for index, raw in enumerate(widgets_raw):
            if not isinstance(raw, dict):
                raise SchemaError(f"widget {index} on screen {screen_id!r} must be an object")
            text_var = raw.get("text_var")
            if text_var is not None and text_var not in state:
                raise DanglingReference(
                    f"widget on screen {screen_id!r} binds unknown state var {text_var!r}"
                )
            bounds_raw = raw.get("bounds", [0, 0, 0, 0])
            attrs = WidgetAttributes(
                class_name=raw.get("class", "android.view.View"),
                bounds=Bounds(*bounds_raw),
                node_index=index,
                text=raw.get("text"),
                resource_id=raw.get("id"),
                content_description=raw.get("desc"),
                clickable=bool(raw.get("clickable", False)),
            )
            widgets.append(SimWidget(attributes=attrs, text_var=text_var))
        screens[screen_id] = tuple(widgets)

    initial = payload["initial"]
    if initial not in screens:
        raise DanglingReference(f"initial screen {initial!r} not defined")

    transitions = []
    for index, raw in enumerate(payload.get("transitions", [])):
        screen = raw.get("screen")
        if screen not in screens:
            raise DanglingReference(f"transition {index} references unknown screen {screen!r}")
        action = raw.get("action")
        if action not in TRANSITION_ACTIONS:
            raise SchemaError(f"transition {index} has unknown action {action!r}")
        widget_key = raw.get("widget")
        if action == "press_back":
            if widget_key is not None:
                raise SchemaError(f"transition {index}: press_back takes no widget key")
        else:
            if not isinstance(widget_key, dict) or not widget_key:
                raise SchemaError(f"transition {index} needs a widget key")
            for key_field in widget_key:
                if key_field not in _WIDGET_KEY_FIELDS:
                    raise SchemaError(
                        f"transition {index} widget key has unknown field {key_field!r}"
                    )
            if not _key_resolvable(widget_key, screens[screen], state):
                raise DanglingReference(
                    f"transition {index} widget key {widget_key!r} matches nothing on "
                    f"screen {screen!r}"
                )
        effects = []
        for eff in raw.get("effects", []):
            if "goto" in eff:
                if eff["goto"] not in screens:
                    raise DanglingReference(
                        f"transition {index} goto references unknown screen {eff['goto']!r}"
                    )
                effects.append(Effect(goto=eff["goto"]))
            elif "set" in eff:
                var = eff["set"].get("var")
                if var not in state:
                    raise DanglingReference(
                        f"transition {index} sets unknown state var {var!r}"
                    )
                effects.append(Effect(set_var=var, set_value=eff["set"].get("value", "")))
            else:
                raise SchemaError(f"transition {index} has an effect with no goto/set")
        transitions.append(
            Transition(screen=screen, widget_key=widget_key, action=action,
                       effects=tuple(effects))
        )

    return AppModel(
        initial_screen=initial,
        state_vars=dict(state),
        screens=screens,
        transitions=tuple(transitions),
    )


def _widget_field(widget: SimWidget, field_name: str, state: dict[str, str]) -> Optional[str]:
    if field_name == "text":
        return widget.resolved_text(state)
    return getattr(widget.attributes, _FIELD_TO_ATTR[field_name])


def _key_matches(key: dict, widget: SimWidget, state: dict[str, str]) -> bool:
    return all(_widget_field(widget, f, state) == v for f, v in key.items())


def _key_resolvable(key: dict, widgets: tuple[SimWidget, ...], state: dict[str, str]) -> bool:
    return any(_key_matches(key, w, state) for w in widgets)


def evaluate_selector(
    widgets: tuple[SimWidget, ...], state: dict[str, str], selector: Selector
) -> list[SimWidget]:
    """All widgets on the screen satisfying every clause, document order."""
    out = []
    for widget in widgets:
        ok = True
        for clause in selector.clauses:
            actual = _widget_field(widget, clause.field, state)
            if actual is None:
                ok = False
                break
            if clause.contains:
                ok = clause.value in actual
            else:
                ok = actual == clause.value
            if not ok:
                break
        if ok:
            out.append(widget)
    return out


class _ExecError(Exception):
    pass


@dataclass(frozen=True)
class _Bound:
    """A widget captured into a variable, with its text snapshotted at bind
    time so assertions can reference it after navigation."""

    widget: SimWidget
    text: Optional[str]


class _Runner:
    def __init__(self, model: AppModel):
        self.model = model
        self.state = dict(model.state_vars)
        self.screen = model.initial_screen
        self.events: list[TraceEvent] = []

    @property
    def widgets(self) -> tuple[SimWidget, ...]:
        return self.model.screens[self.screen]

    def bind(self, widget: SimWidget) -> _Bound:
        return _Bound(widget=widget, text=widget.resolved_text(self.state))

    # --- expressions ---

    def eval_expr(self, expr: Expr, env: dict) -> Union[str, bool]:
        if isinstance(expr, Lit):
            return expr.value
        if isinstance(expr, Var):
            raise _ExecError(
                f"variable {expr.name!r} is a widget reference; use attr({expr.name}, ...)"
            )
        if isinstance(expr, Exists):
            return bool(evaluate_selector(self.widgets, self.state, expr.selector))
        if isinstance(expr, Attr):
            return self.eval_attr(expr, env)
        if isinstance(expr, Cmp):
            left = self.eval_str(expr.left, env)
            right = self.eval_str(expr.right, env)
            if expr.op == "contains":
                return right in left
            if expr.op == "startswith":
                return left.startswith(right)
            return left == right
        if isinstance(expr, Not):
            return not self.eval_bool(expr.operand, env)
        if isinstance(expr, And):
            return self.eval_bool(expr.left, env) and self.eval_bool(expr.right, env)
        if isinstance(expr, Or):
            return self.eval_bool(expr.left, env) or self.eval_bool(expr.right, env)
        raise _ExecError(f"cannot evaluate {type(expr).__name__}")

    def eval_attr(self, expr: Attr, env: dict) -> str:
        if isinstance(expr.ref, Selector):
            matches = evaluate_selector(self.widgets, self.state, expr.ref)
            if not matches:
                raise _ExecError(
                    f"attr() selector matches nothing on screen {self.screen!r}"
                )
            bound = self.bind(matches[0])
        else:
            value = env.get(expr.ref.name)
            if not isinstance(value, _Bound):
                raise _ExecError(f"variable {expr.ref.name!r} is not a widget")
            bound = value
        if expr.field_name == "text":
            return bound.text or ""
        raw = getattr(bound.widget.attributes, _FIELD_TO_ATTR[expr.field_name])
        return raw or ""

    def eval_bool(self, expr: Expr, env: dict) -> bool:
        value = self.eval_expr(expr, env)
        if not isinstance(value, bool):
            raise _ExecError(f"expected a boolean, got {value!r}")
        return value

    def eval_str(self, expr: Expr, env: dict) -> str:
        value = self.eval_expr(expr, env)
        if isinstance(value, bool):
            raise _ExecError("expected a string, got a boolean")
        return value

    # --- statements ---

    def run_statements(self, stmts: tuple, env: dict) -> dict:
        for stmt in stmts:
            env = self.run_statement(stmt, env)
        return env

    def run_statement(self, stmt, env: dict) -> dict:
        if isinstance(stmt, LetAll):
            matches = evaluate_selector(self.widgets, self.state, stmt.selector)
            new_env = dict(env)
            new_env[stmt.var] = [self.bind(w) for w in matches]
            return new_env
        if isinstance(stmt, LetPick):
            source = env.get(stmt.source)
            if not isinstance(source, list):
                raise _ExecError(f"variable {stmt.source!r} is not a find_all list")
            for bound in source:
                pred_env = dict(env)
                pred_env[ELEM_BINDING] = bound
                if self.eval_bool(stmt.predicate, pred_env):
                    new_env = dict(env)
                    new_env[stmt.var] = bound
                    return new_env
            raise _ExecError(
                f"pick for {stmt.var!r} found no element satisfying its predicate"
            )
        if isinstance(stmt, Do):
            self.run_action(stmt.action, env)
            return env
        if isinstance(stmt, If):
            if self.eval_bool(stmt.condition, env):
                self.run_statements(stmt.then_body, dict(env))
            elif stmt.else_body is not None:
                self.run_statements(stmt.else_body, dict(env))
            return env
        raise _ExecError(f"cannot execute {type(stmt).__name__}")

    def run_action(self, action: Action, env: dict) -> None:
        before = self.screen
        acted: Optional[SimWidget] = None
        if action.kind in ("click", "long_click", "set_text"):
            acted = self.resolve_target(action, env)
            if action.kind == "set_text" and acted.text_var is not None:
                # typing writes straight into the bound state var
                self.state[acted.text_var] = action.argument
        elif action.kind == "wait":
            # virtual clock only; nothing observable changes
            self.events.append(TraceEvent("wait", "", before, before))
            return
        self.apply_transition(action, acted)
        self.events.append(
            TraceEvent(action.kind, _widget_identity(acted), before, self.screen)
        )

    def resolve_target(self, action: Action, env: dict) -> SimWidget:
        if isinstance(action.target, Selector):
            matches = evaluate_selector(self.widgets, self.state, action.target)
            if not matches:
                raise _ExecError(
                    f"{action.kind} target matches nothing on screen {self.screen!r}"
                )
            return matches[0]
        bound = env.get(action.target)
        if isinstance(bound, list):
            raise _ExecError(f"variable {action.target!r} is a list; pick one element first")
        if not isinstance(bound, _Bound):
            raise _ExecError(f"variable {action.target!r} is not bound to a widget")
        if bound.widget not in self.widgets:
            raise _ExecError(
                f"widget bound to {action.target!r} is not on screen {self.screen!r}"
            )
        return bound.widget

    def apply_transition(self, action: Action, acted: Optional[SimWidget]) -> None:
        for transition in self.model.transitions:
            if transition.screen != self.screen or transition.action != action.kind:
                continue
            if action.kind == "press_back":
                matched = True
            else:
                matched = transition.widget_key is not None and _key_matches(
                    transition.widget_key, acted, self.state
                )
            if not matched:
                continue
            for effect in transition.effects:
                if effect.goto is not None:
                    self.screen = effect.goto
                if effect.set_var is not None:
                    value = effect.set_value
                    if action.kind == "set_text" and action.argument is not None:
                        value = value.replace("$text", action.argument)
                    self.state[effect.set_var] = value
            return
        # no registered transition: the interaction is absorbed silently


def _widget_identity(widget: Optional[SimWidget]) -> str:
    if widget is None:
        return ""
    attrs = widget.attributes
    if attrs.resource_id:
        return f'id="{attrs.resource_id}"'
    if attrs.text:
        return f'text="{attrs.text}"'
    if attrs.content_description:
        return f'desc="{attrs.content_description}"'
    return f'class="{attrs.class_name}"'


def execute_property(model: AppModel, ast: PropertyAST) -> tuple[Verdict, RunTrace]:
    """Run one property against a fresh copy of the model state."""
    runner = _Runner(model)
    try:
        if not runner.eval_bool(ast.precondition, {}):
            return Verdict(PRECONDITION_UNSATISFIED), RunTrace()
    except _ExecError as exc:
        return Verdict(EXECUTION_ERROR, str(exc)), RunTrace()

    try:
        env = runner.run_statements(ast.interaction, {})
    except _ExecError as exc:
        return Verdict(EXECUTION_ERROR, str(exc)), RunTrace(events=tuple(runner.events))

    results = []
    try:
        for assertion in ast.postcondition:
            results.append((print_expr(assertion), runner.eval_bool(assertion, env)))
    except _ExecError as exc:
        return Verdict(EXECUTION_ERROR, str(exc)), RunTrace(events=tuple(runner.events))

    trace = RunTrace(events=tuple(runner.events), assertion_results=tuple(results))
    if all(ok for _, ok in results):
        return Verdict(PASSED), trace
    failed = next(text for text, ok in results if not ok)
    return Verdict(VIOLATED, f"assertion failed: {failed}"), trace
