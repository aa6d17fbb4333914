"""Static checks over property ASTs: binding discipline, the two-type
expression system (string, bool), action shapes, and optional grounding
warnings against a widget context store.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from ..grounding import IdClause, WidgetContextStore, clause_matches
from .ast import (
    ACTION_KINDS,
    ATTR_FIELDS,
    CMP_OPS,
    ELEM_BINDING,
    NO_POS,
    And,
    Attr,
    Cmp,
    Do,
    Exists,
    Expr,
    If,
    LetAll,
    LetPick,
    Lit,
    Not,
    Or,
    Pos,
    PropertyAST,
    Selector,
    Stmt,
    Var,
)
from .parser import MAX_WAIT_SECONDS
from .printer import print_selector

SELECTOR_FIELD_TO_ATTR = {
    "text": "text",
    "id": "resource_id",
    "desc": "content_description",
    "class": "class_name",
}


@dataclass(frozen=True)
class Diagnostic:
    severity: str  # "error" | "warning"
    message: str
    pos: Pos = NO_POS


class _Checker:
    def __init__(self, store: Optional[WidgetContextStore]):
        self.store = store
        self.diags: list[Diagnostic] = []

    def error(self, message: str, pos: Pos) -> None:
        self.diags.append(Diagnostic("error", message, pos))

    def warning(self, message: str, pos: Pos) -> None:
        self.diags.append(Diagnostic("warning", message, pos))

    # --- selectors ---

    def check_selector(self, selector: Selector) -> None:
        if not selector.clauses:
            self.error("selector has no clauses", selector.pos)
            return
        for clause in selector.clauses:
            if clause.field not in SELECTOR_FIELD_TO_ATTR:
                self.error(f"unknown selector field {clause.field!r}", selector.pos)
                return
            if not clause.value:
                self.error("selector value must be non-empty", selector.pos)
                return
        if self.store is not None and not self._resolves(selector):
            self.warning(
                f"selector {print_selector(selector)} matches no widget in the context store",
                selector.pos,
            )

    def _resolves(self, selector: Selector) -> bool:
        for widget in self.store.widgets:
            if all(
                clause_matches(
                    IdClause(SELECTOR_FIELD_TO_ATTR[c.field], c.value, c.contains),
                    widget.attributes,
                )
                for c in selector.clauses
            ):
                return True
        return False

    # --- expressions; returns a type in {string, bool, widget, widget_list, unknown} ---

    def check_expr(self, expr: Expr, env: dict[str, str]) -> str:
        if isinstance(expr, Lit):
            return "bool" if isinstance(expr.value, bool) else "string"
        if isinstance(expr, Var):
            kind = env.get(expr.name)
            if kind is None:
                self.error(f"variable {expr.name!r} is not bound", expr.pos)
                return "unknown"
            return kind
        if isinstance(expr, Exists):
            self.check_selector(expr.selector)
            return "bool"
        if isinstance(expr, Attr):
            if expr.field_name not in ATTR_FIELDS:
                self.error(f"unknown attribute {expr.field_name!r}", expr.pos)
            if isinstance(expr.ref, Selector):
                self.check_selector(expr.ref)
            else:
                kind = self.check_expr(expr.ref, env)
                if kind == "widget_list":
                    self.error(
                        f"attr() needs a single widget, but {expr.ref.name!r} is a list",
                        expr.pos,
                    )
                elif kind not in ("widget", "unknown"):
                    self.error(f"attr() needs a widget variable, got {kind}", expr.pos)
            return "string"
        if isinstance(expr, Cmp):
            if expr.op not in CMP_OPS:
                self.error(f"unknown comparison {expr.op!r}", expr.pos)
            for side in (expr.left, expr.right):
                kind = self.check_expr(side, env)
                if kind in ("widget", "widget_list"):
                    self.error(
                        f"{expr.op}() operates on strings; wrap the widget in attr(..., \"text\")",
                        expr.pos,
                    )
                elif kind == "bool":
                    self.error(f"{expr.op}() operates on strings, got bool", expr.pos)
            return "bool"
        if isinstance(expr, Not):
            self._require_bool(expr.operand, env, "not")
            return "bool"
        if isinstance(expr, (And, Or)):
            op = "and" if isinstance(expr, And) else "or"
            self._require_bool(expr.left, env, op)
            self._require_bool(expr.right, env, op)
            return "bool"
        self.error(f"unknown expression node {type(expr).__name__}", NO_POS)
        return "unknown"

    def _require_bool(self, expr: Expr, env: dict[str, str], op: str) -> None:
        kind = self.check_expr(expr, env)
        if kind not in ("bool", "unknown"):
            self.error(f"{op!r} needs a boolean operand, got {kind}", getattr(expr, "pos", NO_POS))

    # --- statements ---

    def check_statements(self, stmts: tuple[Stmt, ...], env: dict[str, str]) -> dict[str, str]:
        for stmt in stmts:
            env = self.check_statement(stmt, env)
        return env

    def check_statement(self, stmt: Stmt, env: dict[str, str]) -> dict[str, str]:
        if isinstance(stmt, LetAll):
            self.check_selector(stmt.selector)
            return self._bind(env, stmt.var, "widget_list", stmt.pos)
        if isinstance(stmt, LetPick):
            source_kind = env.get(stmt.source)
            if source_kind is None:
                self.error(f"variable {stmt.source!r} is not bound", stmt.pos)
            elif source_kind != "widget_list":
                self.error(f"pick needs a find_all list, but {stmt.source!r} is {source_kind}",
                           stmt.pos)
            pred_env = dict(env)
            pred_env[ELEM_BINDING] = "widget"
            kind = self.check_expr(stmt.predicate, pred_env)
            if kind not in ("bool", "unknown"):
                self.error(f"pick predicate must be boolean, got {kind}", stmt.pos)
            return self._bind(env, stmt.var, "widget", stmt.pos)
        if isinstance(stmt, Do):
            self.check_action(stmt, env)
            return env
        if isinstance(stmt, If):
            kind = self.check_expr(stmt.condition, env)
            if kind not in ("bool", "unknown"):
                self.error(f"if condition must be boolean, got {kind}", stmt.pos)
            # bindings inside a branch stay local: the branch may not execute
            self.check_statements(stmt.then_body, dict(env))
            if stmt.else_body is not None:
                self.check_statements(stmt.else_body, dict(env))
            return env
        self.error(f"unknown statement node {type(stmt).__name__}", NO_POS)
        return env

    def _bind(self, env: dict[str, str], var: str, kind: str, pos: Pos) -> dict[str, str]:
        if var in env:
            self.error(f"variable {var!r} is already bound", pos)
            return env
        new_env = dict(env)
        new_env[var] = kind
        return new_env

    def check_action(self, stmt: Do, env: dict[str, str]) -> None:
        action = stmt.action
        if action.kind not in ACTION_KINDS:
            self.error(f"unknown action kind {action.kind!r}", stmt.pos)
            return
        if action.kind in ("click", "long_click", "set_text"):
            if action.target is None:
                self.error(f"{action.kind} needs a target", stmt.pos)
            elif isinstance(action.target, Selector):
                self.check_selector(action.target)
            else:
                kind = env.get(action.target)
                if kind is None:
                    self.error(f"variable {action.target!r} is not bound", stmt.pos)
                elif kind != "widget":
                    self.error(
                        f"{action.kind} target {action.target!r} must be a single widget, "
                        f"got {kind}",
                        stmt.pos,
                    )
            if action.kind == "set_text" and action.argument is None:
                self.error("set_text needs a text argument", stmt.pos)
        else:
            if action.target is not None:
                self.error(f"{action.kind} takes no target", stmt.pos)
            if action.kind == "wait":
                if action.duration is None or not 0 < action.duration <= MAX_WAIT_SECONDS:
                    self.error(
                        f"wait duration must be in (0, {MAX_WAIT_SECONDS:g}] seconds", stmt.pos
                    )


def validate(ast: PropertyAST, store: Optional[WidgetContextStore] = None) -> list[Diagnostic]:
    """Check an AST; errors block execution, warnings flag grounding gaps."""
    checker = _Checker(store)

    kind = checker.check_expr(ast.precondition, {})
    if kind not in ("bool", "unknown"):
        checker.error(f"precondition must be boolean, got {kind}",
                      getattr(ast.precondition, "pos", NO_POS))

    env = checker.check_statements(ast.interaction, {})

    if not any(_has_do(s) for s in ast.interaction):
        checker.error("interaction must contain at least one action", ast.pos)

    if not ast.postcondition:
        checker.error("postcondition must contain at least one assertion", ast.pos)
    for assertion in ast.postcondition:
        kind = checker.check_expr(assertion, env)
        if kind not in ("bool", "unknown"):
            checker.error(f"assertion must be boolean, got {kind}",
                          getattr(assertion, "pos", NO_POS))

    return checker.diags


def _has_do(stmt: Stmt) -> bool:
    if isinstance(stmt, Do):
        return True
    if isinstance(stmt, If):
        if any(_has_do(s) for s in stmt.then_body):
            return True
        if stmt.else_body is not None:
            return any(_has_do(s) for s in stmt.else_body)
    return False
