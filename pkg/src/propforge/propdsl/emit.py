"""Template-driven emission of property ASTs to third-party script shapes.

A template maps every AST node kind to a renderer; emission walks the tree
and substitutes text with no semantic transformation.  Two templates ship:
the identity template (canonical DSL text) and a Kea-style Python script.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Mapping

from .ast import (
    And,
    Attr,
    Cmp,
    Do,
    Exists,
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
from .printer import quote

INDENT = "  "


class UnsupportedNode(Exception):
    """The template has no renderer for a node kind present in the AST."""


_NODE_KINDS = {
    PropertyAST: "property",
    Selector: "selector",
    Lit: "lit",
    Var: "var",
    Attr: "attr",
    Exists: "exists",
    Cmp: "cmp",
    Not: "not",
    And: "and",
    Or: "or",
    LetAll: "let_all",
    LetPick: "let_pick",
    Do: "do",
    If: "if",
}


@dataclass(frozen=True)
class EmissionTemplate:
    name: str
    renderers: Mapping[str, Callable]


class Emitter:
    """Walk state handed to renderers: dispatch, precedence-aware children,
    and a name-remap scope (used to rename the pick binding)."""

    def __init__(self, template: EmissionTemplate):
        self.template = template
        self.scope: dict[str, str] = {}

    def render(self, node, depth: int = 0) -> str:
        kind = _NODE_KINDS.get(type(node))
        if kind is None:
            raise UnsupportedNode(f"no node kind for {type(node).__name__}")
        renderer = self.template.renderers.get(kind)
        if renderer is None:
            raise UnsupportedNode(f"template {self.template.name!r} lacks a {kind!r} renderer")
        return renderer(self, node, depth)

    def child(self, node, minimum: int, depth: int = 0) -> str:
        """Render a sub-expression, parenthesizing if it binds looser."""
        text = self.render(node, depth)
        if _precedence(node) < minimum:
            return f"({text})"
        return text


def _precedence(node) -> int:
    if isinstance(node, Or):
        return 1
    if isinstance(node, And):
        return 2
    if isinstance(node, Not):
        return 3
    return 4


def emit_framework_script(ast: PropertyAST, template: EmissionTemplate) -> str:
    return Emitter(template).render(ast)


# --- identity template: canonical DSL text ---------------------------------

def _id_property(e: Emitter, n: PropertyAST, depth: int) -> str:
    out = [f"property {n.name} {{"]
    out.append(f"{INDENT}pre {{")
    out.append(f"{INDENT * 2}{e.render(n.precondition)}")
    out.append(f"{INDENT}}}")
    out.append(f"{INDENT}run {{")
    for stmt in n.interaction:
        out.append(e.render(stmt, 2))
    out.append(f"{INDENT}}}")
    out.append(f"{INDENT}post {{")
    for assertion in n.postcondition:
        out.append(f"{INDENT * 2}assert {e.render(assertion)}")
    out.append(f"{INDENT}}}")
    out.append("}")
    return "\n".join(out) + "\n"


def _id_selector(e: Emitter, n: Selector, depth: int) -> str:
    clauses = ", ".join(
        f"{c.field}{'~=' if c.contains else '='}{quote(c.value)}" for c in n.clauses
    )
    return f"widget({clauses})"


def _id_target(e: Emitter, target) -> str:
    return e.render(target) if isinstance(target, Selector) else str(target)


def _id_do(e: Emitter, n: Do, depth: int) -> str:
    pad = INDENT * depth
    a = n.action
    if a.kind == "press_back":
        return f"{pad}press_back()"
    if a.kind == "wait":
        num = int(a.duration) if a.duration == int(a.duration) else a.duration
        return f"{pad}wait({num})"
    if a.kind == "set_text":
        return f"{pad}set_text({_id_target(e, a.target)}, {quote(a.argument)})"
    return f"{pad}{a.kind}({_id_target(e, a.target)})"


def _id_if(e: Emitter, n: If, depth: int) -> str:
    pad = INDENT * depth
    out = [f"{pad}if {e.render(n.condition)} {{"]
    for stmt in n.then_body:
        out.append(e.render(stmt, depth + 1))
    if n.else_body is not None:
        out.append(f"{pad}}} else {{")
        for stmt in n.else_body:
            out.append(e.render(stmt, depth + 1))
    out.append(f"{pad}}}")
    return "\n".join(out)


IDENTITY_TEMPLATE = EmissionTemplate(
    name="identity",
    renderers={
        "property": _id_property,
        "selector": _id_selector,
        "lit": lambda e, n, d: ("true" if n.value else "false") if isinstance(n.value, bool) else quote(n.value),
        "var": lambda e, n, d: e.scope.get(n.name, n.name),
        "attr": lambda e, n, d: f"attr({_id_target(e, n.ref) if isinstance(n.ref, Selector) else e.scope.get(n.ref.name, n.ref.name)}, {quote(n.field_name)})",
        "exists": lambda e, n, d: f"exists({e.render(n.selector)})",
        "cmp": lambda e, n, d: f"{n.op}({e.render(n.left)}, {e.render(n.right)})",
        "not": lambda e, n, d: f"not {e.child(n.operand, 3)}",
        "and": lambda e, n, d: f"{e.child(n.left, 2)} and {e.child(n.right, 3)}",
        "or": lambda e, n, d: f"{e.child(n.left, 1)} or {e.child(n.right, 2)}",
        "let_all": lambda e, n, d: f"{INDENT * d}let {n.var} = find_all {e.render(n.selector)}",
        "let_pick": lambda e, n, d: f"{INDENT * d}let {n.var} = pick from {n.source} where {e.render(n.predicate)}",
        "do": _id_do,
        "if": _id_if,
    },
)


# --- Kea-style template: Python property class -----------------------------

_KEA_SELECTOR_KEYS = {
    ("text", False): "text",
    ("text", True): "textContains",
    ("id", False): "resourceId",
    ("desc", False): "description",
    ("desc", True): "descriptionContains",
    ("class", False): "className",
}
_KEA_MATCHES_KEYS = {"id": "resourceIdMatches", "class": "classNameMatches"}


def _py_str(value: str) -> str:
    return quote(value)


def _kea_selector(e: Emitter, n: Selector, depth: int) -> str:
    parts = []
    for c in n.clauses:
        key = _KEA_SELECTOR_KEYS.get((c.field, c.contains))
        if key is not None:
            parts.append(f"{key}={_py_str(c.value)}")
        else:
            # contains-mode on id/class falls back to a regex matcher
            parts.append(f'{_KEA_MATCHES_KEYS[c.field]}=".*{c.value}.*"')
    return f"self.device({', '.join(parts)})"


_KEA_INFO_KEYS = {"id": "resourceName", "desc": "contentDescription", "class": "className"}


def _kea_attr(e: Emitter, n: Attr, depth: int) -> str:
    ref = e.render(n.ref) if isinstance(n.ref, Selector) else e.scope.get(n.ref.name, n.ref.name)
    if n.field_name == "text":
        return f"{ref}.get_text()"
    return f'{ref}.info["{_KEA_INFO_KEYS[n.field_name]}"]'


def _kea_cmp(e: Emitter, n: Cmp, depth: int) -> str:
    left = e.render(n.left)
    right = e.render(n.right)
    if n.op == "contains":
        return f"({right} in {left})"
    if n.op == "startswith":
        return f"{left}.startswith({right})"
    return f"({left} == {right})"


def _kea_do(e: Emitter, n: Do, depth: int) -> str:
    pad = INDENT * depth
    a = n.action
    if a.kind == "press_back":
        return f'{pad}self.device.press("back")'
    if a.kind == "wait":
        num = int(a.duration) if a.duration == int(a.duration) else a.duration
        return f"{pad}time.sleep({num})"
    target = e.render(a.target) if isinstance(a.target, Selector) else e.scope.get(a.target, a.target)
    if a.kind == "set_text":
        return f"{pad}{target}.set_text({_py_str(a.argument)})"
    return f"{pad}{target}.{a.kind}()"


def _kea_let_pick(e: Emitter, n: LetPick, depth: int) -> str:
    pad = INDENT * depth
    saved = dict(e.scope)
    e.scope["elem"] = "w"
    try:
        pred = e.render(n.predicate)
    finally:
        e.scope = saved
    return f"{pad}{n.var} = next(w for w in {n.source} if {pred})"


def _kea_if(e: Emitter, n: If, depth: int) -> str:
    pad = INDENT * depth
    out = [f"{pad}if {e.render(n.condition)}:"]
    for stmt in n.then_body:
        out.append(e.render(stmt, depth + 1))
    if n.else_body is not None:
        out.append(f"{pad}else:")
        for stmt in n.else_body:
            out.append(e.render(stmt, depth + 1))
    return "\n".join(out)


def _kea_property(e: Emitter, n: PropertyAST, depth: int) -> str:
    out = [
        "import time",
        "",
        "from kea import AndroidCheck, precondition, rule",
        "",
        "",
        "class GeneratedProps(AndroidCheck):",
        "",
        f"{INDENT}@precondition(lambda self: {e.render(n.precondition)})",
        f"{INDENT}@rule()",
        f"{INDENT}def {n.name}(self):",
    ]
    for stmt in n.interaction:
        out.append(e.render(stmt, 2))
    for assertion in n.postcondition:
        out.append(f"{INDENT * 2}assert {e.render(assertion)}")
    return "\n".join(out) + "\n"


KEA_TEMPLATE = EmissionTemplate(
    name="kea",
    renderers={
        "property": _kea_property,
        "selector": _kea_selector,
        "lit": lambda e, n, d: ("True" if n.value else "False") if isinstance(n.value, bool) else _py_str(n.value),
        "var": lambda e, n, d: e.scope.get(n.name, n.name),
        "attr": _kea_attr,
        "exists": lambda e, n, d: f"{e.render(n.selector)}.exists()",
        "cmp": _kea_cmp,
        "not": lambda e, n, d: f"(not {e.render(n.operand)})",
        "and": lambda e, n, d: f"({e.render(n.left)} and {e.render(n.right)})",
        "or": lambda e, n, d: f"({e.render(n.left)} or {e.render(n.right)})",
        "let_all": lambda e, n, d: f"{INDENT * d}{n.var} = {e.render(n.selector)}",
        "let_pick": _kea_let_pick,
        "do": _kea_do,
        "if": _kea_if,
    },
)
