"""Canonical textual form of property ASTs.

The printer is the inverse of the parser up to source positions:
parse_property(print_property(ast)) is structurally equal to ast.
"""

from __future__ import annotations

from .ast import (
    Action,
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
    PropertyAST,
    Selector,
    Stmt,
    Var,
)

INDENT = "  "

_ESCAPE_MAP = {"\\": "\\\\", '"': '\\"', "\n": "\\n", "\t": "\\t"}


def quote(value: str) -> str:
    return '"' + "".join(_ESCAPE_MAP.get(ch, ch) for ch in value) + '"'


def print_selector(selector: Selector) -> str:
    clauses = ", ".join(
        f"{c.field}{'~=' if c.contains else '='}{quote(c.value)}" for c in selector.clauses
    )
    return f"widget({clauses})"


# precedence levels: or=1, and=2, not=3, atoms=4
def _precedence(expr: Expr) -> int:
    if isinstance(expr, Or):
        return 1
    if isinstance(expr, And):
        return 2
    if isinstance(expr, Not):
        return 3
    return 4


def print_expr(expr: Expr) -> str:
    if isinstance(expr, Lit):
        if isinstance(expr.value, bool):
            return "true" if expr.value else "false"
        return quote(expr.value)
    if isinstance(expr, Var):
        return expr.name
    if isinstance(expr, Attr):
        ref = print_selector(expr.ref) if isinstance(expr.ref, Selector) else expr.ref.name
        return f"attr({ref}, {quote(expr.field_name)})"
    if isinstance(expr, Exists):
        return f"exists({print_selector(expr.selector)})"
    if isinstance(expr, Cmp):
        return f"{expr.op}({print_expr(expr.left)}, {print_expr(expr.right)})"
    if isinstance(expr, Not):
        return f"not {_child(expr.operand, 3)}"
    if isinstance(expr, And):
        # left-nested chains print flat; a right-nested operand needs parens
        return f"{_child(expr.left, 2)} and {_child(expr.right, 3)}"
    if isinstance(expr, Or):
        return f"{_child(expr.left, 1)} or {_child(expr.right, 2)}"
    raise TypeError(f"not an expression node: {expr!r}")


def _child(expr: Expr, minimum: int) -> str:
    text = print_expr(expr)
    if _precedence(expr) < minimum:
        return f"({text})"
    return text


def _format_number(value: float) -> str:
    if value == int(value):
        return str(int(value))
    return repr(value)


def print_action(action: Action) -> str:
    if action.kind == "press_back":
        return "press_back()"
    if action.kind == "wait":
        return f"wait({_format_number(action.duration)})"
    target = (
        print_selector(action.target)
        if isinstance(action.target, Selector)
        else str(action.target)
    )
    if action.kind == "set_text":
        return f"set_text({target}, {quote(action.argument)})"
    return f"{action.kind}({target})"


def _print_stmt(stmt: Stmt, depth: int, out: list[str]) -> None:
    pad = INDENT * depth
    if isinstance(stmt, LetAll):
        out.append(f"{pad}let {stmt.var} = find_all {print_selector(stmt.selector)}")
    elif isinstance(stmt, LetPick):
        out.append(f"{pad}let {stmt.var} = pick from {stmt.source} where {print_expr(stmt.predicate)}")
    elif isinstance(stmt, Do):
        out.append(f"{pad}{print_action(stmt.action)}")
    elif isinstance(stmt, If):
        out.append(f"{pad}if {print_expr(stmt.condition)} {{")
        for inner in stmt.then_body:
            _print_stmt(inner, depth + 1, out)
        if stmt.else_body is not None:
            out.append(f"{pad}}} else {{")
            for inner in stmt.else_body:
                _print_stmt(inner, depth + 1, out)
        out.append(f"{pad}}}")
    else:
        raise TypeError(f"not a statement node: {stmt!r}")


def print_property(ast: PropertyAST) -> str:
    """Render the canonical text of a property, newline-terminated."""
    out: list[str] = [f"property {ast.name} {{"]
    out.append(f"{INDENT}pre {{")
    out.append(f"{INDENT * 2}{print_expr(ast.precondition)}")
    out.append(f"{INDENT}}}")
    out.append(f"{INDENT}run {{")
    for stmt in ast.interaction:
        _print_stmt(stmt, 2, out)
    out.append(f"{INDENT}}}")
    out.append(f"{INDENT}post {{")
    for assertion in ast.postcondition:
        out.append(f"{INDENT * 2}assert {print_expr(assertion)}")
    out.append(f"{INDENT}}}")
    out.append("}")
    return "\n".join(out) + "\n"
