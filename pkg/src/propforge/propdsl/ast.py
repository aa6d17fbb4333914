"""AST node types for the property language.

Every node carries a source position for diagnostics; positions are excluded
from equality so parse(print(ast)) compares structurally equal to ast.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Optional, Union


@dataclass(frozen=True)
class Pos:
    line: int = 0
    col: int = 0


NO_POS = Pos()

SELECTOR_FIELDS = ("text", "id", "desc", "class")
ATTR_FIELDS = SELECTOR_FIELDS
ACTION_KINDS = ("click", "long_click", "set_text", "press_back", "wait")
CMP_OPS = ("contains", "startswith", "equals")

# the implicit binding available inside a pick predicate
ELEM_BINDING = "elem"


@dataclass(frozen=True)
class SelectorClause:
    field: str
    value: str
    contains: bool = False


@dataclass(frozen=True)
class Selector:
    clauses: tuple[SelectorClause, ...]
    pos: Pos = field(default=NO_POS, compare=False, repr=False)


# --- expressions -----------------------------------------------------------

@dataclass(frozen=True)
class Lit:
    value: Union[str, bool]
    pos: Pos = field(default=NO_POS, compare=False, repr=False)


@dataclass(frozen=True)
class Var:
    name: str
    pos: Pos = field(default=NO_POS, compare=False, repr=False)


@dataclass(frozen=True)
class Attr:
    """Attribute read on a widget: attr(ref, "text")."""

    ref: Union[Var, Selector]
    field_name: str
    pos: Pos = field(default=NO_POS, compare=False, repr=False)


@dataclass(frozen=True)
class Exists:
    selector: Selector
    pos: Pos = field(default=NO_POS, compare=False, repr=False)


@dataclass(frozen=True)
class Cmp:
    op: str  # contains | startswith | equals
    left: "Expr"
    right: "Expr"
    pos: Pos = field(default=NO_POS, compare=False, repr=False)


@dataclass(frozen=True)
class Not:
    operand: "Expr"
    pos: Pos = field(default=NO_POS, compare=False, repr=False)


@dataclass(frozen=True)
class And:
    left: "Expr"
    right: "Expr"
    pos: Pos = field(default=NO_POS, compare=False, repr=False)


@dataclass(frozen=True)
class Or:
    left: "Expr"
    right: "Expr"
    pos: Pos = field(default=NO_POS, compare=False, repr=False)


Expr = Union[Lit, Var, Attr, Exists, Cmp, Not, And, Or]


# --- statements ------------------------------------------------------------

@dataclass(frozen=True)
class Action:
    kind: str
    target: Union[Selector, str, None] = None  # str names a bound widget var
    argument: Optional[str] = None             # set_text payload
    duration: Optional[float] = None           # wait seconds


@dataclass(frozen=True)
class LetAll:
    """let <var> = find_all <selector> : bind every matching widget."""

    var: str
    selector: Selector
    pos: Pos = field(default=NO_POS, compare=False, repr=False)


@dataclass(frozen=True)
class LetPick:
    """let <var> = pick from <source> where <predicate> : first match wins.

    Inside the predicate the element under test is bound as `elem`.
    """

    var: str
    source: str
    predicate: "Expr"
    pos: Pos = field(default=NO_POS, compare=False, repr=False)


@dataclass(frozen=True)
class Do:
    action: Action
    pos: Pos = field(default=NO_POS, compare=False, repr=False)


@dataclass(frozen=True)
class If:
    condition: "Expr"
    then_body: tuple["Stmt", ...]
    else_body: Optional[tuple["Stmt", ...]] = None
    pos: Pos = field(default=NO_POS, compare=False, repr=False)


Stmt = Union[LetAll, LetPick, Do, If]


@dataclass(frozen=True)
class PropertyAST:
    """The full property triple: precondition, interaction, postcondition."""

    name: str
    precondition: "Expr"
    interaction: tuple["Stmt", ...]
    postcondition: tuple["Expr", ...]
    pos: Pos = field(default=NO_POS, compare=False, repr=False)


def walk_statements(stmts: tuple[Stmt, ...]) -> Iterator[Stmt]:
    """Yield statements depth-first, descending into If branches."""
    for stmt in stmts:
        yield stmt
        if isinstance(stmt, If):
            yield from walk_statements(stmt.then_body)
            if stmt.else_body is not None:
                yield from walk_statements(stmt.else_body)


def walk_expr(expr: Expr) -> Iterator[Expr]:
    """Yield expression nodes depth-first, preorder."""
    yield expr
    if isinstance(expr, Cmp):
        yield from walk_expr(expr.left)
        yield from walk_expr(expr.right)
    elif isinstance(expr, (And, Or)):
        yield from walk_expr(expr.left)
        yield from walk_expr(expr.right)
    elif isinstance(expr, Not):
        yield from walk_expr(expr.operand)
