"""The executable-property language: a precondition, an interaction script,
and postcondition assertions over GUI widgets.

Public surface: AST node types, parse/print, static validation, complexity
metrics, and template-driven emission to third-party script shapes.
"""

from .ast import (
    Action,
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
    Pos,
    PropertyAST,
    Selector,
    SelectorClause,
    Stmt,
    Var,
    walk_statements,
)
from .parser import ParseError, parse_property
from .printer import print_property
from .validate import Diagnostic, validate
from .metrics import ComplexityMetrics, char_complexity, complexity
from .emit import (
    IDENTITY_TEMPLATE,
    KEA_TEMPLATE,
    EmissionTemplate,
    UnsupportedNode,
    emit_framework_script,
)

__all__ = [
    "Action", "And", "Attr", "Cmp", "Do", "Exists", "If", "LetAll", "LetPick",
    "Lit", "Not", "Or", "Pos", "PropertyAST", "Selector", "SelectorClause",
    "Stmt", "Var", "walk_statements",
    "ParseError", "parse_property", "print_property",
    "Diagnostic", "validate",
    "ComplexityMetrics", "char_complexity", "complexity",
    "EmissionTemplate", "UnsupportedNode", "emit_framework_script",
    "IDENTITY_TEMPLATE", "KEA_TEMPLATE",
]
