"""Recursive-descent parser for the property language."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .ast import (
    ACTION_KINDS,
    ELEM_BINDING,
    SELECTOR_FIELDS,
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
    Pos,
    PropertyAST,
    Selector,
    SelectorClause,
    Stmt,
    Var,
)

RESERVED = {
    "property", "pre", "run", "post", "let", "find_all", "pick", "from",
    "where", "if", "else", "assert", "and", "or", "not", "true", "false",
    "exists", "attr", "contains", "startswith", "equals", "widget", "mode",
    ELEM_BINDING,
    *ACTION_KINDS,
}

MAX_WAIT_SECONDS = 10.0


class ParseError(Exception):
    def __init__(self, message: str, pos: Pos, expected: Optional[set[str]] = None):
        self.pos = pos
        self.expected = frozenset(expected or ())
        detail = f"line {pos.line}, col {pos.col}: {message}"
        if self.expected:
            detail += f" (expected one of: {', '.join(sorted(self.expected))})"
        super().__init__(detail)


@dataclass(frozen=True)
class Token:
    kind: str  # IDENT | STRING | NUMBER | PUNCT | EOF
    value: str
    pos: Pos


PUNCT = ("~=", "{", "}", "(", ")", ",", "=")

_ESCAPES = {"n": "\n", "t": "\t", '"': '"', "\\": "\\"}


def tokenize(source: str) -> list[Token]:
    tokens: list[Token] = []
    line, col = 1, 1
    i = 0
    n = len(source)
    while i < n:
        ch = source[i]
        if ch == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        pos = Pos(line, col)
        if ch == '"':
            value = []
            j = i + 1
            while j < n and source[j] != '"':
                if source[j] == "\n":
                    raise ParseError("unterminated string literal", pos)
                if source[j] == "\\":
                    j += 1
                    if j >= n or source[j] not in _ESCAPES:
                        raise ParseError("invalid string escape", Pos(line, col + j - i))
                    value.append(_ESCAPES[source[j]])
                else:
                    value.append(source[j])
                j += 1
            if j >= n:
                raise ParseError("unterminated string literal", pos)
            tokens.append(Token("STRING", "".join(value), pos))
            col += j + 1 - i
            i = j + 1
            continue
        if ch.isdigit():
            j = i
            while j < n and (source[j].isdigit() or source[j] == "."):
                j += 1
            tokens.append(Token("NUMBER", source[i:j], pos))
            col += j - i
            i = j
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (source[j].isalnum() or source[j] == "_"):
                j += 1
            tokens.append(Token("IDENT", source[i:j], pos))
            col += j - i
            i = j
            continue
        matched = next((p for p in PUNCT if source.startswith(p, i)), None)
        if matched is None:
            raise ParseError(f"unexpected character {ch!r}", pos)
        tokens.append(Token("PUNCT", matched, pos))
        col += len(matched)
        i += len(matched)
    tokens.append(Token("EOF", "", Pos(line, col)))
    return tokens


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.index = 0

    @property
    def current(self) -> Token:
        return self.tokens[self.index]

    def advance(self) -> Token:
        tok = self.current
        self.index += 1
        return tok

    def check(self, kind: str, value: Optional[str] = None) -> bool:
        tok = self.current
        return tok.kind == kind and (value is None or tok.value == value)

    def accept(self, kind: str, value: Optional[str] = None) -> Optional[Token]:
        if self.check(kind, value):
            return self.advance()
        return None

    def expect(self, kind: str, value: Optional[str] = None, label: Optional[str] = None) -> Token:
        if self.check(kind, value):
            return self.advance()
        want = label or value or kind
        got = self.current.value or self.current.kind
        raise ParseError(f"unexpected {got!r}", self.current.pos, {want})

    def expect_keyword(self, word: str) -> Token:
        if self.check("IDENT", word):
            return self.advance()
        got = self.current.value or self.current.kind
        raise ParseError(f"unexpected {got!r}", self.current.pos, {word})

    def name(self, role: str) -> Token:
        tok = self.expect("IDENT", label=role)
        if tok.value in RESERVED:
            raise ParseError(f"{tok.value!r} is reserved and cannot be used as a {role}", tok.pos)
        return tok

    # --- grammar ---

    def property(self) -> PropertyAST:
        start = self.expect_keyword("property")
        name = self.name("property name")
        self.expect("PUNCT", "{")

        self.expect_keyword("pre")
        self.expect("PUNCT", "{")
        precondition = self.expr()
        self.expect("PUNCT", "}")

        run_kw = self.expect_keyword("run")
        self.expect("PUNCT", "{")
        interaction = self.statements()
        self.expect("PUNCT", "}")
        if not any(_contains_do(s) for s in interaction):
            raise ParseError("run block must contain at least one action", run_kw.pos)

        self.expect_keyword("post")
        self.expect("PUNCT", "{")
        assertions = []
        while self.check("IDENT", "assert"):
            self.advance()
            assertions.append(self.expr())
        if not assertions:
            raise ParseError("post block must contain at least one assert", self.current.pos,
                             {"assert"})
        self.expect("PUNCT", "}")

        self.expect("PUNCT", "}")
        self.expect("EOF")
        return PropertyAST(
            name=name.value,
            precondition=precondition,
            interaction=tuple(interaction),
            postcondition=tuple(assertions),
            pos=start.pos,
        )

    def statements(self) -> list[Stmt]:
        stmts: list[Stmt] = []
        while not self.check("PUNCT", "}"):
            stmts.append(self.statement())
        return stmts

    def statement(self) -> Stmt:
        tok = self.current
        if self.check("IDENT", "let"):
            return self.let_statement()
        if self.check("IDENT", "if"):
            return self.if_statement()
        if tok.kind == "IDENT" and tok.value in ACTION_KINDS:
            return self.do_statement()
        got = tok.value or tok.kind
        raise ParseError(
            f"unexpected {got!r}", tok.pos, {"let", "if", *ACTION_KINDS}
        )

    def let_statement(self) -> Stmt:
        let_tok = self.advance()
        var = self.name("variable name")
        self.expect("PUNCT", "=")
        if self.accept("IDENT", "find_all"):
            selector = self.selector()
            return LetAll(var=var.value, selector=selector, pos=let_tok.pos)
        if self.accept("IDENT", "pick"):
            self.expect_keyword("from")
            source = self.expect("IDENT", label="source variable")
            self.expect_keyword("where")
            predicate = self.expr()
            return LetPick(var=var.value, source=source.value, predicate=predicate,
                           pos=let_tok.pos)
        got = self.current.value or self.current.kind
        raise ParseError(f"unexpected {got!r}", self.current.pos, {"find_all", "pick"})

    def if_statement(self) -> Stmt:
        if_tok = self.advance()
        condition = self.expr()
        self.expect("PUNCT", "{")
        then_body = self.statements()
        self.expect("PUNCT", "}")
        else_body = None
        if self.accept("IDENT", "else"):
            self.expect("PUNCT", "{")
            else_body = tuple(self.statements())
            self.expect("PUNCT", "}")
        return If(condition=condition, then_body=tuple(then_body), else_body=else_body,
                  pos=if_tok.pos)

    def do_statement(self) -> Stmt:
        kind_tok = self.advance()
        kind = kind_tok.value
        self.expect("PUNCT", "(")
        target: object = None
        argument = None
        duration = None
        if kind in ("click", "long_click"):
            target = self.target()
        elif kind == "set_text":
            target = self.target()
            self.expect("PUNCT", ",")
            argument = self.expect("STRING", label="text argument").value
        elif kind == "wait":
            num = self.expect("NUMBER", label="duration in seconds")
            try:
                duration = float(num.value)
            except ValueError:
                raise ParseError(f"invalid number {num.value!r}", num.pos) from None
            if not 0 < duration <= MAX_WAIT_SECONDS:
                raise ParseError(
                    f"wait duration must be in (0, {MAX_WAIT_SECONDS:g}] seconds", num.pos
                )
        # press_back takes no arguments
        self.expect("PUNCT", ")")
        action = Action(kind=kind, target=target, argument=argument, duration=duration)
        return Do(action=action, pos=kind_tok.pos)

    def target(self):
        if self.check("IDENT", "widget"):
            return self.selector()
        tok = self.expect("IDENT", label="widget selector or variable")
        if tok.value in RESERVED:
            raise ParseError(f"{tok.value!r} is reserved", tok.pos)
        return tok.value

    def selector(self) -> Selector:
        widget_tok = self.expect_keyword("widget")
        self.expect("PUNCT", "(")
        clauses: list[SelectorClause] = []
        contains_all = False
        while True:
            field_tok = self.expect("IDENT", label="selector field")
            if field_tok.value == "mode":
                self.expect("PUNCT", "=")
                mode_tok = self.expect("IDENT", label="contains")
                if mode_tok.value != "contains":
                    raise ParseError(f"unknown selector mode {mode_tok.value!r}", mode_tok.pos,
                                     {"contains"})
                contains_all = True
            else:
                if field_tok.value not in SELECTOR_FIELDS:
                    raise ParseError(
                        f"unknown selector field {field_tok.value!r}", field_tok.pos,
                        set(SELECTOR_FIELDS),
                    )
                contains = bool(self.accept("PUNCT", "~="))
                if not contains:
                    self.expect("PUNCT", "=")
                value = self.expect("STRING", label="selector value")
                if value.value == "":
                    raise ParseError("selector value must be non-empty", value.pos)
                clauses.append(SelectorClause(field_tok.value, value.value, contains))
            if not self.accept("PUNCT", ","):
                break
        self.expect("PUNCT", ")")
        if not clauses:
            raise ParseError("selector needs at least one clause", widget_tok.pos)
        if contains_all:
            clauses = [SelectorClause(c.field, c.value, True) for c in clauses]
        return Selector(clauses=tuple(clauses), pos=widget_tok.pos)

    # expression precedence: or < and < not < primary
    def expr(self) -> Expr:
        return self.or_expr()

    def or_expr(self) -> Expr:
        left = self.and_expr()
        while self.check("IDENT", "or"):
            op = self.advance()
            right = self.and_expr()
            left = Or(left=left, right=right, pos=op.pos)
        return left

    def and_expr(self) -> Expr:
        left = self.unary_expr()
        while self.check("IDENT", "and"):
            op = self.advance()
            right = self.unary_expr()
            left = And(left=left, right=right, pos=op.pos)
        return left

    def unary_expr(self) -> Expr:
        if self.check("IDENT", "not"):
            op = self.advance()
            return Not(operand=self.unary_expr(), pos=op.pos)
        return self.primary()

    def primary(self) -> Expr:
        tok = self.current
        if tok.kind == "STRING":
            self.advance()
            return Lit(value=tok.value, pos=tok.pos)
        if self.accept("PUNCT", "("):
            inner = self.expr()
            self.expect("PUNCT", ")")
            return inner
        if tok.kind != "IDENT":
            got = tok.value or tok.kind
            raise ParseError(f"unexpected {got!r}", tok.pos,
                             {"expression"})
        if tok.value in ("true", "false"):
            self.advance()
            return Lit(value=tok.value == "true", pos=tok.pos)
        if tok.value == "exists":
            self.advance()
            self.expect("PUNCT", "(")
            selector = self.selector()
            self.expect("PUNCT", ")")
            return Exists(selector=selector, pos=tok.pos)
        if tok.value == "attr":
            self.advance()
            self.expect("PUNCT", "(")
            if self.check("IDENT", "widget"):
                ref: object = self.selector()
            else:
                ref_tok = self.expect("IDENT", label="variable or widget selector")
                if ref_tok.value in RESERVED and ref_tok.value != ELEM_BINDING:
                    raise ParseError(f"{ref_tok.value!r} is reserved", ref_tok.pos)
                ref = Var(name=ref_tok.value, pos=ref_tok.pos)
            self.expect("PUNCT", ",")
            field_tok = self.expect("STRING", label="attribute name")
            if field_tok.value not in SELECTOR_FIELDS:
                raise ParseError(
                    f"unknown attribute {field_tok.value!r}", field_tok.pos,
                    set(SELECTOR_FIELDS),
                )
            self.expect("PUNCT", ")")
            return Attr(ref=ref, field_name=field_tok.value, pos=tok.pos)
        if tok.value in ("contains", "startswith", "equals"):
            self.advance()
            self.expect("PUNCT", "(")
            left = self.expr()
            self.expect("PUNCT", ",")
            right = self.expr()
            self.expect("PUNCT", ")")
            return Cmp(op=tok.value, left=left, right=right, pos=tok.pos)
        if tok.value in RESERVED and tok.value != ELEM_BINDING:
            raise ParseError(f"unexpected keyword {tok.value!r} in expression", tok.pos)
        self.advance()
        return Var(name=tok.value, pos=tok.pos)


def _contains_do(stmt: Stmt) -> bool:
    if isinstance(stmt, Do):
        return True
    if isinstance(stmt, If):
        if any(_contains_do(s) for s in stmt.then_body):
            return True
        if stmt.else_body is not None:
            return any(_contains_do(s) for s in stmt.else_body)
    return False


def parse_property(source: str) -> PropertyAST:
    """Parse one property definition; raises ParseError with line/column."""
    return _Parser(tokenize(source)).property()
