"""Complexity metrics over properties and descriptions."""

from __future__ import annotations

from dataclasses import dataclass

from .ast import And, Do, Expr, If, Not, Or, PropertyAST, Stmt
from .printer import print_property


@dataclass(frozen=True)
class ComplexityMetrics:
    clause_count: int
    operator_count: int
    event_count: int
    char_count: int


def _count_bool(expr: Expr) -> tuple[int, int]:
    """(clauses, operators) for one boolean expression: and/or/not are
    operators, everything else at the boolean level is an atomic clause."""
    if isinstance(expr, (And, Or)):
        lc, lo = _count_bool(expr.left)
        rc, ro = _count_bool(expr.right)
        return lc + rc, lo + ro + 1
    if isinstance(expr, Not):
        c, o = _count_bool(expr.operand)
        return c, o + 1
    return 1, 0


def _count_events(stmts: tuple[Stmt, ...]) -> int:
    total = 0
    for stmt in stmts:
        if isinstance(stmt, Do):
            total += 1
        elif isinstance(stmt, If):
            total += _count_events(stmt.then_body)
            if stmt.else_body is not None:
                total += _count_events(stmt.else_body)
    return total


def complexity(ast: PropertyAST) -> ComplexityMetrics:
    """Clause/operator counts over pre+post, event count over the
    interaction (each branch body counted once), plus printed length."""
    clauses, operators = _count_bool(ast.precondition)
    for assertion in ast.postcondition:
        c, o = _count_bool(assertion)
        clauses += c
        operators += o
    return ComplexityMetrics(
        clause_count=clauses,
        operator_count=operators,
        event_count=_count_events(ast.interaction),
        char_count=char_complexity(print_property(ast)),
    )


def char_complexity(text: str) -> int:
    """Unicode scalar count (len on str counts code points, not bytes)."""
    return len(text)


@dataclass(frozen=True)
class MetricsRow:
    name: str
    clause_count: int
    operator_count: int
    event_count: int
    char_count: int


def metrics_rows(items: list[tuple[str, PropertyAST]]) -> list[MetricsRow]:
    rows = []
    for name, ast in items:
        m = complexity(ast)
        rows.append(MetricsRow(name, m.clause_count, m.operator_count,
                               m.event_count, m.char_count))
    return rows


def _means(rows: list[MetricsRow]) -> tuple[float, float, float, float]:
    n = len(rows)
    if n == 0:
        return (0.0, 0.0, 0.0, 0.0)
    return (
        sum(r.clause_count for r in rows) / n,
        sum(r.operator_count for r in rows) / n,
        sum(r.event_count for r in rows) / n,
        sum(r.char_count for r in rows) / n,
    )


def render_metrics_tsv(rows: list[MetricsRow]) -> str:
    lines = ["name\tclauses\toperators\tevents\tchars"]
    for r in rows:
        lines.append(f"{r.name}\t{r.clause_count}\t{r.operator_count}\t{r.event_count}\t{r.char_count}")
    means = _means(rows)
    lines.append("MEAN\t%.2f\t%.2f\t%.2f\t%.2f" % means)
    return "\n".join(lines) + "\n"


def render_metrics_markdown(rows: list[MetricsRow]) -> str:
    lines = [
        "| name | clauses | operators | events | chars |",
        "| --- | --- | --- | --- | --- |",
    ]
    for r in rows:
        lines.append(
            f"| {r.name} | {r.clause_count} | {r.operator_count} | {r.event_count} | {r.char_count} |"
        )
    means = _means(rows)
    lines.append("| MEAN | %.2f | %.2f | %.2f | %.2f |" % means)
    return "\n".join(lines) + "\n"
