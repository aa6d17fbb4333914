"""Judging a generated property against its ground truth.

Two complementary checks: behavioral equivalence (both properties produce the
same verdict on a correct/buggy model pair) and a structural diff computed on
normalized forms, where selectors are reduced to the widget sets they resolve
to in the context store so that different-but-equivalent identifiers compare
equal. Structural disagreements map onto a four-way failure taxonomy.
"""

from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

from .grounding import IdClause, WidgetContextStore, resolve_clause
from .propdsl.ast import (
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
    Var,
)
from .propdsl.printer import print_action, print_expr, print_selector
from .propdsl.validate import SELECTOR_FIELD_TO_ATTR
from .simulator import AppModel, execute_property, load_app_model

WIDGET_MISMATCH = "WidgetMismatch"
LOGIC_INCOMPLETENESS = "LogicIncompleteness"
LOGIC_REDUNDANCY = "LogicRedundancy"
SEMANTIC_DEVIATION = "SemanticDeviation"

FAILURE_SYMPTOMS = (
    WIDGET_MISMATCH,
    LOGIC_INCOMPLETENESS,
    LOGIC_REDUNDANCY,
    SEMANTIC_DEVIATION,
)


class EvaluationError(Exception):
    pass


class ModelPairMissing(EvaluationError):
    """Behavioral checks need both the correct and the seeded-bug model."""


@dataclass(frozen=True)
class ModelPair:
    correct: AppModel
    buggy: AppModel


def load_model_pair(models_dir: Union[str, Path]) -> ModelPair:
    """Load model.json and model_buggy.json from one directory."""
    root = Path(models_dir)
    correct_path = root / "model.json"
    buggy_path = root / "model_buggy.json"
    for path in (correct_path, buggy_path):
        if not path.is_file():
            raise ModelPairMissing(f"model pair incomplete: {path} not found")
    return ModelPair(correct=load_app_model(correct_path), buggy=load_app_model(buggy_path))


def behavioral_equivalent(pair: ModelPair, gen: PropertyAST, gt: PropertyAST) -> bool:
    """Same verdict status as the ground truth on both models."""
    for model in (pair.correct, pair.buggy):
        gen_verdict, _ = execute_property(model, gen)
        gt_verdict, _ = execute_property(model, gt)
        if gen_verdict.status != gt_verdict.status:
            return False
    return True


# --- normalization ----------------------------------------------------------


def _selector_key(selector: Selector, store: Optional[WidgetContextStore]):
    """Resolve to the widget-uid set when possible, else canonical text."""
    if store is not None:
        uids: Optional[frozenset] = None
        for clause in selector.clauses:
            matched = resolve_clause(
                IdClause(
                    field=SELECTOR_FIELD_TO_ATTR[clause.field],
                    value=clause.value,
                    contains=clause.contains,
                ),
                store,
            )
            uids = matched if uids is None else uids & matched
        if uids:
            return ("widgets", uids)
    return ("selector", print_selector(selector))


def _operand_key(expr: Expr, roots: dict, store: Optional[WidgetContextStore]):
    if isinstance(expr, Lit):
        return ("lit", expr.value)
    if isinstance(expr, Var):
        return ("var", expr.name)
    if isinstance(expr, Attr):
        if isinstance(expr.ref, Selector):
            ref = _selector_key(expr.ref, store)
        else:
            root = roots.get(expr.ref.name)
            ref = _selector_key(root, store) if root else ("var", expr.ref.name)
        return ("attr", ref, expr.field_name)
    if isinstance(expr, Exists):
        return ("exists", _selector_key(expr.selector, store))
    if isinstance(expr, Cmp):
        return (expr.op, _operand_key(expr.left, roots, store),
                _operand_key(expr.right, roots, store))
    if isinstance(expr, Not):
        return ("not", _operand_key(expr.operand, roots, store))
    # nested and/or inside an atom position: fall back to canonical text
    return ("expr", print_expr(expr))


def _flatten_bool(expr: Expr) -> list[Expr]:
    """Atomic terms of a boolean expression; and/or structure is dropped."""
    if isinstance(expr, (And, Or)):
        return _flatten_bool(expr.left) + _flatten_bool(expr.right)
    return [expr]


def _binding_roots(ast: PropertyAST) -> dict:
    """Map every bound variable to the selector at the root of its chain."""
    roots: dict = {}

    def visit(stmts):
        for stmt in stmts:
            if isinstance(stmt, LetAll):
                roots[stmt.var] = stmt.selector
            elif isinstance(stmt, LetPick):
                roots[stmt.var] = roots.get(stmt.source)
            elif isinstance(stmt, If):
                visit(stmt.then_body)
                if stmt.else_body is not None:
                    visit(stmt.else_body)

    visit(ast.interaction)
    return roots


def _clause_counter(expr: Expr, roots: dict, store) -> tuple[Counter, dict]:
    counter: Counter = Counter()
    texts: dict = {}
    for atom in _flatten_bool(expr):
        key = _operand_key(atom, roots, store)
        counter[key] += 1
        texts.setdefault(key, print_expr(atom))
    return counter, texts


@dataclass(frozen=True)
class EventRecord:
    kind: str
    widget_key: tuple
    argument: Optional[str]
    text: str

    def alignment_key(self):
        return (self.kind, self.widget_key, self.argument)


def _linearize_events(ast: PropertyAST, roots: dict, store) -> list[EventRecord]:
    events: list[EventRecord] = []

    def widget_key_of(target):
        if target is None:
            return ("none",)
        if isinstance(target, Selector):
            return _selector_key(target, store)
        root = roots.get(target)
        return _selector_key(root, store) if root else ("var", target)

    def visit(stmts):
        for stmt in stmts:
            if isinstance(stmt, Do):
                action = stmt.action
                argument = action.argument
                if action.kind == "wait":
                    argument = repr(action.duration)
                events.append(EventRecord(
                    kind=action.kind,
                    widget_key=widget_key_of(action.target),
                    argument=argument,
                    text=print_action(action),
                ))
            elif isinstance(stmt, If):
                visit(stmt.then_body)
                if stmt.else_body is not None:
                    visit(stmt.else_body)

    visit(ast.interaction)
    return events


def _branch_shapes(stmts, depth: int = 0) -> list[tuple[int, bool]]:
    shapes = []
    for stmt in stmts:
        if isinstance(stmt, If):
            shapes.append((depth, stmt.else_body is not None))
            shapes.extend(_branch_shapes(stmt.then_body, depth + 1))
            if stmt.else_body is not None:
                shapes.extend(_branch_shapes(stmt.else_body, depth + 1))
    return shapes


def _lcs_align(gen: list[EventRecord], gt: list[EventRecord]) -> list[tuple[int, int]]:
    """Longest common subsequence on full-equality alignment keys."""
    n, m = len(gen), len(gt)
    table = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(n - 1, -1, -1):
        for j in range(m - 1, -1, -1):
            if gen[i].alignment_key() == gt[j].alignment_key():
                table[i][j] = table[i + 1][j + 1] + 1
            else:
                table[i][j] = max(table[i + 1][j], table[i][j + 1])
    pairs = []
    i = j = 0
    while i < n and j < m:
        if gen[i].alignment_key() == gt[j].alignment_key():
            pairs.append((i, j))
            i += 1
            j += 1
        elif table[i + 1][j] >= table[i][j + 1]:
            i += 1
        else:
            j += 1
    return pairs


# --- the diff ---------------------------------------------------------------


@dataclass(frozen=True)
class EventDiff:
    status: str  # widget_mismatch | action_mismatch | missing | extra
    gen_text: str = ""
    gt_text: str = ""


@dataclass(frozen=True)
class StructuralDiff:
    missing_pre_clauses: tuple[str, ...] = ()
    extra_pre_clauses: tuple[str, ...] = ()
    missing_post_clauses: tuple[str, ...] = ()
    extra_post_clauses: tuple[str, ...] = ()
    event_diff: tuple[EventDiff, ...] = ()
    branch_diff: str = "equal"

    def is_empty(self) -> bool:
        return (
            not self.missing_pre_clauses
            and not self.extra_pre_clauses
            and not self.missing_post_clauses
            and not self.extra_post_clauses
            and not self.event_diff
            and self.branch_diff == "equal"
        )


def _counter_diff(gen: Counter, gt: Counter, gen_texts: dict, gt_texts: dict):
    missing = []
    extra = []
    for key, count in (gt - gen).items():
        missing.extend([gt_texts[key]] * count)
    for key, count in (gen - gt).items():
        extra.extend([gen_texts[key]] * count)
    return tuple(sorted(missing)), tuple(sorted(extra))


def structural_compare(
    gen: PropertyAST, gt: PropertyAST, store: Optional[WidgetContextStore] = None
) -> StructuralDiff:
    gen_roots = _binding_roots(gen)
    gt_roots = _binding_roots(gt)

    gen_pre, gen_pre_texts = _clause_counter(gen.precondition, gen_roots, store)
    gt_pre, gt_pre_texts = _clause_counter(gt.precondition, gt_roots, store)
    missing_pre, extra_pre = _counter_diff(gen_pre, gt_pre, gen_pre_texts, gt_pre_texts)

    gen_post: Counter = Counter()
    gen_post_texts: dict = {}
    for assertion in gen.postcondition:
        counter, texts = _clause_counter(assertion, gen_roots, store)
        gen_post.update(counter)
        gen_post_texts.update(texts)
    gt_post: Counter = Counter()
    gt_post_texts: dict = {}
    for assertion in gt.postcondition:
        counter, texts = _clause_counter(assertion, gt_roots, store)
        gt_post.update(counter)
        gt_post_texts.update(texts)
    missing_post, extra_post = _counter_diff(gen_post, gt_post, gen_post_texts, gt_post_texts)

    gen_events = _linearize_events(gen, gen_roots, store)
    gt_events = _linearize_events(gt, gt_roots, store)
    aligned = _lcs_align(gen_events, gt_events)
    gen_left = [i for i in range(len(gen_events)) if i not in {a for a, _ in aligned}]
    gt_left = [j for j in range(len(gt_events)) if j not in {b for _, b in aligned}]

    event_diff: list[EventDiff] = []
    for gi, ti in zip(gen_left, gt_left):
        g, t = gen_events[gi], gt_events[ti]
        if g.widget_key != t.widget_key and (g.kind, g.argument) == (t.kind, t.argument):
            event_diff.append(EventDiff("widget_mismatch", g.text, t.text))
        elif g.widget_key == t.widget_key:
            event_diff.append(EventDiff("action_mismatch", g.text, t.text))
        else:
            event_diff.append(EventDiff("missing", "", t.text))
            event_diff.append(EventDiff("extra", g.text, ""))
    for gi in gen_left[len(gt_left):]:
        event_diff.append(EventDiff("extra", gen_events[gi].text, ""))
    for ti in gt_left[len(gen_left):]:
        event_diff.append(EventDiff("missing", "", gt_events[ti].text))

    gen_shapes = _branch_shapes(gen.interaction)
    gt_shapes = _branch_shapes(gt.interaction)
    if gen_shapes == gt_shapes:
        branch_diff = "equal"
    elif len(gen_shapes) > len(gt_shapes):
        branch_diff = "extra_branch"
    else:
        branch_diff = "missing_branch"

    return StructuralDiff(
        missing_pre_clauses=missing_pre,
        extra_pre_clauses=extra_pre,
        missing_post_clauses=missing_post,
        extra_post_clauses=extra_post,
        event_diff=tuple(event_diff),
        branch_diff=branch_diff,
    )


def classify_failure(behavioral_ok: bool, diff: StructuralDiff) -> Optional[str]:
    """Map a judge outcome onto the failure taxonomy; None means correct."""
    if diff.is_empty() and behavioral_ok:
        return None
    if any(e.status == "widget_mismatch" for e in diff.event_diff):
        return WIDGET_MISMATCH
    if (
        diff.missing_pre_clauses
        or diff.missing_post_clauses
        or any(e.status == "missing" for e in diff.event_diff)
        or diff.branch_diff == "missing_branch"
    ):
        return LOGIC_INCOMPLETENESS
    if (
        diff.extra_pre_clauses
        or diff.extra_post_clauses
        or any(e.status == "extra" for e in diff.event_diff)
        or diff.branch_diff == "extra_branch"
    ):
        return LOGIC_REDUNDANCY
    return SEMANTIC_DEVIATION


@dataclass(frozen=True)
class CorrectnessReport:
    property_name: str
    behavioral_ok: bool
    diff: StructuralDiff
    symptom: Optional[str]

    @property
    def correct(self) -> bool:
        return self.symptom is None


def judge(
    pair: ModelPair,
    gen: PropertyAST,
    gt: PropertyAST,
    store: Optional[WidgetContextStore] = None,
) -> CorrectnessReport:
    behavioral_ok = behavioral_equivalent(pair, gen, gt)
    diff = structural_compare(gen, gt, store)
    return CorrectnessReport(
        property_name=gt.name,
        behavioral_ok=behavioral_ok,
        diff=diff,
        symptom=classify_failure(behavioral_ok, diff),
    )
