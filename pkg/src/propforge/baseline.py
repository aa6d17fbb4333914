"""Rule-based property synthesis; no model calls, fully deterministic.

Each step must start with a canonical verb (click, long click, input, press
back, get, select, assert, if). Widget phrases resolve against the context
store with the same weighted token matcher used everywhere else, and the
emitted selector copies the strongest raw attribute of the chosen widget.
"""

import re
from dataclasses import dataclass, field
from typing import Optional, Union

from .grounding import (
    EmptyQuery,
    EnrichedWidget,
    WidgetContextStore,
    humanize_resource_id,
    match_widget,
    tokenize,
)
from .propdsl.ast import (
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
    PropertyAST,
    Selector,
    SelectorClause,
    Var,
)
from .propdsl.parser import RESERVED
from .synthesis import PropertyDescription


class BaselineError(Exception):
    pass


class UnrecognizedStep(BaselineError):
    """A step does not start with a canonical verb or has an unknown shape."""


class UnresolvedWidget(BaselineError):
    """No widget in the context store matches the phrase."""


_ARTICLE_RE = re.compile(r"^(?:the|a|an)\s+", re.IGNORECASE)
_EXISTS_TAIL_RE = re.compile(r"\s+(?:exists?|(?:is|are)\s+shown)$", re.IGNORECASE)
_STOPWORDS = {"the", "a", "an", "of", "all", "to", "into", "on", "in", "that", "it"}

# raw attribute weights mirror the phrase matcher so the emitted clause names
# the field that earned the match
_RAW_FIELD_WEIGHTS = (
    ("text", 0.25, "text"),
    ("resource_id", 0.15, "id"),
    ("content_description", 0.10, "desc"),
)


def _singularize(phrase: str) -> str:
    tokens = phrase.split()
    out = []
    for token in tokens:
        if len(token) > 3 and token.lower().endswith("s") and not token.lower().endswith("ss"):
            out.append(token[:-1])
        else:
            out.append(token)
    return " ".join(out)


def resolve_widget(store: WidgetContextStore, phrase: str) -> tuple[EnrichedWidget, str]:
    """Best store widget for the phrase; returns it with the query that won."""
    cleaned = phrase.strip()
    if not cleaned:
        raise UnresolvedWidget("empty widget phrase")
    for attempt in (cleaned, _singularize(cleaned)):
        try:
            result = match_widget(attempt, store)
        except EmptyQuery as exc:
            raise UnresolvedWidget(f"phrase {phrase!r} has no usable tokens") from exc
        best = result.best()
        if best is not None:
            return store.by_uid(best), attempt
    raise UnresolvedWidget(f"no widget in the context store matches {phrase!r}")


def selector_for(store: WidgetContextStore, phrase: str) -> Selector:
    """Single-clause selector naming the raw field that best explains the match."""
    widget, query = resolve_widget(store, phrase)
    query_tokens = set(tokenize(query))
    attrs = widget.attributes
    best_field = None
    best_score = 0.0
    for attr_name, weight, clause_field in _RAW_FIELD_WEIGHTS:
        raw = getattr(attrs, attr_name)
        if not raw:
            continue
        value = humanize_resource_id(raw) if attr_name == "resource_id" else raw
        overlap = len(query_tokens & set(tokenize(value)))
        score = weight * overlap / len(query_tokens)
        if score > best_score:
            best_score = score
            best_field = clause_field
    if best_field is None:
        # nothing textual earned the match; fall back to the stablest raw field
        if attrs.resource_id:
            best_field = "id"
        elif attrs.text:
            best_field = "text"
        elif attrs.content_description:
            best_field = "desc"
        else:
            return Selector(clauses=(SelectorClause(field="class", value=attrs.class_name),))
    raw_value = {
        "text": attrs.text,
        "id": attrs.resource_id,
        "desc": attrs.content_description,
    }[best_field]
    return Selector(clauses=(SelectorClause(field=best_field, value=raw_value),))


def _strip_article(phrase: str) -> str:
    return _ARTICLE_RE.sub("", phrase.strip())


def _var_name(phrase: str, taken: set[str]) -> str:
    tokens = [t for t in tokenize(phrase) if t not in _STOPWORDS]
    name = tokens[-1] if tokens else "item"
    if not name[0].isalpha():
        name = "v_" + name
    while name in RESERVED or name in taken:
        name = name + "_2"
    return name


@dataclass
class _Scope:
    store: WidgetContextStore
    bindings: list[str] = field(default_factory=list)
    last_all: Optional[str] = None
    last_ref: Union[str, Selector, None] = None


# --- step grammar -----------------------------------------------------------

_INPUT_RE = re.compile(r'^input\s+"(.*)"\s+into\s+(.+)$', re.IGNORECASE)
_GET_RE = re.compile(
    r"^get\s+(?:the\s+)?(?:names?\s+of\s+)?(?:all\s+)?(.+)$", re.IGNORECASE
)
_SELECT_RE = re.compile(
    r"^select\s+(?:an?\s+)?(.+?)\s+(?:that|whose\s+text|which)\s+(.+)$", re.IGNORECASE
)
_IF_RE = re.compile(r"^if\s+(.+?),\s*(.+)$", re.IGNORECASE)
_QUOTED_RE = re.compile(r'^"(.*)"$')

_PREDICATES = (
    (re.compile(r'^does\s+not\s+contain\s+"(.*)"$', re.IGNORECASE), "contains", True),
    (re.compile(r'^contains?\s+"(.*)"$', re.IGNORECASE), "contains", False),
    (re.compile(r'^does\s+not\s+equal\s+"(.*)"$', re.IGNORECASE), "equals", True),
    (re.compile(r'^equals?\s+"(.*)"$', re.IGNORECASE), "equals", False),
    (re.compile(r'^does\s+not\s+start\s+with\s+"(.*)"$', re.IGNORECASE), "startswith", True),
    (re.compile(r'^starts?\s+with\s+"(.*)"$', re.IGNORECASE), "startswith", False),
)

_ASSERT_OPS = (
    (re.compile(r"^(.+?)\s+contains\s+(.+)$", re.IGNORECASE), "contains"),
    (re.compile(r"^(.+?)\s+equals\s+(.+)$", re.IGNORECASE), "equals"),
    (re.compile(r"^(.+?)\s+starts\s+with\s+(.+)$", re.IGNORECASE), "startswith"),
)


def _target(scope: _Scope, phrase: str) -> Union[str, Selector]:
    cleaned = _strip_article(phrase)
    if cleaned.lower() in ("it", "them"):
        if scope.last_ref is None:
            raise UnrecognizedStep("'it' used before anything was referenced")
        return scope.last_ref
    selector = selector_for(scope.store, cleaned)
    scope.last_ref = selector
    return selector


def _predicate(text: str) -> Expr:
    cleaned = text.strip()
    for pattern, op, negated in _PREDICATES:
        hit = pattern.match(cleaned)
        if hit:
            cmp = Cmp(op=op, left=Attr(ref=Var("elem"), field_name="text"),
                      right=Lit(hit.group(1)))
            return Not(operand=cmp) if negated else cmp
    raise UnrecognizedStep(f"cannot parse selection predicate {text!r}")


def _operand(scope: _Scope, text: str) -> Expr:
    cleaned = text.strip()
    quoted = _QUOTED_RE.match(cleaned)
    if quoted:
        return Lit(quoted.group(1))
    tokens = set(tokenize(cleaned))
    for name in reversed(scope.bindings):
        if name in tokens:
            return Attr(ref=Var(name), field_name="text")
    return Attr(ref=selector_for(scope.store, _strip_article(cleaned)), field_name="text")


def _assertion(scope: _Scope, rest: str) -> Expr:
    cleaned = rest.strip().rstrip(".")
    tail = _EXISTS_TAIL_RE.search(cleaned)
    if tail:
        phrase = cleaned[: tail.start()]
        return Exists(selector=selector_for(scope.store, _strip_article(phrase)))
    for pattern, op in _ASSERT_OPS:
        hit = pattern.match(cleaned)
        if hit:
            return Cmp(op=op, left=_operand(scope, hit.group(1)),
                       right=_operand(scope, hit.group(2)))
    raise UnrecognizedStep(f"cannot parse assertion {rest!r}")


def _parse_step(scope: _Scope, step: str):
    """One step to one statement, or an Expr for assert steps."""
    cleaned = step.strip().rstrip(".")
    lower = cleaned.lower()

    if lower.startswith("assert "):
        return _assertion(scope, cleaned[len("assert "):])

    if lower.startswith("long click "):
        return Do(action=Action(kind="long_click",
                                target=_target(scope, cleaned[len("long click "):])))
    if lower.startswith("click "):
        return Do(action=Action(kind="click",
                                target=_target(scope, cleaned[len("click "):])))
    if lower.startswith("press back"):
        return Do(action=Action(kind="press_back"))
    hit = _INPUT_RE.match(cleaned)
    if hit:
        return Do(action=Action(kind="set_text",
                                target=_target(scope, hit.group(2)),
                                argument=hit.group(1)))
    if lower.startswith("get "):
        phrase = _strip_article(_GET_RE.match(cleaned).group(1))
        var = _var_name(phrase, set(scope.bindings))
        selector = selector_for(scope.store, phrase)
        scope.bindings.append(var)
        scope.last_all = var
        scope.last_ref = var
        return LetAll(var=var, selector=selector)
    hit = _SELECT_RE.match(cleaned)
    if hit:
        if scope.last_all is None:
            raise UnrecognizedStep("select used before any get step")
        var = _var_name(hit.group(1), set(scope.bindings))
        pick = LetPick(var=var, source=scope.last_all, predicate=_predicate(hit.group(2)))
        scope.bindings.append(var)
        scope.last_ref = var
        return pick
    hit = _IF_RE.match(cleaned)
    if hit:
        condition_text = hit.group(1).strip()
        tail = _EXISTS_TAIL_RE.search(condition_text)
        if not tail:
            raise UnrecognizedStep(f"cannot parse if condition {condition_text!r}")
        selector = selector_for(scope.store, _strip_article(condition_text[: tail.start()]))
        scope.last_ref = selector
        body = _parse_step(scope, hit.group(2))
        if not isinstance(body, (Do, LetAll, LetPick, If)):
            raise UnrecognizedStep("if body must be an action step")
        return If(condition=Exists(selector=selector), then_body=(body,))

    raise UnrecognizedStep(f"step does not start with a known verb: {step!r}")


def _precondition(scope: _Scope, text: str) -> Expr:
    parts = [p.strip() for p in text.split(" and ") if p.strip()]
    if not parts:
        raise UnrecognizedStep("empty precondition")
    clauses = []
    for part in parts:
        phrase = _EXISTS_TAIL_RE.sub("", _strip_article(part))
        clauses.append(Exists(selector=selector_for(scope.store, phrase)))
    expr = clauses[0]
    for clause in clauses[1:]:
        expr = And(left=expr, right=clause)
    return expr


def baseline_synthesize(
    description: PropertyDescription, store: WidgetContextStore
) -> PropertyAST:
    scope = _Scope(store=store)
    precondition = _precondition(scope, description.precondition_text)
    interaction: list = []
    assertions: list[Expr] = []
    for step in description.steps:
        node = _parse_step(scope, step)
        if isinstance(node, (Do, LetAll, LetPick, If)):
            interaction.append(node)
        else:
            assertions.append(node)
    if not assertions:
        raise UnrecognizedStep("description has no assert step")
    if not interaction:
        raise UnrecognizedStep("description has no action steps")
    return PropertyAST(
        name=description.name,
        precondition=precondition,
        interaction=tuple(interaction),
        postcondition=tuple(assertions),
    )
