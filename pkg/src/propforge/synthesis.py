"""Turn structured property descriptions into validated property ASTs.

A description arrives as plain text with a precondition line and a numbered
list of steps. Synthesis builds a prompt around it (language reference,
widget context, two worked examples), asks the provider for code, and then
parses and validates the result, feeding diagnostics back for a bounded
number of repair rounds.
"""

import json
import re
from dataclasses import dataclass
from importlib import resources
from typing import Optional, Sequence

from .grounding import (
    EmptyQuery,
    EnrichedWidget,
    MissingDemos,
    WidgetContextStore,
    enriched_widget_json,
    match_widget,
)
from .propdsl import ParseError, PropertyAST, parse_property, validate
from .provider import ChatProvider, Message

DEFAULT_CONTEXT_BUDGET = 60
DEFAULT_MAX_REPAIRS = 2


class SynthesisError(Exception):
    pass


class MissingSegment(SynthesisError):
    pass


class EmptySteps(SynthesisError):
    pass


class EmptyResponse(SynthesisError):
    pass


class SynthesisFailed(SynthesisError):
    pass


# --- descriptions ----------------------------------------------------------


@dataclass(frozen=True)
class PropertyDescription:
    name: str
    precondition_text: str
    steps: tuple[str, ...]

    def lines(self) -> tuple[str, ...]:
        return (self.precondition_text,) + self.steps


_STEP_RE = re.compile(r"^\d+[.)]\s*(.+)$")


def parse_description(text: str, name: Optional[str] = None) -> PropertyDescription:
    """Parse the two-segment description format.

    Expected shape::

        Property: <name>          (optional; the name argument wins if given)
        Precondition: <sentence>
        Function body:
        1. <step>
        2. <step>

    Unnumbered lines inside the body continue the previous step.
    """
    prop_name = name
    precondition = None
    in_body = False
    steps: list[str] = []
    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            continue
        lower = line.lower()
        if lower.startswith("property:"):
            if prop_name is None:
                prop_name = line.split(":", 1)[1].strip()
            continue
        if lower.startswith("precondition:"):
            precondition = line.split(":", 1)[1].strip()
            continue
        if lower.startswith("function body"):
            in_body = True
            continue
        if in_body:
            step = _STEP_RE.match(line)
            if step:
                steps.append(step.group(1).strip())
            elif steps:
                steps[-1] = steps[-1] + " " + line
    if precondition is None or not precondition:
        raise MissingSegment("description has no Precondition segment")
    if not in_body:
        raise MissingSegment("description has no Function body segment")
    if not steps:
        raise EmptySteps("description lists no steps")
    return PropertyDescription(
        name=prop_name or "unnamed_property",
        precondition_text=precondition,
        steps=tuple(steps),
    )


def description_text(description: PropertyDescription) -> str:
    """Canonical rendering used inside prompts."""
    lines = [f"Precondition: {description.precondition_text}", "Function body:"]
    lines.extend(f"{i}. {step}" for i, step in enumerate(description.steps, 1))
    return "\n".join(lines)


# --- bundled prompt data ----------------------------------------------------


def _data_root():
    return resources.files("propforge").joinpath("data")


def load_api_catalog() -> str:
    return _data_root().joinpath("api_catalog.txt").read_text(encoding="utf-8")


def load_synthesis_demos() -> list[dict]:
    demos = []
    for entry in sorted(_data_root().joinpath("demos").iterdir(), key=lambda e: e.name):
        if entry.name.endswith(".demo.json"):
            demos.append(json.loads(entry.read_text(encoding="utf-8")))
    return demos


# --- context selection ------------------------------------------------------


def select_context_subset(
    store: WidgetContextStore,
    description: PropertyDescription,
    budget: int = DEFAULT_CONTEXT_BUDGET,
) -> tuple[EnrichedWidget, ...]:
    """Widgets worth showing to the model, in stable store order.

    Every widget is scored by its best match against any description line;
    the top `budget` widgets are kept, as is anything scoring at least 0.5
    regardless of budget.
    """
    if not store.widgets:
        return ()
    best: dict[str, float] = {w.widget_uid: 0.0 for w in store.widgets}
    for line in description.lines():
        try:
            result = match_widget(line, store)
        except EmptyQuery:
            continue
        for uid, score in result.candidates:
            if score > best[uid]:
                best[uid] = score
    order = {w.widget_uid: i for i, w in enumerate(store.widgets)}
    ranked = sorted(store.widgets, key=lambda w: (-best[w.widget_uid], order[w.widget_uid]))
    keep = {
        w.widget_uid
        for rank, w in enumerate(ranked)
        if rank < budget or best[w.widget_uid] >= 0.5
    }
    return tuple(w for w in store.widgets if w.widget_uid in keep)


# --- prompt assembly --------------------------------------------------------

SYNTHESIS_ROLE = (
    "You are an expert in GUI testing. You translate structured natural-"
    "language property descriptions into executable property scripts written "
    "in a small domain-specific language."
)

SYNTHESIS_CONSTRAINTS = (
    "Output rules:\n"
    "- Write exactly one property named {name}.\n"
    "- Use only widgets listed in the widget context; copy attribute values "
    "verbatim.\n"
    "- Prefer id selectors when a resource id is available.\n"
    "- Respond with a single fenced code block containing only the property."
)


def build_synthesis_prompt(
    description: PropertyDescription,
    context_widgets: Sequence[EnrichedWidget],
    demos: Sequence[dict],
) -> list[Message]:
    """Six-part prompt: role, language reference, widget context, two worked
    examples, the target description, output rules."""
    if len(demos) != 2:
        raise MissingDemos(f"synthesis prompt needs exactly 2 demos, got {len(demos)}")

    parts = ["The property language:\n" + load_api_catalog().rstrip()]

    if context_widgets:
        widget_lines = "\n".join(enriched_widget_json(w) for w in context_widgets)
        parts.append("Widget context (one JSON object per widget):\n" + widget_lines)
    else:
        parts.append("Widget context: no widgets were captured for this app.")

    demo_lines = ["Here are two examples."]
    for demo in demos:
        demo_lines.append("Description:")
        demo_lines.append(demo["description"].rstrip())
        demo_lines.append("Property:")
        demo_lines.append("```\n" + demo["property"].rstrip() + "\n```")
    parts.append("\n".join(demo_lines))

    parts.append(
        "Now write the property for this description.\n" + description_text(description)
    )
    parts.append(SYNTHESIS_CONSTRAINTS.format(name=description.name))

    return [Message("system", SYNTHESIS_ROLE), Message("user", "\n\n".join(parts))]


_FENCE_RE = re.compile(r"```[^\n]*\n(.*?)```", re.DOTALL)


def extract_code(response: str) -> str:
    """Interior of the first fenced code block, or the whole trimmed text."""
    if not response or not response.strip():
        raise EmptyResponse("provider returned an empty response")
    fenced = _FENCE_RE.search(response)
    code = (fenced.group(1) if fenced else response).strip()
    if not code:
        raise EmptyResponse("fenced code block is empty")
    return code


def build_repair_messages(
    messages: Sequence[Message], response: str, problems: Sequence[str]
) -> list[Message]:
    """Extend the conversation with the bad answer and a fix-it request."""
    listed = "\n".join(f"- {p}" for p in problems)
    repair = (
        "The property you wrote was rejected with these problems:\n"
        f"{listed}\n"
        "Rewrite the whole property and fix every problem. Respond with a "
        "single fenced code block containing only the corrected property."
    )
    return list(messages) + [Message("assistant", response), Message("user", repair)]


# --- the synthesis loop -----------------------------------------------------


@dataclass(frozen=True)
class SynthesisResult:
    ast: PropertyAST
    raw_response: str
    retries_used: int
    warnings: tuple[str, ...] = ()


def synthesize(
    description: PropertyDescription,
    store: WidgetContextStore,
    provider: ChatProvider,
    *,
    demos: Optional[Sequence[dict]] = None,
    context_budget: int = DEFAULT_CONTEXT_BUDGET,
    max_repairs: int = DEFAULT_MAX_REPAIRS,
) -> SynthesisResult:
    """Prompt, parse, validate; repair with diagnostics up to max_repairs times."""
    if demos is None:
        demos = load_synthesis_demos()
    context = select_context_subset(store, description, budget=context_budget)
    messages = build_synthesis_prompt(description, context, demos)

    problems: list[str] = ["no provider response"]
    for attempt in range(max_repairs + 1):
        response = provider.complete(messages, temperature=0.0)
        ast = None
        try:
            ast = parse_property(extract_code(response))
        except (EmptyResponse, ParseError) as exc:
            problems = [str(exc)]
        if ast is not None:
            diagnostics = validate(ast, store=store)
            errors = [d.message for d in diagnostics if d.severity == "error"]
            if not errors:
                return SynthesisResult(
                    ast=ast,
                    raw_response=response,
                    retries_used=attempt,
                    warnings=tuple(
                        d.message for d in diagnostics if d.severity == "warning"
                    ),
                )
            problems = errors
        if attempt < max_repairs:
            messages = build_repair_messages(messages, response, problems)

    raise SynthesisFailed(
        f"property {description.name!r} still rejected after {max_repairs} repair "
        "rounds: " + "; ".join(problems)
    )
