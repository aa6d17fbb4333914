"""Widget semantics: functionality annotation, the enriched context store,
phrase-to-widget matching, and selector-level widget equivalence.
"""

from __future__ import annotations

import hashlib
import json
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Callable, Optional, Protocol

from .capture import Bounds, PageCapture, WidgetAttributes, crop_widget_image, encode_png, highlight_widget, load_png
from .provider import Attachment, ChatProvider, Message, concurrency_bound


class GroundingError(Exception):
    pass


class MissingDemos(GroundingError):
    """An annotation or synthesis prompt needs exactly two demonstrations."""


class MalformedAnnotation(GroundingError):
    """Provider response held no usable annotation even after one repair."""


class MixedApps(GroundingError):
    """Captures from different apps cannot share one context store."""


class EmptyQuery(GroundingError):
    pass


@dataclass(frozen=True)
class WidgetAnnotation:
    """The two inferred semantic fields for a widget."""

    semantic_label: str
    functionality: str

    def __post_init__(self):
        if not self.semantic_label.strip() or not self.functionality.strip():
            raise ValueError("annotation fields must be non-empty")
        if len(self.semantic_label.split()) > 8:
            raise ValueError("semantic_label longer than 8 words")


@dataclass(frozen=True)
class EnrichedWidget:
    widget_uid: str
    attributes: WidgetAttributes
    source_capture: str
    annotation: Optional[WidgetAnnotation] = None


@dataclass(frozen=True)
class WidgetContextStore:
    app_name: str
    widgets: tuple[EnrichedWidget, ...]
    dedup_index: dict = field(compare=False)

    def by_uid(self, uid: str) -> EnrichedWidget:
        for w in self.widgets:
            if w.widget_uid == uid:
                return w
        raise KeyError(uid)


@dataclass(frozen=True)
class MatchResult:
    query: str
    candidates: tuple[tuple[str, float], ...]  # (widget_uid, score), non-increasing

    def best(self) -> Optional[str]:
        return self.candidates[0][0] if self.candidates else None


_CAMEL_RE = re.compile(r"(?<=[a-z0-9])(?=[A-Z])")
_SPLIT_RE = re.compile(r"[^0-9a-zA-Z]+")
_RID_PREFIXES = {"btn", "tv", "iv", "id"}


def tokenize(text: str) -> list[str]:
    """Lowercase tokens split on whitespace, punctuation, underscores, and
    camelCase boundaries, so "btn_submitOrder" -> [btn, submit, order]."""
    spaced = _CAMEL_RE.sub(" ", text)
    return [t.lower() for t in _SPLIT_RE.split(spaced) if t]


def humanize_resource_id(resource_id: str) -> str:
    """Readable words from an Android resource id, e.g. "app:id/btn_submit"
    becomes "submit"."""
    tail = resource_id.rsplit("/", 1)[-1]
    tokens = [t for t in tokenize(tail) if t not in _RID_PREFIXES]
    return " ".join(tokens)


# --- annotation -----------------------------------------------------------

ANNOTATION_ROLE = (
    "You are an expert in Android GUI analysis. You understand what each "
    "widget on an app page does and can describe it precisely."
)
ANNOTATION_TASK = (
    "Task: given information about an app page and one widget on it, produce "
    "the widget's semantic label (a short name of at most 8 words) and its "
    "functionality (one sentence describing what it does for the user). "
    'Respond with a JSON object with keys "semantic_label" and "functionality".'
)
ANNOTATION_CONSTRAINTS = (
    "Respond only with the JSON object. Do not include any explanations."
)


def widget_info_json(widget: WidgetAttributes) -> str:
    """Raw-attribute JSON used in prompts; absent values render as "null"."""
    obj = {
        "text": widget.text if widget.text is not None else "null",
        "resource_id": widget.resource_id if widget.resource_id is not None else "null",
        "description": (
            widget.content_description if widget.content_description is not None else "null"
        ),
        "class": widget.class_name,
    }
    return json.dumps(obj, ensure_ascii=False)


def enriched_widget_json(widget: EnrichedWidget) -> str:
    """Enriched-context JSON used in synthesis prompts."""
    attrs = widget.attributes
    ann = widget.annotation
    obj = {
        "text": attrs.text if attrs.text is not None else "null",
        "resource_id": attrs.resource_id if attrs.resource_id is not None else "null",
        "description": (
            attrs.content_description if attrs.content_description is not None else "null"
        ),
        "class": attrs.class_name,
        "semantic label": ann.semantic_label if ann else "null",
        "functionality": ann.functionality if ann else "null",
    }
    return json.dumps(obj, ensure_ascii=False)


def load_annotation_demos() -> list[tuple[dict, dict]]:
    """The two bundled demonstration pairs for annotation prompts."""
    root = resources.files("propforge").joinpath("data").joinpath("demos").joinpath("annotation")
    demos = []
    for entry in sorted(root.iterdir(), key=lambda e: e.name):
        if entry.name.endswith(".json"):
            obj = json.loads(entry.read_text(encoding="utf-8"))
            demos.append((obj["input"], obj["output"]))
    return demos


def build_annotation_prompt(
    page: PageCapture,
    widget: WidgetAttributes,
    demos: list[tuple[dict, dict]],
) -> list[Message]:
    """Five-part annotation prompt: role, task, demonstrations, input
    (page + widget info plus screenshot attachments), constraints."""
    if len(demos) != 2:
        raise MissingDemos(f"annotation prompt needs exactly 2 demos, got {len(demos)}")

    demo_lines = ["Here are two examples."]
    for demo_in, demo_out in demos:
        demo_lines.append("Input:")
        demo_lines.append(json.dumps(demo_in, ensure_ascii=False))
        demo_lines.append("Output:")
        demo_lines.append(json.dumps(demo_out, ensure_ascii=False))
    demos_text = "\n".join(demo_lines)

    input_lines = [
        "Now annotate this widget.",
        f'Page info: app "{page.app_name}", activity "{page.activity_name}".',
        f"Widget info: {widget_info_json(widget)}",
    ]
    attachments: tuple[Attachment, ...] = ()
    if page.screenshot_path:
        shot = load_png(page.screenshot_path)
        boxed = highlight_widget(shot, widget.bounds)
        crop = crop_widget_image(shot, widget.bounds)
        attachments = (
            Attachment("page_with_red_box", "image/png", encode_png(boxed)),
            Attachment("widget_crop", "image/png", encode_png(crop)),
        )
        input_lines.append(
            "The first attached image is the full page screenshot with the "
            "widget outlined by a red box; the second is the widget cropped "
            "from the screenshot."
        )
    else:
        input_lines.append("No screenshot available; rely on the attributes alone.")
    input_text = "\n".join(input_lines)

    user_text = "\n\n".join([ANNOTATION_TASK, demos_text, input_text, ANNOTATION_CONSTRAINTS])
    return [
        Message("system", ANNOTATION_ROLE),
        Message("user", user_text, attachments),
    ]


def _extract_json_object(text: str) -> Optional[dict]:
    """First balanced {...} block in the text that parses as a JSON object."""
    start = text.find("{")
    while start != -1:
        depth = 0
        for i in range(start, len(text)):
            if text[i] == "{":
                depth += 1
            elif text[i] == "}":
                depth -= 1
                if depth == 0:
                    try:
                        obj = json.loads(text[start:i + 1])
                    except ValueError:
                        break
                    if isinstance(obj, dict):
                        return obj
                    break
        start = text.find("{", start + 1)
    return None


ANNOTATION_REPAIR = (
    "That response was not usable. Respond only with a JSON object with "
    'exactly the keys "semantic_label" and "functionality", both non-empty strings.'
)


def _parse_annotation(response: str) -> Optional[WidgetAnnotation]:
    obj = _extract_json_object(response)
    if obj is None:
        return None
    label = obj.get("semantic_label")
    func = obj.get("functionality")
    if not isinstance(label, str) or not isinstance(func, str):
        return None
    label = " ".join(label.split()[:8]).strip()
    func = func.strip()
    if not label or not func:
        return None
    return WidgetAnnotation(label, func)


def annotate_widget(provider: ChatProvider, prompt: list[Message]) -> WidgetAnnotation:
    """Ask the provider for the two annotation fields, with one repair retry."""
    raw = provider.complete(prompt, temperature=0.0)
    parsed = _parse_annotation(raw)
    if parsed is not None:
        return parsed
    repair = list(prompt) + [
        Message("assistant", raw),
        Message("user", ANNOTATION_REPAIR),
    ]
    raw2 = provider.complete(repair, temperature=0.0)
    parsed = _parse_annotation(raw2)
    if parsed is not None:
        return parsed
    raise MalformedAnnotation(f"unusable annotation after repair: {raw2[:200]!r}")


_TEXTY_CLASSES = ("TextView", "EditText")


def heuristic_annotate(page: PageCapture, widget: WidgetAttributes) -> WidgetAnnotation:
    """Deterministic offline annotator: label from the best available
    attribute, functionality templated from clickability."""
    label = ""
    if widget.text:
        label = widget.text
    elif widget.content_description:
        label = widget.content_description
    elif widget.resource_id:
        label = humanize_resource_id(widget.resource_id)
    if not label:
        label = widget.class_name.rsplit(".", 1)[-1]
    label = " ".join(label.split()[:8])
    verb = "Triggers" if widget.clickable else "Displays"
    return WidgetAnnotation(label, f"{verb} {label}")


class Annotator(Protocol):
    def annotate(self, page: PageCapture, widget: WidgetAttributes) -> WidgetAnnotation:
        ...


class HeuristicAnnotator:
    def annotate(self, page: PageCapture, widget: WidgetAttributes) -> WidgetAnnotation:
        return heuristic_annotate(page, widget)


class MllmAnnotator:
    """Provider-backed annotator using the five-part annotation prompt."""

    def __init__(self, provider: ChatProvider, demos: list[tuple[dict, dict]]):
        self.provider = provider
        self.demos = demos

    def annotate(self, page: PageCapture, widget: WidgetAttributes) -> WidgetAnnotation:
        prompt = build_annotation_prompt(page, widget, self.demos)
        return annotate_widget(self.provider, prompt)


# --- store ----------------------------------------------------------------

def _dedup_key(w: WidgetAttributes) -> tuple:
    return (w.resource_id, w.text, w.content_description, w.class_name)


def _widget_uid(capture_id: str, node_index: int) -> str:
    return hashlib.sha256(f"{capture_id}:{node_index}".encode()).hexdigest()[:12]


def build_context_store(
    captures: list[PageCapture],
    annotator: Annotator,
    max_workers: Optional[int] = None,
) -> WidgetContextStore:
    """Aggregate captures into one deduplicated, annotated widget store.

    Duplicates collapse on (resource_id, text, content_description, class);
    the first occurrence in capture order wins.  Annotation calls fan out
    across a bounded thread pool.
    """
    app_names = {c.app_name for c in captures}
    if len(app_names) > 1:
        raise MixedApps(f"captures span multiple apps: {sorted(app_names)}")
    app_name = next(iter(app_names)) if app_names else ""

    picked: list[tuple[PageCapture, WidgetAttributes, str]] = []
    dedup_index: dict = {}
    for capture in captures:
        for widget in capture.widgets:
            key = _dedup_key(widget)
            if key in dedup_index:
                continue
            uid = _widget_uid(capture.capture_id, widget.node_index)
            dedup_index[key] = uid
            picked.append((capture, widget, uid))

    workers = max_workers or concurrency_bound()
    if picked:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            annotations = list(pool.map(lambda t: annotator.annotate(t[0], t[1]), picked))
    else:
        annotations = []

    widgets = tuple(
        EnrichedWidget(
            widget_uid=uid,
            attributes=widget,
            source_capture=capture.capture_id,
            annotation=ann,
        )
        for (capture, widget, uid), ann in zip(picked, annotations)
    )
    return WidgetContextStore(app_name=app_name, widgets=widgets, dedup_index=dedup_index)


def save_store(store: WidgetContextStore, path: str | Path) -> None:
    """Persist the store as diff-friendly JSON (absent attributes are null)."""
    payload = {
        "app_name": store.app_name,
        "widgets": [
            {
                "uid": w.widget_uid,
                "text": w.attributes.text,
                "resource_id": w.attributes.resource_id,
                "content_description": w.attributes.content_description,
                "class": w.attributes.class_name,
                "semantic_label": w.annotation.semantic_label if w.annotation else None,
                "functionality": w.annotation.functionality if w.annotation else None,
                "clickable": w.attributes.clickable,
                "bounds": [
                    w.attributes.bounds.left,
                    w.attributes.bounds.top,
                    w.attributes.bounds.right,
                    w.attributes.bounds.bottom,
                ],
                "node_index": w.attributes.node_index,
                "source_capture": w.source_capture,
            }
            for w in store.widgets
        ],
    }
    Path(path).write_text(json.dumps(payload, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")


def load_store(path: str | Path) -> WidgetContextStore:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    widgets = []
    dedup_index: dict = {}
    for entry in payload["widgets"]:
        attrs = WidgetAttributes(
            class_name=entry["class"],
            bounds=Bounds(*entry["bounds"]),
            node_index=entry["node_index"],
            text=entry["text"],
            resource_id=entry["resource_id"],
            content_description=entry["content_description"],
            clickable=entry["clickable"],
        )
        annotation = None
        if entry["semantic_label"] is not None:
            annotation = WidgetAnnotation(entry["semantic_label"], entry["functionality"])
        widgets.append(
            EnrichedWidget(
                widget_uid=entry["uid"],
                attributes=attrs,
                source_capture=entry["source_capture"],
                annotation=annotation,
            )
        )
        dedup_index[_dedup_key(attrs)] = entry["uid"]
    return WidgetContextStore(
        app_name=payload["app_name"], widgets=tuple(widgets), dedup_index=dedup_index
    )


# --- matching -------------------------------------------------------------

FIELD_WEIGHTS = (
    ("semantic_label", 0.30),
    ("text", 0.25),
    ("functionality", 0.20),
    ("resource_id", 0.15),
    ("content_description", 0.10),
)


def _field_tokens(widget: EnrichedWidget) -> dict[str, set[str]]:
    attrs = widget.attributes
    ann = widget.annotation
    return {
        "semantic_label": set(tokenize(ann.semantic_label)) if ann else set(),
        "text": set(tokenize(attrs.text)) if attrs.text else set(),
        "functionality": set(tokenize(ann.functionality)) if ann else set(),
        "resource_id": set(tokenize(humanize_resource_id(attrs.resource_id)))
        if attrs.resource_id
        else set(),
        "content_description": set(tokenize(attrs.content_description))
        if attrs.content_description
        else set(),
    }


def match_widget(query: str, store: WidgetContextStore) -> MatchResult:
    """Rank store widgets by weighted token overlap with the query phrase."""
    query_tokens = set(tokenize(query))
    if not query_tokens:
        raise EmptyQuery("widget query has no tokens")
    scored: list[tuple[float, int, str]] = []
    for widget in store.widgets:
        fields = _field_tokens(widget)
        score = 0.0
        for name, weight in FIELD_WEIGHTS:
            overlap = len(query_tokens & fields[name])
            score += weight * overlap / len(query_tokens)
        if score > 0:
            scored.append((score, widget.attributes.node_index, widget.widget_uid))
    scored.sort(key=lambda t: (-t[0], t[1]))
    return MatchResult(query=query, candidates=tuple((uid, s) for s, _, uid in scored))


# --- selector clauses and widget equivalence ------------------------------

CLAUSE_FIELDS = ("text", "resource_id", "content_description", "class_name")


@dataclass(frozen=True)
class IdClause:
    """One attribute=value selector clause; contains=True is substring mode."""

    field: str
    value: str
    contains: bool = False

    def __post_init__(self):
        if self.field not in CLAUSE_FIELDS:
            raise ValueError(f"unknown selector field {self.field!r}")


def clause_matches(clause: IdClause, attrs: WidgetAttributes) -> bool:
    actual = getattr(attrs, clause.field)
    if actual is None:
        return False
    if clause.contains:
        return clause.value in actual
    return actual == clause.value


def resolve_clause(clause: IdClause, store: WidgetContextStore) -> frozenset[str]:
    return frozenset(
        w.widget_uid for w in store.widgets if clause_matches(clause, w.attributes)
    )


def same_widget(id_a: IdClause, id_b: IdClause, store: WidgetContextStore) -> bool:
    """Two selector clauses denote the same widget iff they resolve to the
    same non-empty widget set in the store."""
    set_a = resolve_clause(id_a, store)
    if not set_a:
        return False
    return set_a == resolve_clause(id_b, store)
