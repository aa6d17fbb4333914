"""Paraphrase robustness tooling.

Sentence-level BLEU-4 with add-1 smoothing on higher-order zero matches,
pool-level Self-BLEU, and a greedy selector that grows a maximally diverse
paraphrase subset one sentence at a time. Paraphrase pools themselves come
from the chat provider via a bundled prompt template.
"""

import math
import re
from collections import Counter
from dataclasses import dataclass
from importlib import resources
from typing import Optional, Sequence

from .provider import ChatProvider, Message

MAX_ORDER = 4


class RobustnessError(Exception):
    pass


class UnparseableList(RobustnessError):
    """A paraphrase response contained no numbered list items."""


class PoolTooSmall(RobustnessError):
    """Selection was asked for more sentences than the pool holds.

    select_diverse itself degrades gracefully (it returns the whole pool);
    callers that promised the user exactly k sentences raise this instead.
    """


# --- BLEU -------------------------------------------------------------------


_TOKEN_RE = re.compile(r"\w+")


def tokenize_sentence(text: str) -> tuple[str, ...]:
    """Lowercase word tokens; whitespace and punctuation both separate."""
    return tuple(_TOKEN_RE.findall(text.lower()))


def _ngrams(tokens: tuple[str, ...], order: int) -> Counter:
    return Counter(tokens[i:i + order] for i in range(len(tokens) - order + 1))


def sentence_bleu(hypothesis: str, reference: str) -> float:
    """BLEU-4 with uniform weights and a brevity penalty.

    Unigram precision is never smoothed, so sentences sharing no tokens score
    exactly 0.0 and an exact copy scores exactly 1.0. Higher orders fall back
    to add-1 smoothing when they have no matches at all.
    """
    hyp = tokenize_sentence(hypothesis)
    ref = tokenize_sentence(reference)
    if not hyp:
        return 0.0

    product = 1.0
    for order in range(1, MAX_ORDER + 1):
        hyp_counts = _ngrams(hyp, order)
        ref_counts = _ngrams(ref, order)
        total = sum(hyp_counts.values())
        matches = sum(min(count, ref_counts[gram]) for gram, count in hyp_counts.items())
        if order == 1:
            if matches == 0:
                return 0.0
            precision = matches / total
        elif matches == 0:
            precision = 1.0 / (total + 1)
        else:
            precision = matches / total
        product *= precision

    if len(hyp) >= len(ref):
        brevity = 1.0
    else:
        brevity = math.exp(1.0 - len(ref) / len(hyp))
    return brevity * product ** (1.0 / MAX_ORDER)


def mutual_bleu(a: str, b: str) -> float:
    """Symmetrized similarity of two sentences."""
    return (sentence_bleu(a, b) + sentence_bleu(b, a)) / 2.0


def self_bleu(pool: Sequence[str]) -> float:
    """Mean BLEU over all ordered pairs; low means a diverse pool."""
    size = len(pool)
    if size < 2:
        return 0.0
    total = 0.0
    for i in range(size):
        for j in range(size):
            if i != j:
                total += sentence_bleu(pool[i], pool[j])
    return total / (size * (size - 1))


# --- greedy diverse selection -------------------------------------------------


@dataclass(frozen=True)
class SelectionStep:
    added: int
    self_bleu: float


@dataclass(frozen=True)
class DiverseSelection:
    indices: tuple[int, ...]
    steps: tuple[SelectionStep, ...]

    def sentences(self, pool: Sequence[str]) -> list[str]:
        return [pool[i] for i in self.indices]


class _PairCache:
    def __init__(self, pool: Sequence[str]):
        self.pool = pool
        self.cache: dict[tuple[int, int], float] = {}

    def bleu(self, i: int, j: int) -> float:
        key = (i, j)
        if key not in self.cache:
            self.cache[key] = sentence_bleu(self.pool[i], self.pool[j])
        return self.cache[key]

    def subset_self_bleu(self, indices: Sequence[int]) -> float:
        size = len(indices)
        if size < 2:
            return 0.0
        total = 0.0
        for i in indices:
            for j in indices:
                if i != j:
                    total += self.bleu(i, j)
        return total / (size * (size - 1))


def select_diverse(pool: Sequence[str], k: int) -> DiverseSelection:
    """Grow the subset greedily, always minimizing its Self-BLEU.

    Starts from the most mutually diverse pair, then repeatedly adds the
    candidate whose inclusion keeps the subset Self-BLEU lowest. All ties
    break toward the lowest index, so selection is fully deterministic.
    """
    size = len(pool)
    if k <= 0 or size == 0:
        return DiverseSelection(indices=(), steps=())
    if k == 1 or size == 1:
        return DiverseSelection(indices=(0,), steps=(SelectionStep(0, 0.0),))
    if k >= size:
        # nothing to choose; the steps log stays empty because no greedy
        # decision was taken
        return DiverseSelection(indices=tuple(range(size)), steps=())

    cache = _PairCache(pool)
    best_pair: Optional[tuple[int, int]] = None
    best_score = math.inf
    for i in range(size):
        for j in range(i + 1, size):
            score = cache.subset_self_bleu((i, j))
            if score < best_score:
                best_score = score
                best_pair = (i, j)
    selected = list(best_pair)
    steps = [
        SelectionStep(best_pair[0], best_score),
        SelectionStep(best_pair[1], best_score),
    ]

    while len(selected) < k:
        chosen = None
        chosen_score = math.inf
        for candidate in range(size):
            if candidate in selected:
                continue
            score = cache.subset_self_bleu(selected + [candidate])
            if score < chosen_score:
                chosen_score = score
                chosen = candidate
        selected.append(chosen)
        steps.append(SelectionStep(chosen, chosen_score))

    return DiverseSelection(indices=tuple(selected), steps=tuple(steps))


# --- paraphrase pools ---------------------------------------------------------


@dataclass(frozen=True)
class ParaphrasePool:
    items: tuple[str, ...]
    warnings: tuple[str, ...] = ()
    # (call index, item index within that call's list), parallel to items
    provenance: tuple[tuple[int, int], ...] = ()


_NUMBERED_RE = re.compile(r"^\s*\d+[.)]\s*(.+?)\s*$")


def load_paraphrase_template() -> str:
    return (
        resources.files("propforge")
        .joinpath("data")
        .joinpath("paraphrase.prompt")
        .read_text(encoding="utf-8")
    )


def extract_numbered_items(response: str) -> list[str]:
    items = []
    for line in response.splitlines():
        matched = _NUMBERED_RE.match(line)
        if matched:
            items.append(matched.group(1))
    if not items:
        raise UnparseableList("response contains no numbered list items")
    return items


def generate_paraphrases(
    provider: ChatProvider,
    description: str,
    *,
    pool_size: int = 20,
    per_call: int = 10,
) -> ParaphrasePool:
    """Collect a paraphrase pool over as many provider calls as needed.

    Each call embeds its index so repeated calls hash to distinct prompts.
    Exact duplicates are dropped; a short pool is reported as a warning
    rather than an error.
    """
    template = load_paraphrase_template()
    total_calls = max(1, math.ceil(pool_size / per_call))
    seen = set()
    items: list[str] = []
    provenance: list[tuple[int, int]] = []
    for call_index in range(1, total_calls + 1):
        rendered = template.format(
            count=per_call,
            call_index=call_index,
            total_calls=total_calls,
            description=description.rstrip(),
        )
        response = provider.complete([Message("user", rendered)], temperature=0.8)
        for item_index, item in enumerate(extract_numbered_items(response), 1):
            if item not in seen:
                seen.add(item)
                items.append(item)
                provenance.append((call_index, item_index))
    warnings = ()
    if len(items) < pool_size:
        warnings = (
            f"paraphrase pool has {len(items)} items, wanted {pool_size}",
        )
    return ParaphrasePool(
        items=tuple(items[:pool_size]),
        warnings=warnings,
        provenance=tuple(provenance[:pool_size]),
    )
