from functools import lru_cache
from pathlib import Path

import pytest

from propforge.capture import load_capture_dir
from propforge.grounding import HeuristicAnnotator, build_context_store
from propforge.synthesis import parse_description

DATA_DIR = Path(__file__).parent / "data"
CORPUS_DIR = DATA_DIR / "corpus"
SUITE_DIR = DATA_DIR / "suite"
GOLDEN_DIR = DATA_DIR / "golden"

SUITE_APPS = ("filer", "notes", "player")


def corpus_paths() -> list[Path]:
    return sorted(CORPUS_DIR.glob("*.prop"))


@lru_cache(maxsize=None)
def suite_store(app: str):
    """Heuristically annotated context store for one suite app."""
    captures_dir = SUITE_DIR / app / "captures"
    captures = [load_capture_dir(d) for d in sorted(captures_dir.iterdir())]
    return build_context_store(captures, annotator=HeuristicAnnotator())


def suite_cases(app: str):
    """(stem, description, ground-truth text) triples for one suite app."""
    app_dir = SUITE_DIR / app
    cases = []
    for desc_path in sorted((app_dir / "descriptions").glob("*.txt")):
        name = desc_path.stem.split("_", 1)[1]
        description = parse_description(desc_path.read_text(), name=name)
        gt_text = (app_dir / "ground_truth" / (desc_path.stem + ".prop")).read_text()
        cases.append((desc_path.stem, description, gt_text))
    return cases


def suite_case(app: str, stem: str):
    """Single (stem, description, ground-truth text) triple looked up by stem."""
    for case in suite_cases(app):
        if case[0] == stem:
            return case
    raise KeyError(f"{app}/{stem}")


def all_suite_cases():
    """(app, stem, description, ground-truth text) across the whole suite."""
    return [
        (app, stem, description, gt_text)
        for app in SUITE_APPS
        for stem, description, gt_text in suite_cases(app)
    ]


@pytest.fixture
def data_dir() -> Path:
    return DATA_DIR
