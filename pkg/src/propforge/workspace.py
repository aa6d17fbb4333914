"""Workspace layout, locking, atomic persistence, and pipeline configuration.

A workspace is a single directory holding everything one app's pipeline run
touches: captured pages, the built widget context, property descriptions,
generated properties, app models, provider fixtures, and reports. All writes
go through write-temp-then-rename so a crashed command never leaves a
half-written artifact, and a lock file keeps two commands from racing on the
same workspace.
"""

import json
import os
import re
from contextlib import contextmanager
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

from .provider import concurrency_bound
from .synthesis import DEFAULT_CONTEXT_BUDGET, DEFAULT_MAX_REPAIRS, parse_description

ANNOTATOR_CHOICES = ("heuristic", "mllm")

SUBDIRS = (
    "captures",
    "descriptions",
    "properties",
    "models",
    "fixtures",
    "reports",
)


class WorkspaceError(Exception):
    pass


class WorkspaceLocked(WorkspaceError):
    """Another command holds this workspace's lock file."""


class NoCaptures(WorkspaceError):
    """context build needs at least one capture directory."""


class MissingContext(WorkspaceError):
    """The command needs context.json; run `context build` first."""


class NameMismatch(WorkspaceError):
    """Generated and ground-truth property sets must carry the same names."""


@dataclass(frozen=True)
class Workspace:
    root: Path

    @classmethod
    def at(cls, root: Union[str, Path]) -> "Workspace":
        return cls(root=Path(root))

    @property
    def captures_dir(self) -> Path:
        return self.root / "captures"

    @property
    def context_path(self) -> Path:
        return self.root / "context.json"

    @property
    def descriptions_dir(self) -> Path:
        return self.root / "descriptions"

    @property
    def properties_dir(self) -> Path:
        return self.root / "properties"

    @property
    def models_dir(self) -> Path:
        return self.root / "models"

    @property
    def fixtures_dir(self) -> Path:
        return self.root / "fixtures"

    @property
    def reports_dir(self) -> Path:
        return self.root / "reports"

    @property
    def lock_path(self) -> Path:
        return self.root / ".lock"

    def ensure_layout(self) -> None:
        self.root.mkdir(parents=True, exist_ok=True)
        for sub in SUBDIRS:
            (self.root / sub).mkdir(exist_ok=True)

    def capture_dirs(self) -> list[Path]:
        if not self.captures_dir.is_dir():
            return []
        return sorted(d for d in self.captures_dir.iterdir() if d.is_dir())

    def description_paths(self) -> list[Path]:
        if not self.descriptions_dir.is_dir():
            return []
        return sorted(self.descriptions_dir.glob("*.txt"))

    def property_paths(self) -> list[Path]:
        if not self.properties_dir.is_dir():
            return []
        return sorted(self.properties_dir.glob("*.prop"))

    def fixture_files(self) -> list[Path]:
        if not self.fixtures_dir.is_dir():
            return []
        return sorted(self.fixtures_dir.glob("*.json"))


def atomic_write_text(path: Union[str, Path], text: str) -> None:
    """Write via a sibling temp file and rename, so readers never see a
    partial file and an interrupted write leaves the old content intact."""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    tmp = target.parent / (target.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, target)


def atomic_write_json(path: Union[str, Path], payload) -> None:
    atomic_write_text(path, json.dumps(payload, indent=2, ensure_ascii=False) + "\n")


@contextmanager
def workspace_lock(workspace: Workspace):
    """Exclusive advisory lock for the duration of one command."""
    workspace.root.mkdir(parents=True, exist_ok=True)
    lock = workspace.lock_path
    try:
        fd = os.open(lock, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
    except FileExistsError:
        raise WorkspaceLocked(
            f"workspace is locked by another command ({lock}); "
            "remove the file if that command crashed"
        ) from None
    try:
        os.write(fd, f"{os.getpid()}\n".encode("ascii"))
        os.close(fd)
        yield
    finally:
        try:
            lock.unlink()
        except FileNotFoundError:
            pass


_INDEX_PREFIX_RE = re.compile(r"^[A-Za-z]?\d+[_-]")


def property_name_for(stem: str) -> str:
    """Property name derived from a description filename.

    A leading ordering prefix like `p01_` or `07-` is dropped so files can
    sort predictably without the index leaking into property names.
    """
    name = _INDEX_PREFIX_RE.sub("", stem)
    return name or stem


def load_description(path: Union[str, Path]):
    """Read one description file; an in-file `Property:` line wins over the
    filename-derived name."""
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    if re.search(r"(?mi)^\s*property\s*:", text):
        return parse_description(text)
    return parse_description(text, name=property_name_for(path.stem))


@dataclass(frozen=True)
class PipelineConfig:
    """Everything a pipeline command needs beyond the workspace itself.

    Secrets stay in the environment; the config never holds the API key.
    """

    annotator: str = "heuristic"
    context_budget: int = DEFAULT_CONTEXT_BUDGET
    repair_budget: int = DEFAULT_MAX_REPAIRS
    concurrency: int = 1
    base_url: str = ""
    llm_model: str = ""
    mllm_model: Optional[str] = None

    def __post_init__(self):
        if self.annotator not in ANNOTATOR_CHOICES:
            raise WorkspaceError(
                f"annotator must be one of {ANNOTATOR_CHOICES}, got {self.annotator!r}"
            )
        if self.context_budget < 0 or self.repair_budget < 0:
            raise WorkspaceError("budgets must be >= 0")
        if self.concurrency < 1:
            raise WorkspaceError("concurrency must be >= 1")

    @classmethod
    def from_env(
        cls,
        annotator: str = "heuristic",
        context_budget: int = DEFAULT_CONTEXT_BUDGET,
        repair_budget: int = DEFAULT_MAX_REPAIRS,
    ) -> "PipelineConfig":
        return cls(
            annotator=annotator,
            context_budget=context_budget,
            repair_budget=repair_budget,
            concurrency=concurrency_bound(),
            base_url=os.environ.get("PF_LLM_BASE_URL", ""),
            llm_model=os.environ.get("PF_LLM_MODEL", ""),
            mllm_model=os.environ.get("PF_MLLM_MODEL") or None,
        )
