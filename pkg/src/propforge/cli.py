"""Command-line surface tying the pipeline together.

Exit codes are a stable contract: 0 for full success, 1 for partial failure
(some items failed, or a simulated property did not pass), 2 for usage and
configuration errors. Every command accepts --json for machine-readable
stdout. Reruns on unchanged inputs produce byte-identical artifacts as long
as the provider is deterministic (heuristic annotator or fixture replay).
"""

import json
import sys
from pathlib import Path
from typing import Optional

import click

from .baseline import BaselineError, baseline_synthesize
from .capture import CaptureError, load_capture_dir
from .evaluation import judge, load_model_pair
from .grounding import (
    GroundingError,
    HeuristicAnnotator,
    MllmAnnotator,
    build_context_store,
    load_annotation_demos,
    load_store,
    save_store,
)
from .propdsl import parse_property, print_property, validate
from .propdsl.metrics import (
    MetricsRow,
    char_complexity,
    metrics_rows,
    render_metrics_markdown,
    render_metrics_tsv,
)
from .propdsl.parser import ParseError
from .provider import MockChatProvider, OpenAIChatProvider, ProviderError
from .robustness import (
    PoolTooSmall,
    RobustnessError,
    generate_paraphrases,
    select_diverse,
    self_bleu,
)
from .simulator import PASSED, ModelError, execute_property, load_app_model
from .synthesis import SynthesisError, description_text, synthesize
from .workspace import (
    MissingContext,
    NameMismatch,
    NoCaptures,
    PipelineConfig,
    Workspace,
    WorkspaceError,
    atomic_write_json,
    atomic_write_text,
    load_description,
    workspace_lock,
)

USAGE_ERRORS = (
    WorkspaceError,
    ProviderError,
    CaptureError,
    GroundingError,
    PoolTooSmall,
    ModelError,
)


def _fail(message: str) -> "click.exceptions.Exit":
    click.echo(f"error: {message}", err=True)
    return click.exceptions.Exit(2)


def _emit(payload: dict, as_json: bool, human: str) -> None:
    if as_json:
        click.echo(json.dumps(payload, indent=2, ensure_ascii=False))
    else:
        click.echo(human)


def _provider_for(workspace: Workspace):
    """Fixture replay when the workspace carries fixtures, else the
    env-configured endpoint."""
    fixture_files = workspace.fixture_files()
    if fixture_files:
        return MockChatProvider.from_dir(workspace.fixtures_dir)
    return OpenAIChatProvider.from_env()


def _load_store_or_none(workspace: Workspace):
    if workspace.context_path.is_file():
        return load_store(workspace.context_path)
    return None


@click.group()
def main():
    """Translate GUI-test property descriptions into executable properties."""


def workspace_option(fn):
    return click.option(
        "-w",
        "--workspace",
        "workspace_root",
        type=click.Path(file_okay=False, path_type=Path),
        default=Path("."),
        show_default=True,
        help="Workspace directory.",
    )(fn)


def json_option(fn):
    return click.option("--json", "as_json", is_flag=True, help="JSON stdout.")(fn)


# --- context ----------------------------------------------------------------


@main.group()
def context():
    """Widget-context commands."""


@context.command("build")
@workspace_option
@json_option
@click.option(
    "--annotator",
    type=click.Choice(["heuristic", "mllm"]),
    default="heuristic",
    show_default=True,
    help="Annotation backend for semantic labels.",
)
def context_build(workspace_root: Path, as_json: bool, annotator: str):
    """Aggregate captures into an annotated, deduplicated context.json."""
    ws = Workspace.at(workspace_root)
    config = PipelineConfig.from_env(annotator=annotator)
    try:
        with workspace_lock(ws):
            ws.ensure_layout()
            capture_dirs = ws.capture_dirs()
            if not capture_dirs:
                raise NoCaptures(f"no capture directories under {ws.captures_dir}")
            captures = [load_capture_dir(d) for d in capture_dirs]
            if config.annotator == "mllm":
                backend = MllmAnnotator(_provider_for(ws), load_annotation_demos())
            else:
                backend = HeuristicAnnotator()
            store = build_context_store(
                captures, annotator=backend, max_workers=config.concurrency
            )
            tmp = ws.context_path.with_suffix(".json.tmp")
            save_store(store, tmp)
            tmp.replace(ws.context_path)
    except USAGE_ERRORS as exc:
        raise _fail(str(exc))
    annotated = sum(1 for w in store.widgets if w.annotation is not None)
    _emit(
        {
            "path": str(ws.context_path),
            "captures": len(captures),
            "widgets": len(store.widgets),
            "annotated": annotated,
        },
        as_json,
        f"built {ws.context_path}: {len(store.widgets)} widgets "
        f"({annotated} annotated) from {len(captures)} captures",
    )


# --- synthesize ---------------------------------------------------------------


@main.command("synthesize")
@workspace_option
@json_option
@click.argument("descriptions", nargs=-1, type=click.Path(exists=True, path_type=Path))
@click.option("--baseline", "use_baseline", is_flag=True,
              help="Rule-based synthesis; no provider calls.")
@click.option("--context-budget", type=int, default=None,
              help="Max widgets embedded in the prompt.")
@click.option("--max-repairs", type=int, default=None,
              help="Repair rounds after a rejected response.")
def synthesize_cmd(
    workspace_root: Path,
    as_json: bool,
    descriptions: tuple[Path, ...],
    use_baseline: bool,
    context_budget: Optional[int],
    max_repairs: Optional[int],
):
    """Turn description files into .prop files plus a synthesis log."""
    ws = Workspace.at(workspace_root)
    kwargs = {}
    if context_budget is not None:
        kwargs["context_budget"] = context_budget
    if max_repairs is not None:
        kwargs["repair_budget"] = max_repairs
    try:
        config = PipelineConfig.from_env(**kwargs)
        with workspace_lock(ws):
            ws.ensure_layout()
            if not ws.context_path.is_file():
                raise MissingContext(
                    f"{ws.context_path} not found; run `propforge context build` first"
                )
            store = load_store(ws.context_path)
            inputs = list(descriptions) or ws.description_paths()
            if not inputs:
                raise WorkspaceError(
                    f"no description files given and none under {ws.descriptions_dir}"
                )
            provider = None if use_baseline else _provider_for(ws)
            entries = []
            for path in inputs:
                entries.append(
                    _synthesize_one(ws, store, provider, path, config, use_baseline)
                )
            log = {
                "mode": "baseline" if use_baseline else "provider",
                "entries": entries,
            }
            atomic_write_json(ws.reports_dir / "synthesis_log.json", log)
    except USAGE_ERRORS as exc:
        raise _fail(str(exc))
    failed = [e for e in entries if e["status"] != "ok"]
    lines = []
    for e in entries:
        if e["status"] == "ok":
            retries = f" (retries {e['retries_used']})" if not use_baseline else ""
            lines.append(f"{e['name']}: ok{retries} -> {e['output']}")
        else:
            lines.append(f"{e['name']}: FAILED ({e['error']})")
    _emit(log, as_json, "\n".join(lines))
    if failed:
        raise click.exceptions.Exit(1)


def _synthesize_one(ws, store, provider, path, config, use_baseline) -> dict:
    name = path.stem
    entry = {"name": name, "source": str(path), "status": "ok"}
    try:
        description = load_description(path)
        if use_baseline:
            ast = baseline_synthesize(description, store)
            warnings = []
        else:
            result = synthesize(
                description,
                store,
                provider,
                context_budget=config.context_budget,
                max_repairs=config.repair_budget,
            )
            ast = result.ast
            warnings = list(result.warnings)
            entry["retries_used"] = result.retries_used
        out = ws.properties_dir / f"{name}.prop"
        atomic_write_text(out, print_property(ast))
        entry["output"] = str(out)
        entry["warnings"] = warnings
    except (SynthesisError, BaselineError, ParseError, ProviderError) as exc:
        entry["status"] = "error"
        entry["error"] = str(exc)
    return entry


# --- check --------------------------------------------------------------------


@main.command()
@workspace_option
@json_option
@click.option(
    "--ground-truth",
    "ground_truth_dir",
    type=click.Path(exists=True, file_okay=False, path_type=Path),
    required=True,
    help="Directory of hand-written reference .prop files.",
)
def check(workspace_root: Path, as_json: bool, ground_truth_dir: Path):
    """Judge generated properties against ground truths on the model pair."""
    ws = Workspace.at(workspace_root)
    try:
        with workspace_lock(ws):
            ws.ensure_layout()
            generated = {p.stem: p for p in ws.property_paths()}
            truths = {p.stem: p for p in sorted(ground_truth_dir.glob("*.prop"))}
            if not generated or not truths:
                raise NameMismatch("no properties to check")
            if set(generated) != set(truths):
                only_gen = sorted(set(generated) - set(truths))
                only_gt = sorted(set(truths) - set(generated))
                raise NameMismatch(
                    f"property sets differ (only generated: {only_gen}, "
                    f"only ground truth: {only_gt})"
                )
            pair = load_model_pair(ws.models_dir)
            store = _load_store_or_none(ws)
            results = []
            for stem in sorted(generated):
                gen_ast = parse_property(generated[stem].read_text(encoding="utf-8"))
                gt_ast = parse_property(truths[stem].read_text(encoding="utf-8"))
                report = judge(pair, gen_ast, gt_ast, store=store)
                results.append(_report_payload(stem, pair, gen_ast, report))
            correct = sum(1 for r in results if r["correct"])
            payload = {
                "accuracy": {"correct": correct, "total": len(results)},
                "properties": results,
            }
            atomic_write_json(ws.reports_dir / "report.json", payload)
            atomic_write_text(ws.reports_dir / "report.md", _report_markdown(payload))
    except USAGE_ERRORS as exc:
        raise _fail(str(exc))
    lines = [
        f"{r['name']}: {'correct' if r['correct'] else 'INCORRECT (' + str(r['symptom']) + ')'}"
        for r in results
    ]
    lines.append(f"accuracy: {correct}/{len(results)}")
    _emit(payload, as_json, "\n".join(lines))
    if correct != len(results):
        raise click.exceptions.Exit(1)


def _report_payload(stem, pair, gen_ast, report) -> dict:
    verdicts = {}
    for label, model in (("correct_model", pair.correct), ("buggy_model", pair.buggy)):
        verdict, _ = execute_property(model, gen_ast)
        verdicts[label] = verdict.status
    diff = report.diff
    return {
        "name": stem,
        "correct": report.correct,
        "behavioral_ok": report.behavioral_ok,
        "verdicts": verdicts,
        "symptom": report.symptom,
        "diff": {
            "missing_pre_clauses": list(diff.missing_pre_clauses),
            "extra_pre_clauses": list(diff.extra_pre_clauses),
            "missing_post_clauses": list(diff.missing_post_clauses),
            "extra_post_clauses": list(diff.extra_post_clauses),
            "events": [
                {"status": e.status, "generated": e.gen_text, "reference": e.gt_text}
                for e in diff.event_diff
            ],
            "branches": diff.branch_diff,
        },
    }


def _report_markdown(payload: dict) -> str:
    acc = payload["accuracy"]
    lines = [
        "# Property check report",
        "",
        f"Accuracy: {acc['correct']}/{acc['total']}",
        "",
        "| property | correct | symptom | correct model | buggy model |",
        "| --- | --- | --- | --- | --- |",
    ]
    for r in payload["properties"]:
        lines.append(
            "| {name} | {ok} | {symptom} | {cv} | {bv} |".format(
                name=r["name"],
                ok="yes" if r["correct"] else "no",
                symptom=r["symptom"] or "-",
                cv=r["verdicts"]["correct_model"],
                bv=r["verdicts"]["buggy_model"],
            )
        )
    return "\n".join(lines) + "\n"


# --- paraphrase -----------------------------------------------------------------


@main.command()
@workspace_option
@json_option
@click.argument("description_file", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("-k", "select_k", type=int, default=10, show_default=True,
              help="Sentences to keep after diverse selection.")
@click.option("--pool-size", type=int, default=20, show_default=True,
              help="Paraphrases to request in total.")
@click.option("--per-call", type=int, default=10, show_default=True,
              help="Paraphrases requested per provider call.")
@click.option("--pool", "pool_file", type=click.Path(exists=True, dir_okay=False, path_type=Path),
              default=None, help="Reuse an existing paraphrases.json; skip generation.")
def paraphrase(
    workspace_root: Path,
    as_json: bool,
    description_file: Path,
    select_k: int,
    pool_size: int,
    per_call: int,
    pool_file: Optional[Path],
):
    """Build a paraphrase pool and pick the k most diverse sentences."""
    ws = Workspace.at(workspace_root)
    try:
        with workspace_lock(ws):
            ws.ensure_layout()
            description = load_description(description_file)
            original = description_text(description)
            warnings: list[str] = []
            if pool_file is not None:
                loaded = json.loads(pool_file.read_text(encoding="utf-8"))
                candidates = [dict(c) for c in loaded["candidates"]]
            else:
                provider = _provider_for(ws)
                result = generate_paraphrases(
                    provider, original, pool_size=pool_size, per_call=per_call
                )
                warnings = list(result.warnings)
                candidates = [
                    {"text": text, "call": call, "item": item}
                    for text, (call, item) in zip(result.items, result.provenance)
                ]
            texts = [c["text"] for c in candidates]
            if select_k > len(texts):
                raise PoolTooSmall(
                    f"asked for {select_k} sentences but the pool holds {len(texts)}"
                )
            selection = select_diverse(texts, select_k)
            selected = [texts[i] for i in selection.indices]
            pool_payload = {"original": original, "candidates": candidates}
            selection_payload = {
                "k": select_k,
                "selected": selected,
                "objective": self_bleu(selected),
                "steps": [
                    {"pool_index": s.added, "text": texts[s.added], "self_bleu": s.self_bleu}
                    for s in selection.steps
                ],
            }
            atomic_write_json(ws.reports_dir / "paraphrases.json", pool_payload)
            atomic_write_json(ws.reports_dir / "selection.json", selection_payload)
    except USAGE_ERRORS + (RobustnessError, SynthesisError) as exc:
        raise _fail(str(exc))
    human = [f"pool: {len(texts)} candidates"]
    human.extend(f"warning: {w}" for w in warnings)
    human.append(f"selected {len(selected)} (self-BLEU {selection_payload['objective']:.4f}):")
    human.extend(f"  {i + 1}. {text}" for i, text in enumerate(selected))
    _emit(
        {"pool": pool_payload, "selection": selection_payload, "warnings": warnings},
        as_json,
        "\n".join(human),
    )


# --- complexity -----------------------------------------------------------------


@main.command()
@json_option
@click.argument("inputs", nargs=-1, required=True,
                type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--format", "fmt", type=click.Choice(["tsv", "markdown"]),
              default="tsv", show_default=True)
def complexity(as_json: bool, inputs: tuple[Path, ...], fmt: str):
    """Complexity table over .prop files and .txt descriptions.

    Property files report clause/operator/event/char counts; plain-text
    descriptions have no DSL structure, so their structural counts are zero
    and chars measure the text itself.
    """
    rows: list[MetricsRow] = []
    prop_items = []
    try:
        for path in inputs:
            text = path.read_text(encoding="utf-8")
            if path.suffix == ".prop":
                prop_items.append((path.stem, parse_property(text)))
            else:
                rows.append(MetricsRow(path.stem, 0, 0, 0, char_complexity(text.strip())))
    except ParseError as exc:
        raise _fail(str(exc))
    rows = metrics_rows(prop_items) + rows
    rows.sort(key=lambda r: r.name)
    if as_json:
        payload = [
            {
                "name": r.name,
                "clauses": r.clause_count,
                "operators": r.operator_count,
                "events": r.event_count,
                "chars": r.char_count,
            }
            for r in rows
        ]
        click.echo(json.dumps(payload, indent=2))
        return
    render = render_metrics_tsv if fmt == "tsv" else render_metrics_markdown
    click.echo(render(rows), nl=False)


# --- simulate -------------------------------------------------------------------


@main.command()
@json_option
@click.argument("property_file", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--model", "model_file", required=True,
              type=click.Path(exists=True, dir_okay=False, path_type=Path),
              help="App model JSON to run against.")
def simulate(as_json: bool, property_file: Path, model_file: Path):
    """Execute one property against one app model and report the verdict."""
    try:
        ast = parse_property(property_file.read_text(encoding="utf-8"))
        model = load_app_model(model_file)
        problems = [d for d in validate(ast) if d.severity == "error"]
        if problems:
            raise _fail("; ".join(d.message for d in problems))
        verdict, trace = execute_property(model, ast)
    except (ParseError, ModelError) as exc:
        raise _fail(str(exc))
    payload = {
        "status": verdict.status,
        "message": verdict.message,
        "events": [
            {
                "action": e.action,
                "widget": e.widget,
                "from": e.screen_before,
                "to": e.screen_after,
            }
            for e in trace.events
        ],
        "assertions": list(trace.assertion_results),
    }
    human = [f"{verdict.status}: {verdict.message}" if verdict.message else verdict.status]
    human.extend(
        f"  {e.action} {e.widget or '-'} [{e.screen_before} -> {e.screen_after}]"
        for e in trace.events
    )
    _emit(payload, as_json, "\n".join(human))
    if verdict.status != PASSED:
        raise click.exceptions.Exit(1)


if __name__ == "__main__":
    main()
