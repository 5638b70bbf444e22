"""Operator-facing command surface.

Exit codes: 0 success, 1 domain error, 2 usage error. Commands are
idempotent over an existing run directory unless --force is passed, and the
config snapshot is always written before the first provider call.
"""

from __future__ import annotations

import functools
import logging
import shutil
import sys
from pathlib import Path

import click

from gseo import __version__
from gseo.baselines import STRATEGIES, apply_pipeline, apply_strategy, get_strategy, pipeline_label
from gseo.config import load_config
from gseo.corpus import Document, build_corpus
from gseo.errors import GseoError
from gseo.judge import evaluate_document
from gseo.metrics import AggregateReport, aggregate, render_report_table, score_table_from_records
from gseo.providers import build_providers
from gseo.refine import run_refinement_loop
from gseo.select import final_version_selection, select_best_version
from gseo import rundir

logger = logging.getLogger(__name__)


def _domain_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except GseoError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(1)

    return wrapper


class _RunLog:
    """Attach a file handler under the run directory for one command."""

    def __init__(self, run_dir: Path) -> None:
        self._handler = logging.FileHandler(run_dir / "run.log", encoding="utf-8")
        self._handler.setFormatter(
            logging.Formatter("%(asctime)s %(levelname)s %(name)s: %(message)s")
        )
        self._root = logging.getLogger("gseo")
        self._root.setLevel(logging.INFO)

    def __enter__(self):
        self._root.addHandler(self._handler)
        return self

    def __exit__(self, *exc_info):
        self._root.removeHandler(self._handler)
        self._handler.close()
        return False


def _print_vector(vector) -> None:
    parts = " ".join(f"{key}={value:.2f}" for key, value in vector.ordered())
    click.echo(f"S_{vector.version}: {parts} (mean {vector.mean():.2f})")


@click.group()
@click.version_option(__version__)
def main() -> None:
    """Measure and optimize an article's influence on generated search answers."""


@main.group()
def corpus() -> None:
    """Benchmark corpus commands."""


@corpus.command("build")
@click.argument("doc_path", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--run-dir", required=True, type=click.Path(file_okay=False, path_type=Path))
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--title", default=None, help="Document title (default: first line of the file).")
@click.option("--doc-id", default=None, help="Stable document id (default: file stem).")
@click.option("--url", default=None, help="Canonical URL identity of the document.")
@click.option("--force", is_flag=True, help="Rebuild even if corpus.json exists.")
@_domain_errors
def corpus_build(
    doc_path: Path,
    run_dir: Path,
    config_path: Path | None,
    title: str | None,
    doc_id: str | None,
    url: str | None,
    force: bool,
) -> None:
    """Synthesize, refine, and ground the query set for DOC_PATH."""
    config = load_config(config_path)
    rundir.init_run_dir(run_dir, config)
    target = run_dir / rundir.CORPUS_FILE
    if target.is_file() and not force:
        click.echo(f"{target} already exists; nothing to do (use --force to rebuild)")
        return
    body = doc_path.read_text(encoding="utf-8")
    if not body.strip():
        raise click.UsageError(f"document file {doc_path} is empty")
    first_line = next((line.strip() for line in body.splitlines() if line.strip()), "")
    doc = Document(
        doc_id=doc_id or doc_path.stem,
        title=title or first_line[:80],
        body=body,
        url=url,
    )
    with _RunLog(run_dir):
        providers = build_providers(config)
        benchmark = build_corpus(doc, providers.chat, providers.search, config)
        rundir.write_corpus(run_dir, benchmark)
    click.echo(f"corpus written: {len(benchmark.pairs)} query-context pairs -> {target}")


@main.command()
@click.argument("run_dir", type=click.Path(exists=True, file_okay=False, path_type=Path))
@click.option("--doc-version", default=0, show_default=True, type=click.IntRange(min=0),
              help="Document version to evaluate.")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--force", is_flag=True, help="Re-evaluate even if the eval file exists.")
@_domain_errors
def evaluate(run_dir: Path, doc_version: int, config_path: Path | None, force: bool) -> None:
    """Score one document version against the stored corpus."""
    config = load_config(config_path)
    rundir.init_run_dir(run_dir, config)
    benchmark = rundir.load_corpus(run_dir)
    if rundir.eval_path(run_dir, doc_version).is_file() and not force:
        vector, _ = rundir.load_eval(run_dir, doc_version)
        click.echo(f"eval/{doc_version}.json already exists; nothing to do (use --force)")
        _print_vector(vector)
        return
    doc = rundir.load_document_version(run_dir, benchmark, doc_version)
    with _RunLog(run_dir):
        providers = build_providers(config)
        result = evaluate_document(doc, benchmark, providers, config)
        rundir.write_eval(run_dir, doc_version, result.vector, result.records)
    _print_vector(result.vector)


@main.command()
@click.argument("run_dir", type=click.Path(exists=True, file_okay=False, path_type=Path))
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--no-selector", is_flag=True, help="Skip holistic selection; keep the final iteration.")
@click.option("--resume", is_flag=True, help="Continue from the last complete trajectory entry.")
@click.option("--force", is_flag=True, help="Discard any previous optimization artifacts first.")
@_domain_errors
def optimize(
    run_dir: Path, config_path: Path | None, no_selector: bool, resume: bool, force: bool
) -> None:
    """Run the full refinement loop and select the best version."""
    config = load_config(config_path)
    rundir.init_run_dir(run_dir, config)
    benchmark = rundir.load_corpus(run_dir)

    if force:
        for sub in ("trajectory", "eval", "final"):
            shutil.rmtree(run_dir / sub, ignore_errors=True)
        (run_dir / rundir.SELECTION_FILE).unlink(missing_ok=True)
    done = rundir.load_termination(run_dir) is not None and (
        run_dir / rundir.SELECTION_FILE
    ).is_file()
    if done and not force:
        click.echo("optimization already complete; nothing to do (use --force to redo)")
        return
    if (run_dir / "trajectory").is_dir() and not resume and not force:
        raise GseoError(
            "run directory holds a partial optimization; pass --resume to continue or --force to restart"
        )

    with _RunLog(run_dir):
        providers = build_providers(config)
        trajectory = run_refinement_loop(
            benchmark.source, benchmark, providers, config, run_dir=run_dir, resume=resume
        )
        if no_selector:
            selection = final_version_selection(trajectory)
        else:
            selection = select_best_version(trajectory, providers.chat, config)
        rundir.write_selection(run_dir, selection)
        chosen = trajectory.entries[selection.index].document
        rundir.write_final_document(run_dir, chosen)
    click.echo(
        f"optimized over {len(trajectory.entries)} versions "
        f"(terminated: {trajectory.termination_reason}); "
        f"selected version {selection.index} via {selection.policy}"
    )
    _print_vector(trajectory.entries[selection.index].vector)


@main.command()
@click.argument("run_dir", type=click.Path(exists=True, file_okay=False, path_type=Path))
@click.option("--strategy", "strategy_name", default=None, help="Single strategy key.")
@click.option("--pipeline", "pipeline_spec", default=None, help="Comma-separated strategy chain.")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--force", is_flag=True, help="Redo even if this baseline already ran.")
@_domain_errors
def baseline(
    run_dir: Path,
    strategy_name: str | None,
    pipeline_spec: str | None,
    config_path: Path | None,
    force: bool,
) -> None:
    """Apply a single-shot rewrite strategy (or a chain) and evaluate it."""
    if bool(strategy_name) == bool(pipeline_spec):
        raise click.UsageError("pass exactly one of --strategy or --pipeline")
    try:
        if strategy_name:
            strategies = [get_strategy(strategy_name)]
        else:
            parts = [p for p in pipeline_spec.replace("+", ",").split(",") if p.strip()]
            strategies = [get_strategy(p.strip()) for p in parts]
    except KeyError:
        known = ", ".join(sorted(STRATEGIES))
        raise click.UsageError(f"unknown strategy; known strategies: {known}")

    config = load_config(config_path)
    rundir.init_run_dir(run_dir, config)
    benchmark = rundir.load_corpus(run_dir)
    label = pipeline_label(strategies)
    out_dir = run_dir / "baseline" / label.replace("+", "_")
    if out_dir.is_dir() and not force:
        click.echo(f"baseline {label} already ran; nothing to do (use --force)")
        return

    with _RunLog(run_dir):
        providers = build_providers(config)
        if len(strategies) == 1:
            doc = apply_strategy(benchmark.source, strategies[0], providers.chat, config)
        else:
            doc = apply_pipeline(benchmark.source, strategies, providers.chat, config)
        result = evaluate_document(doc, benchmark, providers, config)
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "document.txt").write_text(doc.body, encoding="utf-8")
        rundir.write_json(
            out_dir / "eval.json",
            {
                "version": doc.version,
                "vector": dict(result.vector.means),
                "records": [
                    {
                        "query_id": r.query_id,
                        "dim": r.dimension,
                        "rating": r.rating,
                        "justification": r.justification,
                        "answer_text": r.answer_text,
                        "insertion_position": r.insertion_position,
                    }
                    for r in result.records
                ],
            },
        )
        rundir.write_json(
            out_dir / "meta.json",
            {
                "label": label,
                "provenance": doc.provenance,
                "synthetic_content": any(s.synthetic_content for s in strategies),
            },
        )
    click.echo(f"baseline {label} written to {out_dir}")
    _print_vector(result.vector)


@main.command()
@click.argument("run_dirs", nargs=-1, required=True,
                type=click.Path(exists=True, file_okay=False, path_type=Path))
@click.option("--out", "out_path", default="report.json", show_default=True,
              type=click.Path(dir_okay=False, path_type=Path))
@click.option("--tau", default=None, type=click.FloatRange(0.0, 10.0),
              help="Success threshold (default from config).")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@_domain_errors
def report(
    run_dirs: tuple[Path, ...], out_path: Path, tau: float | None, config_path: Path | None
) -> None:
    """Aggregate one row per run directory (MIS/ISR/MIV for each dimension)."""
    config = load_config(config_path)
    threshold = config.tau if tau is None else tau
    rows: dict[str, AggregateReport] = {}
    for run in run_dirs:
        benchmark = rundir.load_corpus(run)
        version = _report_version(run)
        _, records = rundir.load_eval(run, version)
        if not records:
            raise GseoError(f"eval/{version}.json in {run} holds no records")
        table = score_table_from_records(benchmark.source.doc_id, records)
        rows[run.name] = aggregate(table, threshold)
    rundir.write_json(
        out_path, {"tau": threshold, "rows": {k: v.to_json_dict() for k, v in rows.items()}}
    )
    click.echo(render_report_table(rows))
    click.echo(f"report written to {out_path}")


def _report_version(run: Path) -> int:
    """The version a run is reported on: the selected one if a selection
    exists, otherwise the highest evaluated version."""
    selection = rundir.load_selection(run)
    if selection is not None:
        return selection.index
    versions = rundir.list_eval_versions(run)
    if not versions:
        raise GseoError(f"{run} holds no evaluation files")
    return versions[-1]


if __name__ == "__main__":
    main()
