"""Run-directory persistence. Every JSON artifact is UTF-8, schema-versioned
('gseo/v1'), and serialized deterministically so identical runs produce
byte-identical files."""

from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Sequence

from gseo.config import RunConfig, to_toml
from gseo.corpus import BenchmarkCorpus, CorpusPair, Document, Query
from gseo.errors import GseoError
from gseo.judge import EvaluationRecord, PerformanceVector
from gseo.providers.base import SearchResult
from gseo.refine import Suggestion, Trajectory, TrajectoryEntry, ValidationOutcome
from gseo.select import Selection

logger = logging.getLogger(__name__)

SCHEMA = "gseo/v1"

CONFIG_SNAPSHOT = "config.toml"
CORPUS_FILE = "corpus.json"
SELECTION_FILE = "selection.json"
REPORT_FILE = "report.json"


def write_json(path: Path, payload: dict) -> None:
    payload = {"schema": SCHEMA, **payload}
    path.parent.mkdir(parents=True, exist_ok=True)
    text = json.dumps(payload, indent=2, sort_keys=True, ensure_ascii=False) + "\n"
    path.write_text(text, encoding="utf-8")


def read_json(path: Path) -> dict:
    if not path.is_file():
        raise GseoError(f"missing artifact: {path}")
    payload = json.loads(path.read_text(encoding="utf-8"))
    if payload.get("schema") != SCHEMA:
        raise GseoError(f"{path} has schema {payload.get('schema')!r}, expected {SCHEMA!r}")
    return payload


def init_run_dir(run_dir: Path, config: RunConfig) -> None:
    """Create the run directory and snapshot the config. The snapshot must
    land before any provider call is made."""
    run_dir.mkdir(parents=True, exist_ok=True)
    snapshot = run_dir / CONFIG_SNAPSHOT
    if not snapshot.exists():
        snapshot.write_text(to_toml(config), encoding="utf-8")


# ---------------------------------------------------------------------------
# corpus.json


def _doc_to_dict(doc: Document) -> dict:
    return {
        "doc_id": doc.doc_id,
        "title": doc.title,
        "body": doc.body,
        "version": doc.version,
        "provenance": doc.provenance,
        "url": doc.url,
    }


def _doc_from_dict(data: dict) -> Document:
    return Document(
        doc_id=data["doc_id"],
        title=data["title"],
        body=data["body"],
        version=data["version"],
        provenance=data["provenance"],
        url=data.get("url"),
    )


def write_corpus(run_dir: Path, corpus: BenchmarkCorpus) -> None:
    pairs = []
    for pair in corpus.pairs:
        pairs.append(
            {
                "query": {
                    "query_id": pair.query.query_id,
                    "text": pair.query.text,
                    "origin": pair.query.origin,
                },
                "tags": dict(pair.query.tags) if pair.query.tags else None,
                "contexts": [
                    {
                        "url": c.url,
                        "title": c.title,
                        "content": c.content,
                        "score": c.score,
                        "rank": c.rank,
                    }
                    for c in pair.contexts
                ],
                "retrieval_error": pair.retrieval_error,
            }
        )
    write_json(run_dir / CORPUS_FILE, {"source_doc": _doc_to_dict(corpus.source), "pairs": pairs})


def load_corpus(run_dir: Path) -> BenchmarkCorpus:
    data = read_json(run_dir / CORPUS_FILE)
    pairs = []
    for row in data["pairs"]:
        query = Query(
            query_id=row["query"]["query_id"],
            text=row["query"]["text"],
            origin=row["query"]["origin"],
            tags=row.get("tags") or None,
        )
        contexts = tuple(
            SearchResult(
                url=c["url"],
                title=c["title"],
                content=c["content"],
                score=c["score"],
                rank=c["rank"],
            )
            for c in row["contexts"]
        )
        pairs.append(
            CorpusPair(query=query, contexts=contexts, retrieval_error=row.get("retrieval_error"))
        )
    return BenchmarkCorpus(source=_doc_from_dict(data["source_doc"]), pairs=tuple(pairs))


# ---------------------------------------------------------------------------
# eval/<t>.json


def eval_path(run_dir: Path, version: int) -> Path:
    return run_dir / "eval" / f"{version}.json"


def write_eval(run_dir: Path, version: int, vector: PerformanceVector,
               records: Sequence[EvaluationRecord]) -> None:
    write_json(
        eval_path(run_dir, version),
        {
            "version": version,
            "vector": dict(vector.means),
            "records": [
                {
                    "query_id": r.query_id,
                    "dim": r.dimension,
                    "rating": r.rating,
                    "justification": r.justification,
                    "answer_text": r.answer_text,
                    "insertion_position": r.insertion_position,
                }
                for r in records
            ],
        },
    )


def load_eval(run_dir: Path, version: int) -> tuple[PerformanceVector, tuple[EvaluationRecord, ...]]:
    data = read_json(eval_path(run_dir, version))
    vector = PerformanceVector(version=data["version"], means=data["vector"])
    records = tuple(
        EvaluationRecord(
            version=data["version"],
            query_id=r["query_id"],
            dimension=r["dim"],
            rating=r["rating"],
            justification=r["justification"],
            answer_text=r["answer_text"],
            insertion_position=r["insertion_position"],
        )
        for r in data["records"]
    )
    return vector, records


def list_eval_versions(run_dir: Path) -> list[int]:
    eval_dir = run_dir / "eval"
    if not eval_dir.is_dir():
        return []
    return sorted(int(p.stem) for p in eval_dir.glob("*.json") if p.stem.isdigit())


# ---------------------------------------------------------------------------
# trajectory/<t>/...


def _entry_dir(run_dir: Path, version: int) -> Path:
    return run_dir / "trajectory" / str(version)


def persist_trajectory_entry(
    run_dir: Path, entry: TrajectoryEntry, records: Sequence[EvaluationRecord]
) -> None:
    entry_dir = _entry_dir(run_dir, entry.version)
    entry_dir.mkdir(parents=True, exist_ok=True)
    (entry_dir / "document.txt").write_text(entry.document.body, encoding="utf-8")
    write_json(
        entry_dir / "vector.json",
        {"version": entry.version, "vector": dict(entry.vector.means)},
    )
    write_eval(run_dir, entry.version, entry.vector, records)


def persist_suggestions(
    run_dir: Path,
    version: int,
    suggestions: Sequence[Suggestion],
    applied: Suggestion | None,
    validations: Sequence[tuple[Suggestion, ValidationOutcome]],
) -> None:
    write_json(
        _entry_dir(run_dir, version) / "suggestions.json",
        {
            "version": version,
            "suggestions": [
                {
                    "suggestion_id": s.suggestion_id,
                    "dimensions": list(s.dimensions),
                    "description": s.description,
                    "priority": s.priority,
                }
                for s in suggestions
            ],
            "applied_suggestion_id": applied.suggestion_id if applied else None,
            "validation": [
                {"suggestion_id": s.suggestion_id, "passed": o.passed, "reason": o.reason}
                for s, o in validations
            ],
        },
    )


def persist_termination(run_dir: Path, trajectory: Trajectory) -> None:
    write_json(
        run_dir / "trajectory" / "termination.json",
        {"termination_reason": trajectory.termination_reason, "entries": len(trajectory.entries)},
    )


def load_termination(run_dir: Path) -> dict | None:
    path = run_dir / "trajectory" / "termination.json"
    return read_json(path) if path.is_file() else None


def _load_suggestion_file(run_dir: Path, version: int) -> tuple[tuple[Suggestion, ...], Suggestion | None, ValidationOutcome | None]:
    path = _entry_dir(run_dir, version) / "suggestions.json"
    if not path.is_file():
        return (), None, None
    data = read_json(path)
    suggestions = tuple(
        Suggestion(
            suggestion_id=s["suggestion_id"],
            dimensions=tuple(s["dimensions"]),
            description=s["description"],
            priority=s["priority"],
        )
        for s in data["suggestions"]
    )
    applied = next(
        (s for s in suggestions if s.suggestion_id == data.get("applied_suggestion_id")), None
    )
    outcome = None
    if applied is not None:
        row = next(
            (v for v in data["validation"] if v["suggestion_id"] == applied.suggestion_id), None
        )
        if row is not None:
            outcome = ValidationOutcome(passed=row["passed"], reason=row["reason"])
    return suggestions, applied, outcome


def load_document_version(run_dir: Path, corpus: BenchmarkCorpus, version: int) -> Document:
    """Version 0 is the corpus source; later versions come from the
    persisted trajectory bodies."""
    if version == 0:
        return corpus.source
    body_path = _entry_dir(run_dir, version) / "document.txt"
    if not body_path.is_file():
        raise GseoError(f"no persisted document for version {version}")
    return Document(
        doc_id=corpus.source.doc_id,
        title=corpus.source.title,
        body=body_path.read_text(encoding="utf-8"),
        version=version,
        provenance=f"maco:{version}",
        url=corpus.source.url,
    )


def load_partial_trajectory(
    run_dir: Path, corpus: BenchmarkCorpus
) -> tuple[list[TrajectoryEntry], tuple[EvaluationRecord, ...]]:
    """Rebuild the contiguous prefix of complete entries (document, vector,
    and eval records all present). Anything after the last complete entry is
    a partial iteration and gets redone by the resumed loop."""
    entries: list[TrajectoryEntry] = []
    latest_records: tuple[EvaluationRecord, ...] = ()
    version = 0
    while True:
        entry_dir = _entry_dir(run_dir, version)
        if not (
            (entry_dir / "document.txt").is_file()
            and (entry_dir / "vector.json").is_file()
            and eval_path(run_dir, version).is_file()
        ):
            break
        document = load_document_version(run_dir, corpus, version)
        vector, records = load_eval(run_dir, version)
        suggestions, _, _ = _load_suggestion_file(run_dir, version)
        applied, outcome = None, None
        if version > 0:
            _, applied, outcome = _load_suggestion_file(run_dir, version - 1)
        entries.append(
            TrajectoryEntry(
                version=version,
                document=document,
                vector=vector,
                suggestions=suggestions,
                applied_suggestion=applied,
                validation=outcome,
            )
        )
        latest_records = records
        version += 1
    return entries, latest_records


# ---------------------------------------------------------------------------
# selection.json / final document


def write_selection(run_dir: Path, selection: Selection) -> None:
    write_json(
        run_dir / SELECTION_FILE,
        {
            "index": selection.index,
            "policy": selection.policy,
            "justification": selection.justification,
        },
    )


def load_selection(run_dir: Path) -> Selection | None:
    path = run_dir / SELECTION_FILE
    if not path.is_file():
        return None
    data = read_json(path)
    return Selection(
        index=data["index"], justification=data["justification"], policy=data["policy"]
    )


def write_final_document(run_dir: Path, doc: Document) -> None:
    final_dir = run_dir / "final"
    final_dir.mkdir(parents=True, exist_ok=True)
    (final_dir / "document.txt").write_text(doc.body, encoding="utf-8")
