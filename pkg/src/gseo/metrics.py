"""Pure, deterministic aggregation of per-article, per-query dimension
scores: pooled mean, threshold success rate, and intra-article variance."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from gseo.judge import DIMENSION_KEYS, EvaluationRecord


@dataclass(frozen=True)
class ScoreTable:
    """``scores[dim][article_id]`` is the ordered list of ratings that
    article earned on that dimension, one per query."""

    scores: Mapping[str, Mapping[str, tuple[float, ...]]]

    def __post_init__(self) -> None:
        for dim, articles in self.scores.items():
            if dim not in DIMENSION_KEYS:
                raise ValueError(f"unknown dimension {dim!r}")
            for article_id, ratings in articles.items():
                if not ratings:
                    raise ValueError(f"article {article_id!r} has no ratings for {dim}")
                for r in ratings:
                    if not 0.0 <= r <= 10.0:
                        raise ValueError(f"rating {r} outside [0, 10]")

    def articles(self, dim: str) -> Mapping[str, tuple[float, ...]]:
        articles = self.scores.get(dim)
        if not articles:
            raise ValueError(f"score table has no entries for dimension {dim!r}")
        return articles


def score_table_from_records(
    article_id: str, records: Iterable[EvaluationRecord]
) -> ScoreTable:
    """Single-article table from one evaluation's records, in record order."""
    per_dim: dict[str, list[float]] = {}
    for record in records:
        per_dim.setdefault(record.dimension, []).append(record.rating)
    return ScoreTable(
        scores={dim: {article_id: tuple(ratings)} for dim, ratings in per_dim.items()}
    )


def merge_score_tables(tables: Sequence[ScoreTable]) -> ScoreTable:
    """Union of tables; articles must not repeat within a dimension."""
    merged: dict[str, dict[str, tuple[float, ...]]] = {}
    for table in tables:
        for dim, articles in table.scores.items():
            bucket = merged.setdefault(dim, {})
            for article_id, ratings in articles.items():
                if article_id in bucket:
                    raise ValueError(f"duplicate article {article_id!r} for dimension {dim}")
                bucket[article_id] = ratings
    return ScoreTable(scores=merged)


def mean_influence_score(table: ScoreTable, dim: str) -> float:
    """Grand mean over all scores for the dimension, pooled across articles
    (every query weighs the same regardless of its article)."""
    articles = table.articles(dim)
    total = sum(sum(ratings) for ratings in articles.values())
    count = sum(len(ratings) for ratings in articles.values())
    return total / count


def influence_success_rate(table: ScoreTable, dim: str, tau: float) -> dict:
    """Per-article fraction of scores at or above ``tau`` (the indicator is
    inclusive), and the overall rate as the unweighted mean across articles."""
    if not 0.0 <= tau <= 10.0:
        raise ValueError(f"tau must lie in [0, 10], got {tau}")
    articles = table.articles(dim)
    per_article = {
        article_id: sum(1 for r in ratings if r >= tau) / len(ratings)
        for article_id, ratings in articles.items()
    }
    overall = sum(per_article.values()) / len(per_article)
    return {"per_article": per_article, "overall": overall}


def _population_variance(ratings: Sequence[float]) -> float:
    mu = sum(ratings) / len(ratings)
    return sum((r - mu) ** 2 for r in ratings) / len(ratings)


def mean_intra_article_variance(table: ScoreTable, dim: str) -> float:
    """Population variance of each article's scores (divide by the article's
    query count), averaged unweighted over articles."""
    articles = table.articles(dim)
    variances = [_population_variance(ratings) for ratings in articles.values()]
    return sum(variances) / len(variances)


@dataclass(frozen=True)
class DimensionAggregate:
    mis: float
    isr_overall: float
    per_article_isr: Mapping[str, float]
    miv: float
    per_article_mean: Mapping[str, float]
    per_article_variance: Mapping[str, float]


@dataclass(frozen=True)
class AggregateReport:
    tau: float
    dimensions: Mapping[str, DimensionAggregate]

    def to_json_dict(self) -> dict:
        return {
            "tau": self.tau,
            "dimensions": {
                dim: {
                    "mis": agg.mis,
                    "isr_overall": agg.isr_overall,
                    "per_article_isr": dict(agg.per_article_isr),
                    "miv": agg.miv,
                    "per_article_mean": dict(agg.per_article_mean),
                    "per_article_variance": dict(agg.per_article_variance),
                }
                for dim, agg in self.dimensions.items()
            },
        }


def aggregate(table: ScoreTable, tau: float) -> AggregateReport:
    """All three metrics for every dimension present in the table."""
    dimensions: dict[str, DimensionAggregate] = {}
    for dim in DIMENSION_KEYS:
        if dim not in table.scores or not table.scores[dim]:
            continue
        articles = table.articles(dim)
        isr = influence_success_rate(table, dim, tau)
        dimensions[dim] = DimensionAggregate(
            mis=mean_influence_score(table, dim),
            isr_overall=isr["overall"],
            per_article_isr=isr["per_article"],
            miv=mean_intra_article_variance(table, dim),
            per_article_mean={
                a: sum(r) / len(r) for a, r in articles.items()
            },
            per_article_variance={
                a: _population_variance(r) for a, r in articles.items()
            },
        )
    if not dimensions:
        raise ValueError("score table is empty")
    return AggregateReport(tau=tau, dimensions=dimensions)


def render_report_table(rows: Mapping[str, AggregateReport]) -> str:
    """Aligned text table, one row per labeled report, with MIS/ISR/MIV
    columns under each of the six dimensions."""
    label_width = max([len("Method")] + [len(label) for label in rows])
    header_1 = " " * label_width
    header_2 = "Method".ljust(label_width)
    for dim in DIMENSION_KEYS:
        header_1 += "  " + dim.center(20)
        header_2 += "  " + "MIS".rjust(6) + "ISR".rjust(7) + "MIV".rjust(7)
    lines = [header_1.rstrip(), header_2]
    for label, report in rows.items():
        line = label.ljust(label_width)
        for dim in DIMENSION_KEYS:
            agg = report.dimensions.get(dim)
            if agg is None:
                line += "  " + "-".rjust(6) + "-".rjust(7) + "-".rjust(7)
            else:
                line += (
                    f"  {agg.mis:6.2f}{agg.isr_overall:7.2f}{agg.miv:7.2f}"
                )
        lines.append(line)
    return "\n".join(lines)
