"""trec_eval-compatible effectiveness measures.

Binary measures count a document as relevant when its grade reaches the
binarization threshold. NDCG uses the raw grade as gain with a
``1 / log2(rank + 1)`` discount and the judged documents' ideal ordering.
Documents missing from the judgments count as non-relevant (and are skipped
by bpref, as in trec_eval).
"""

from __future__ import annotations

import csv
import io
import logging
import math
import re
from dataclasses import dataclass
from typing import Mapping, Sequence

from scipy import stats

from .data import Qrels, RunFile

log = logging.getLogger(__name__)

CUTOFFS = (5, 10, 20)

METRICS: tuple[str, ...] = (
    *(f"P_{k}" for k in CUTOFFS),
    *(f"recall_{k}" for k in CUTOFFS),
    "map",
    *(f"map_cut_{k}" for k in CUTOFFS),
    "ndcg",
    *(f"ndcg_cut_{k}" for k in CUTOFFS),
    "recip_rank",
    "bpref",
    "Rprec",
)

# row order of the optimization-measure heatmaps
HEATMAP_METRICS: tuple[str, ...] = (
    "bpref",
    "map",
    "map_cut_5",
    "map_cut_10",
    "map_cut_20",
    "ndcg",
    "ndcg_cut_5",
    "ndcg_cut_10",
    "ndcg_cut_20",
    "P_5",
    "P_10",
    "P_20",
    "recall_5",
    "recall_10",
    "recall_20",
    "recip_rank",
)

_ALIASES = {"ap": "map", "mrr": "recip_rank", "rr": "recip_rank", "rprec": "Rprec", "r-prec": "Rprec"}
_CUT = re.compile(r"^(p|precision|recall|ap|map|ndcg)(?:[@_]|_at_|_cut_)(\d+)$")


def parse_metric(name: str) -> str:
    """Canonical metric name for ``name``; accepts e.g. ``NDCG@5``, ``ap_at_10``, ``MRR``."""
    if name in METRICS:
        return name
    key = name.strip().lower().replace("\\", "")
    if key in _ALIASES:
        return _ALIASES[key]
    if key in ("ndcg", "map", "bpref", "recip_rank"):
        return key
    m = _CUT.match(key)
    if m:
        base, k = m.group(1), m.group(2)
        base = {"p": "P", "precision": "P", "ap": "map_cut", "map": "map_cut", "ndcg": "ndcg_cut"}.get(base, base)
        candidate = f"{base}_{k}"
        if candidate in METRICS:
            return candidate
    raise ValueError(f"unknown metric {name!r}; valid: {', '.join(METRICS)}")


# ---------------------------------------------------------------- single-request measures


def _relevant(grade: int | None, threshold: int) -> bool:
    return grade is not None and grade >= threshold


def precision_at(ranked: Sequence[int | None], k: int, threshold: int) -> float:
    return sum(_relevant(g, threshold) for g in ranked[:k]) / k


def recall_at(ranked: Sequence[int | None], n_relevant: int, k: int, threshold: int) -> float:
    if n_relevant == 0:
        return 0.0
    return sum(_relevant(g, threshold) for g in ranked[:k]) / n_relevant


def average_precision(
    ranked: Sequence[int | None], n_relevant: int, threshold: int, k: int | None = None
) -> float:
    """Sum of precision at each relevant rank (up to ``k``) divided by all relevant."""
    if n_relevant == 0:
        return 0.0
    hits = 0
    total = 0.0
    for i, g in enumerate(ranked[:k] if k else ranked, 1):
        if _relevant(g, threshold):
            hits += 1
            total += hits / i
    return total / n_relevant


def reciprocal_rank(ranked: Sequence[int | None], threshold: int) -> float:
    for i, g in enumerate(ranked, 1):
        if _relevant(g, threshold):
            return 1.0 / i
    return 0.0


def r_precision(ranked: Sequence[int | None], n_relevant: int, threshold: int) -> float:
    if n_relevant == 0:
        return 0.0
    return sum(_relevant(g, threshold) for g in ranked[:n_relevant]) / n_relevant


def bpref(ranked: Sequence[int | None], n_relevant: int, n_nonrelevant: int, threshold: int) -> float:
    if n_relevant == 0:
        return 0.0
    nonrel_so_far = 0
    total = 0.0
    for g in ranked:
        if g is None:
            continue
        if g >= threshold:
            if nonrel_so_far > 0:
                total += 1.0 - min(nonrel_so_far, n_relevant) / min(n_relevant, n_nonrelevant)
            else:
                total += 1.0
        else:
            nonrel_so_far += 1
    return total / n_relevant


def _dcg(gains: Sequence[int], k: int | None) -> float:
    return sum(g / math.log2(i + 1) for i, g in enumerate(gains[:k] if k else gains, 1) if g > 0)


def ndcg(ranked: Sequence[int | None], judged: Sequence[int], k: int | None = None) -> float:
    ideal = _dcg(sorted(judged, reverse=True), k)
    if ideal == 0.0:
        return 0.0
    return _dcg([g or 0 for g in ranked], k) / ideal


def compute_metric(
    name: str, ranked: Sequence[int | None], judged: Sequence[int], threshold: int
) -> float:
    """Value of canonical metric ``name`` for one ranked list.

    ``ranked`` holds the grade of each retrieved document in rank order
    (``None`` for unjudged); ``judged`` holds every judged grade of the request.
    """
    n_rel = sum(g >= threshold for g in judged)
    if name == "map":
        return average_precision(ranked, n_rel, threshold)
    if name == "ndcg":
        return ndcg(ranked, judged)
    if name == "recip_rank":
        return reciprocal_rank(ranked, threshold)
    if name == "bpref":
        return bpref(ranked, n_rel, len(judged) - n_rel, threshold)
    if name == "Rprec":
        return r_precision(ranked, n_rel, threshold)
    base, _, k = name.rpartition("_")
    k = int(k)
    if base == "P":
        return precision_at(ranked, k, threshold)
    if base == "recall":
        return recall_at(ranked, n_rel, k, threshold)
    if base == "map_cut":
        return average_precision(ranked, n_rel, threshold, k)
    if base == "ndcg_cut":
        return ndcg(ranked, judged, k)
    raise ValueError(f"unknown metric {name!r}")


# ---------------------------------------------------------------- run-level evaluation


@dataclass(frozen=True)
class EvalReport:
    metrics: tuple[str, ...]
    per_request: Mapping[str, Mapping[str, float]]

    def __len__(self) -> int:
        return len(self.per_request)

    def values(self, metric: str) -> list[float]:
        metric = parse_metric(metric)
        return [row[metric] for row in self.per_request.values()]

    def means(self) -> dict[str, float]:
        return {m: mean_metric(self, m) for m in self.metrics}

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["request_id", *self.metrics])
        for rid, row in self.per_request.items():
            writer.writerow([rid, *(repr(row[m]) for m in self.metrics)])
        if self.per_request:
            writer.writerow(["all", *(repr(mean_metric(self, m)) for m in self.metrics)])
        return buf.getvalue()


def evaluate_run(
    run: RunFile,
    qrels: Qrels,
    binarization_threshold: int = 1,
    metrics: Sequence[str] = METRICS,
) -> EvalReport:
    """Evaluate every run request that has judgments; rows are ordered by their rank field."""
    if binarization_threshold < 1:
        raise ValueError("binarization_threshold must be >= 1")
    names = tuple(parse_metric(m) for m in metrics)
    per_request: dict[str, dict[str, float]] = {}
    for rid, rows in run.by_request().items():
        if rid not in qrels:
            log.warning("request %s has no judgments; skipped", rid)
            continue
        judgments = qrels.for_request(rid)
        ordered = sorted(rows, key=lambda r: r.rank)
        ranked = [judgments.get(r.poi_id) for r in ordered]
        judged = list(judgments.values())
        per_request[rid] = {
            m: compute_metric(m, ranked, judged, binarization_threshold) for m in names
        }
    return EvalReport(names, per_request)


def mean_metric(report: EvalReport, metric: str) -> float:
    if not report.per_request:
        raise ValueError("cannot average an empty report")
    values = report.values(metric)
    return sum(values) / len(values)


class DegenerateTestError(ValueError):
    """Paired differences have zero variance but are not all zero."""


def paired_t_test(a: Sequence[float], b: Sequence[float], confidence: float = 0.95) -> tuple[float, bool]:
    """Paired t statistic of ``a - b`` and whether it is significant (two-sided)."""
    if len(a) != len(b):
        raise ValueError("paired samples must have equal length")
    n = len(a)
    if n < 2:
        raise ValueError("need at least two pairs")
    diffs = [x - y for x, y in zip(a, b)]
    mean = sum(diffs) / n
    var = sum((d - mean) ** 2 for d in diffs) / (n - 1)
    if var == 0.0:
        if all(d == 0.0 for d in diffs):
            return 0.0, False
        raise DegenerateTestError("differences are constant and non-zero; t is not computable")
    t = mean / math.sqrt(var / n)
    critical = float(stats.t.ppf(1 - (1 - confidence) / 2, n - 1))
    return t, abs(t) > critical
