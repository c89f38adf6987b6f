"""Named method variants, parameter sweeps and vector export."""

from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from . import io as tio
from .data import Poi, Qrels, Request, RunFile, UserProfile, build_tag_sentences
from .embedding import DENSE, ONE_HOT, EmbeddingModel, TrainConfig, encode_one_hot, train_cbow
from .evaluation import EvalReport, evaluate_run, mean_metric, parse_metric
from .fixtures import Fixture
from .modeling import UNWEIGHTED, WEIGHTED, RocchioParams, build_user_model, poi_vector
from .optimizer import PER_USER, SAME_FOR_ALL, OptConfig, SearchResult, optimize
from .ranking import RankedList, emit_run, rank_candidates

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class VariantSpec:
    name: str
    weighting: str
    strategy: str
    representation: str

    @classmethod
    def from_name(cls, name: str) -> "VariantSpec":
        if name not in VARIANTS:
            raise ValueError(f"unknown variant {name!r}; choose from {', '.join(VARIANTS)}")
        return VARIANTS[name]


def _make_variants() -> dict[str, VariantSpec]:
    out = {}
    for representation, suffix in ((DENSE, ""), (ONE_HOT, "01")):
        for strategy, word in ((SAME_FOR_ALL, "Same"), (PER_USER, "Uniq")):
            for weighting, prefix in ((WEIGHTED, "WUP"), (UNWEIGHTED, "UnWUP")):
                name = f"{prefix}{word}{suffix}"
                out[name] = VariantSpec(name, weighting, strategy, representation)
    return out


VARIANTS: Mapping[str, VariantSpec] = _make_variants()
DENSE_VARIANTS = ("UnWUPSame", "WUPSame", "UnWUPUniq", "WUPUniq")


@dataclass(frozen=True)
class Dataset:
    pois: tuple[Poi, ...]
    profiles: tuple[UserProfile, ...]
    requests: tuple[Request, ...]
    qrels: Qrels | None = None

    @classmethod
    def from_fixture(cls, fx: Fixture) -> "Dataset":
        return cls(fx.pois, fx.profiles, fx.requests, fx.qrels)

    @classmethod
    def load(cls, directory) -> "Dataset":
        d = tio.read_dataset(directory)
        return cls(tuple(d["pois"]), tuple(d["profiles"]), tuple(d["requests"]), d["qrels"])

    def save(self, directory) -> Path:
        return tio.write_dataset(directory, self.pois, self.profiles, self.requests, self.qrels)

    def corpus_pois(self) -> list[Poi]:
        """Collection POIs followed by profile POIs that are not in the collection."""
        seen = {p.id for p in self.pois}
        out = list(self.pois)
        for profile in self.profiles:
            for e in profile.entries:
                if e.poi.id not in seen:
                    seen.add(e.poi.id)
                    out.append(e.poi)
        return out


@dataclass(frozen=True)
class VariantResult:
    spec: VariantSpec
    run: RunFile
    report: EvalReport | None
    search: SearchResult
    model: EmbeddingModel = field(repr=False)


def build_representation(
    representation: str, pois: Sequence[Poi], train_config: TrainConfig
) -> EmbeddingModel:
    if representation == ONE_HOT:
        return encode_one_hot(pois)
    sentences = build_tag_sentences(pois, train_config.permutations_per_poi, seed=train_config.seed)
    return train_cbow(sentences, train_config)


def rank_requests(
    model: EmbeddingModel,
    requests: Iterable[Request],
    weighting: str,
    params_for: Callable[[str], RocchioParams],
) -> list[RankedList]:
    """Rank each request's candidates with parameters looked up by user id."""
    ranked = []
    for req in requests:
        user = build_user_model(model, req.profile, weighting, params_for(req.profile.user_id))
        candidates = [poi_vector(model, p) for p in req.candidates]
        ranked.append(rank_candidates(user, candidates, request_id=req.request_id))
    return ranked


def run_variant(
    spec: VariantSpec | str,
    dataset: Dataset,
    train_config: TrainConfig = TrainConfig(),
    opt_config: OptConfig = OptConfig(),
    binarization_threshold: int = 1,
    model: EmbeddingModel | None = None,
    train_pois: Sequence[Poi] | None = None,
) -> VariantResult:
    """Build the representation, tune parameters on the profiles, rank and evaluate every request.

    ``model`` reuses an already built representation; ``train_pois`` restricts
    the embedding corpus (defaults to all dataset POIs). Evaluation is skipped
    when the dataset has no judgments.
    """
    if isinstance(spec, str):
        spec = VariantSpec.from_name(spec)
    if model is None:
        pois = dataset.corpus_pois() if train_pois is None else list(train_pois)
        model = build_representation(spec.representation, pois, train_config)
    elif model.kind != spec.representation:
        raise ValueError(f"{spec.name} needs a {spec.representation} model, got {model.kind}")
    opt = replace(opt_config, strategy=spec.strategy)
    search = optimize(model, dataset.profiles, spec.weighting, opt)
    run = emit_run(rank_requests(model, dataset.requests, spec.weighting, search.params_for), spec.name)
    report = None
    if dataset.qrels is not None:
        report = evaluate_run(run, dataset.qrels, binarization_threshold)
    else:
        log.warning("dataset has no judgments; %s run not evaluated", spec.name)
    return VariantResult(spec, run, report, search, model)


# ---------------------------------------------------------------- sweeps

ITERATIONS = "iterations"
DATASET_SIZE = "dataset_size"
OBJECTIVE_METRIC = "objective_metric"
SWEEP_AXES = (ITERATIONS, DATASET_SIZE, OBJECTIVE_METRIC)

REPORT_METRICS = ("ndcg_cut_5", "P_5", "recip_rank")


@dataclass(frozen=True)
class SweepCell:
    axis: str
    value: str
    variant: str
    metric: str
    values: tuple[float, ...]

    @property
    def mean(self) -> float:
        return float(np.mean(self.values))

    @property
    def max(self) -> float:
        return float(np.max(self.values))

    @property
    def std(self) -> float:
        return float(np.std(self.values))


@dataclass(frozen=True)
class SweepResult:
    cells: tuple[SweepCell, ...]

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["axis", "value", "variant", "metric", "mean", "max", "std", "n"])
        for c in self.cells:
            writer.writerow(
                [c.axis, c.value, c.variant, c.metric, repr(c.mean), repr(c.max), repr(c.std), len(c.values)]
            )
        return buf.getvalue()

    def matrix(self, metric: str) -> dict[tuple[str, str], float]:
        """Mean per (axis value, variant) for ``metric``."""
        metric = parse_metric(metric)
        return {(c.value, c.variant): c.mean for c in self.cells if c.metric == metric}


def _corpus_subset(pois: Sequence[Poi], fraction: float) -> list[Poi]:
    if not 0.0 < fraction <= 1.0:
        raise ValueError(f"dataset_size fraction must be in (0, 1], got {fraction}")
    n = max(1, int(round(fraction * len(pois))))
    return list(pois[:n])


def sweep(
    dataset: Dataset,
    axis: str,
    values: Sequence,
    variants: Sequence[str] = DENSE_VARIANTS,
    train_config: TrainConfig = TrainConfig(),
    opt_config: OptConfig = OptConfig(),
    replicates: int = 1,
    report_metrics: Sequence[str] = REPORT_METRICS,
    binarization_threshold: int = 1,
) -> SweepResult:
    """Run every variant for every axis value over ``replicates`` seeds.

    Replicate ``r`` offsets both the training and the optimizer seed by ``r``.
    Axis values are iteration counts, fractions of the embedding corpus, or
    optimization metric names.
    """
    if axis not in SWEEP_AXES:
        raise ValueError(f"axis must be one of {SWEEP_AXES}")
    if not values:
        raise ValueError("sweep needs at least one value")
    if replicates < 1:
        raise ValueError("replicates must be >= 1")
    if dataset.qrels is None:
        raise ValueError("sweeps need judgments")
    metrics = [parse_metric(m) for m in report_metrics]
    specs = [VariantSpec.from_name(v) for v in variants]
    corpus = dataset.corpus_pois()
    cells: list[SweepCell] = []
    for value in values:
        tc, oc, pois = train_config, opt_config, corpus
        if axis == ITERATIONS:
            tc = replace(tc, iterations=int(value))
            label = str(int(value))
        elif axis == DATASET_SIZE:
            pois = _corpus_subset(corpus, float(value))
            label = repr(float(value))
        else:
            oc = replace(oc, objective=parse_metric(str(value)))
            label = oc.objective
        collected: dict[tuple[str, str], list[float]] = {}
        for r in range(replicates):
            tc_r = replace(tc, seed=tc.seed + r)
            oc_r = replace(oc, seed=oc.seed + r)
            models: dict[str, EmbeddingModel] = {}
            for spec in specs:
                if spec.representation not in models:
                    models[spec.representation] = build_representation(spec.representation, pois, tc_r)
                result = run_variant(
                    spec, dataset, tc_r, oc_r, binarization_threshold, model=models[spec.representation]
                )
                for m in metrics:
                    collected.setdefault((spec.name, m), []).append(mean_metric(result.report, m))
        for spec in specs:
            for m in metrics:
                cells.append(SweepCell(axis, label, spec.name, m, tuple(collected[(spec.name, m)])))
    return SweepResult(tuple(cells))


# ---------------------------------------------------------------- export and reporting


def export_vectors(model: EmbeddingModel, pois: Sequence[Poi] = ()) -> str:
    """CSV with one row per tag, then one row per POI (summed tag vectors)."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["kind", "id", *(f"v{i}" for i in range(1, model.dim + 1))])
    for tag, vec in model.vocab.items():
        writer.writerow(["tag", tag, *(repr(float(x)) for x in vec)])
    for poi in pois:
        vec = poi_vector(model, poi).vector
        writer.writerow(["poi", poi.id, *(repr(float(x)) for x in vec)])
    return buf.getvalue()


def load_published_results() -> list[dict[str, str]]:
    """Published effectiveness of the external baselines and of the original method variants."""
    text = resources.files("tagrocchio.resources").joinpath("baselines.csv").read_text("utf-8")
    return list(csv.DictReader(io.StringIO(text)))


def comparison_table(reports: Mapping[str, EvalReport]) -> str:
    """Published rows followed by this run's means, on NDCG@5, P@5 and MRR."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["method", "source", *REPORT_METRICS])
    for row in load_published_results():
        source = "published" + (f" ({row['embedding_data']})" if row["embedding_data"] else "")
        writer.writerow([row["method"], source, *(row[m] for m in REPORT_METRICS)])
    for name, report in reports.items():
        writer.writerow([name, "this run", *(f"{mean_metric(report, m):.4f}" for m in REPORT_METRICS)])
    return buf.getvalue()
