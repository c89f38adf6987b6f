"""Command line interface: ``tagrocchio <command> ...``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import io as tio
from .config import OPT_FIELDS, TRAIN_FIELDS, build_configs, load_config
from .embedding import ONE_HOT, load_model, save_model
from .evaluation import evaluate_run
from .experiments import (
    DENSE_VARIANTS,
    REPORT_METRICS,
    SWEEP_AXES,
    VARIANTS,
    Dataset,
    build_representation,
    comparison_table,
    export_vectors,
    rank_requests,
    run_variant,
    sweep,
)
from .fixtures import ClusterSpec, generate_fixture
from .modeling import RocchioParams, WEIGHTED, WEIGHTINGS
from .optimizer import SearchResult, optimize
from .ranking import emit_run

log = logging.getLogger("tagrocchio")

_TRAIN_FLAGS = {
    "dim": "embedding dimension",
    "window": "context window",
    "min_count": "minimum tag frequency",
    "iterations": "passes over the sentences",
    "negative_samples": "negative samples per position",
    "learning_rate_start": "initial learning rate",
    "learning_rate_end": "final learning rate",
    "permutations_per_poi": "tag orderings per POI",
}
_OPT_FLAGS = {
    "objective": "self-ranking metric to maximize",
    "strategy": "same_for_all or per_user",
    "range_lo": "lower clip bound for alpha and gamma",
    "range_hi": "upper clip bound for alpha and gamma",
    "grid_step": "grid spacing",
    "ga_population": "GA population size",
    "ga_generations": "GA generations",
    "beta": "neutral profile weight",
    "grid_region": "ga_box or full",
}


def _add_fields(p: argparse.ArgumentParser, fields: dict[str, type], helps: dict[str, str]) -> None:
    for name, help_text in helps.items():
        p.add_argument(f"--{name.replace('_', '-')}", dest=name, type=fields[name], default=None, help=help_text)


def _configs(args):
    values = load_config(args.config) if args.config else {}
    for name in (*TRAIN_FIELDS, *OPT_FIELDS):
        v = getattr(args, name, None)
        if v is not None:
            values[name] = v
    if args.seed is not None:
        values["seed"] = args.seed
    return build_configs(values)


def _write(text: str, path: str | None) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def _write_params(search: SearchResult, path: str) -> None:
    lines = []
    if search.params is not None:
        p = search.params
        lines.append(f"*\t{p.alpha!r}\t{p.beta!r}\t{p.gamma!r}\n")
    for uid, p in search.per_user_params.items():
        lines.append(f"{uid}\t{p.alpha!r}\t{p.beta!r}\t{p.gamma!r}\n")
    Path(path).write_text("".join(lines), encoding="utf-8")


def _read_params(path: str):
    global_params = None
    per_user = {}
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        uid, a, b, g = line.split("\t")
        params = RocchioParams(float(a), float(b), float(g))
        if uid == "*":
            global_params = params
        else:
            per_user[uid] = params

    def params_for(user_id: str) -> RocchioParams:
        if user_id in per_user:
            return per_user[user_id]
        if global_params is None:
            raise ValueError(f"{path}: no parameters for user {user_id}")
        return global_params

    return params_for


# ---------------------------------------------------------------- commands


def cmd_fixtures(args) -> int:
    spec = ClusterSpec(
        n_clusters=args.clusters,
        synonym_fraction=args.synonym_fraction,
        profile_size=args.profile_size,
        candidates_per_request=args.candidates,
    )
    fx = generate_fixture(args.seed if args.seed is not None else 1, args.users, args.pois, args.tags, spec)
    out = Dataset.from_fixture(fx).save(args.out)
    log.info("wrote %d POIs, %d profiles, %d requests to %s", len(fx.pois), len(fx.profiles), len(fx.requests), out)
    return 0


def cmd_train(args) -> int:
    train, _ = _configs(args)
    ds = Dataset.load(args.data)
    model = build_representation(ONE_HOT if args.one_hot else "dense", ds.corpus_pois(), train)
    save_model(model, args.out)
    log.info("saved %s model with %d tags to %s", model.kind, len(model), args.out)
    return 0


def cmd_optimize(args) -> int:
    _, opt = _configs(args)
    ds = Dataset.load(args.data)
    model = load_model(args.model)
    search = optimize(model, ds.profiles, args.weighting, opt)
    _write_params(search, args.out)
    if args.trace:
        _write(search.trace_csv(), args.trace)
    print(f"{opt.objective}\t{search.objective_value!r}")
    return 0


def cmd_rank(args) -> int:
    ds = Dataset.load(args.data)
    model = load_model(args.model)
    if args.params:
        params_for = _read_params(args.params)
    else:
        params = RocchioParams(args.alpha, args.beta, args.gamma)
        params_for = lambda _user_id: params  # noqa: E731
    run = emit_run(rank_requests(model, ds.requests, args.weighting, params_for), args.tag)
    _write(tio.format_run(run), args.out)
    return 0


def cmd_eval(args) -> int:
    run = tio.read_run(args.run)
    qrels = tio.load_qrels(args.qrels)
    report = evaluate_run(run, qrels, args.threshold)
    if args.csv:
        _write(report.to_csv(), args.csv)
    for metric, value in report.means().items():
        print(f"{metric}\tall\t{value:.4f}")
    return 0


def cmd_variant(args) -> int:
    train, opt = _configs(args)
    ds = Dataset.load(args.data)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    reports = {}
    for name in args.name:
        result = run_variant(name, ds, train, opt, args.threshold)
        tio.write_run(result.run, out / f"{name}.run")
        (out / f"{name}.trace.csv").write_text(result.search.trace_csv(), encoding="utf-8")
        _write_params(result.search, str(out / f"{name}.params.tsv"))
        if result.report is not None:
            (out / f"{name}.eval.csv").write_text(result.report.to_csv(), encoding="utf-8")
            reports[name] = result.report
    if reports:
        table = comparison_table(reports)
        (out / "comparison.csv").write_text(table, encoding="utf-8")
        sys.stdout.write(table)
    return 0


def cmd_sweep(args) -> int:
    train, opt = _configs(args)
    ds = Dataset.load(args.data)
    values = [v for v in args.values.split(",") if v]
    result = sweep(
        ds,
        args.axis,
        values,
        variants=args.variants,
        train_config=train,
        opt_config=opt,
        replicates=args.replicates,
        report_metrics=args.metrics.split(","),
        binarization_threshold=args.threshold,
    )
    _write(result.to_csv(), args.out)
    return 0


def cmd_export_vectors(args) -> int:
    model = load_model(args.model)
    pois = Dataset.load(args.data).corpus_pois() if args.data else []
    _write(export_vectors(model, pois), args.out)
    return 0


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tagrocchio", description=__doc__)
    parser.add_argument("--seed", type=int, default=None, help="seed for training, GA and fixtures")
    parser.add_argument("--config", default=None, help="key=value file with training/optimizer settings")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fixtures", help="write a synthetic dataset directory")
    p.add_argument("--out", required=True)
    p.add_argument("--users", type=int, default=10)
    p.add_argument("--pois", type=int, default=200)
    p.add_argument("--tags", type=int, default=30)
    p.add_argument("--clusters", type=int, default=3)
    p.add_argument("--synonym-fraction", type=float, default=0.5)
    p.add_argument("--profile-size", type=int, default=10)
    p.add_argument("--candidates", type=int, default=20)
    p.set_defaults(func=cmd_fixtures)

    p = sub.add_parser("train", help="train a dense model or build the one-hot model")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--one-hot", action="store_true")
    _add_fields(p, TRAIN_FIELDS, _TRAIN_FLAGS)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("optimize", help="tune alpha and gamma on the profiles")
    p.add_argument("--data", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--weighting", choices=WEIGHTINGS, default=WEIGHTED)
    p.add_argument("--out", required=True, help="parameter file")
    p.add_argument("--trace", default=None, help="CSV of evaluated grid points")
    _add_fields(p, OPT_FIELDS, _OPT_FLAGS)
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("rank", help="rank the candidates of every request")
    p.add_argument("--data", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--weighting", choices=WEIGHTINGS, default=WEIGHTED)
    p.add_argument("--params", default=None, help="parameter file from 'optimize'")
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--tag", default="tagrocchio")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_rank)

    p = sub.add_parser("eval", help="evaluate a run against qrels")
    p.add_argument("--run", required=True)
    p.add_argument("--qrels", required=True)
    p.add_argument("--threshold", type=int, default=1)
    p.add_argument("--csv", default=None)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("variant", help="run named method variants end to end")
    p.add_argument("--data", required=True)
    p.add_argument("--name", nargs="+", choices=list(VARIANTS), default=list(DENSE_VARIANTS))
    p.add_argument("--out-dir", required=True)
    p.add_argument("--threshold", type=int, default=1)
    _add_fields(p, TRAIN_FIELDS, _TRAIN_FLAGS)
    _add_fields(p, OPT_FIELDS, _OPT_FLAGS)
    p.set_defaults(func=cmd_variant)

    p = sub.add_parser("sweep", help="sweep iterations, corpus size or optimization metric")
    p.add_argument("--data", required=True)
    p.add_argument("--axis", choices=SWEEP_AXES, required=True)
    p.add_argument("--values", required=True, help="comma-separated axis values")
    p.add_argument("--variants", nargs="+", choices=list(VARIANTS), default=list(DENSE_VARIANTS))
    p.add_argument("--replicates", type=int, default=1)
    p.add_argument("--metrics", default=",".join(REPORT_METRICS))
    p.add_argument("--threshold", type=int, default=1)
    p.add_argument("--out", default=None)
    _add_fields(p, TRAIN_FIELDS, _TRAIN_FLAGS)
    _add_fields(p, OPT_FIELDS, _OPT_FLAGS)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("export-vectors", help="CSV of tag and POI vectors")
    p.add_argument("--model", required=True)
    p.add_argument("--data", default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_export_vectors)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        log.error("%s", exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
