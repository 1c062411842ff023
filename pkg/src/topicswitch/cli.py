"""Command-line entry point.

Subcommands cover each pipeline stage plus the all-in-one study::

    topicswitch parse      --transcripts DIR --out DIR
    topicswitch index      --transcripts DIR --out DIR
    topicswitch label      --prices DIR --out DIR [--index-file CSV]
    topicswitch analytics  --out DIR [--index-file CSV] [--labeled-file CSV]
    topicswitch regress    --out DIR [--labeled-file CSV]
    topicswitch evaluate   --transcripts DIR --out DIR [--labeled-file CSV]
    topicswitch study      --transcripts DIR --prices DIR --out DIR

Flags mirror RunConfig; a ``key = value`` config file supplies defaults
that explicit flags override.  Logs go to stderr, data to the output
directory.
"""

from __future__ import annotations

import argparse
import logging
import sys
from datetime import date
from pathlib import Path

from . import analytics as ana
from . import market, pipeline, regression, tsi
from .encoder import EncoderConfig
from .errors import MalformedInput, TopicSwitchError
from .models import TrainConfig

log = logging.getLogger("topicswitch")

_FEATURE_CHOICES = ("index", "benchmark", "benchmark+index", "all")


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, help="key = value file of flag defaults")
    parser.add_argument("--transcripts", type=Path, help="directory of transcript files")
    parser.add_argument("--prices", type=Path, help="directory of <SYMBOL>.csv price files")
    parser.add_argument("--out", type=Path, default=Path("out"), help="output directory")
    parser.add_argument("--backend", choices=("builtin", "bridge"), default="builtin")
    parser.add_argument("--encoder-dim", type=int, default=64)
    parser.add_argument("--encoder-heads", type=int, default=4)
    parser.add_argument("--encoder-layers", type=int, default=2)
    parser.add_argument("--encoder-ff", type=int, default=128)
    parser.add_argument("--encoder-vocab", type=int, default=4096)
    parser.add_argument("--encoder-max-tokens", type=int, default=256)
    parser.add_argument("--pooling", choices=("mean", "first"), default="mean")
    parser.add_argument("--bridge-endpoint", default="http://127.0.0.1:8811")
    parser.add_argument("--bridge-timeout", type=float, default=30.0)
    parser.add_argument("--label-kind", choices=("absolute", "relative"), default="absolute")
    parser.add_argument("--tau", type=float, default=0.0, help="relative-change threshold")
    parser.add_argument("--split-date", type=date.fromisoformat, default=date(2016, 1, 1))
    parser.add_argument("--feature-set", choices=_FEATURE_CHOICES, default="index")
    parser.add_argument("--weighting", choices=tsi.WEIGHTINGS, default="per-pair")
    parser.add_argument("--positive-class", choices=("up", "down"), default="up")
    parser.add_argument("--mu1", type=float, default=0.0, help="l1 strength")
    parser.add_argument("--mu2", type=float, default=0.0, help="l2 strength")
    parser.add_argument("--learning-rate", type=float, default=0.05)
    parser.add_argument("--epochs", type=int, default=200)
    parser.add_argument("--batch-size", type=int, default=16)
    parser.add_argument("--no-bias", action="store_true", help="drop the intercept feature")
    parser.add_argument("--seed", type=int, default=0, help="global reproducibility seed")
    parser.add_argument("--workers", type=int, default=1)
    parser.add_argument("--index-file", type=Path, help="existing index_records.csv")
    parser.add_argument("--labeled-file", type=Path, help="existing labeled_calls.csv")
    parser.add_argument("-v", "--verbose", action="store_true")


def _read_config_file(path: Path) -> dict[str, str]:
    values: dict[str, str] = {}
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise MalformedInput(f"expected 'key = value' in {path}", line=lineno)
        key, _, value = stripped.partition("=")
        values[key.strip().replace("-", "_")] = value.strip()
    return values


_FILE_CONVERTERS = {
    "transcripts": Path,
    "prices": Path,
    "out": Path,
    "config": Path,
    "index_file": Path,
    "labeled_file": Path,
    "encoder_dim": int,
    "encoder_heads": int,
    "encoder_layers": int,
    "encoder_ff": int,
    "encoder_vocab": int,
    "encoder_max_tokens": int,
    "bridge_timeout": float,
    "tau": float,
    "split_date": date.fromisoformat,
    "mu1": float,
    "mu2": float,
    "learning_rate": float,
    "epochs": int,
    "batch_size": int,
    "seed": int,
    "workers": int,
    "no_bias": lambda v: v.lower() in ("1", "true", "yes"),
    "verbose": lambda v: v.lower() in ("1", "true", "yes"),
}


def _apply_config_file(parser: argparse.ArgumentParser, argv: list[str]) -> argparse.Namespace:
    probe, _ = parser.parse_known_args(argv)
    if probe.config:
        raw = _read_config_file(probe.config)
        defaults = {}
        for key, value in raw.items():
            converter = _FILE_CONVERTERS.get(key, str)
            defaults[key] = converter(value)
        parser.set_defaults(**defaults)
    return parser.parse_args(argv)


def _feature_sets(name: str) -> tuple[pipeline.FeatureSet, ...]:
    if name == "all":
        return (
            pipeline.FeatureSet.BENCHMARK_ONLY,
            pipeline.FeatureSet.BENCHMARK_PLUS_INDEX,
            pipeline.FeatureSet.INDEX_ONLY,
        )
    return (pipeline.FeatureSet(name),)


def _run_config(args: argparse.Namespace) -> pipeline.RunConfig:
    encoder = EncoderConfig(
        d_model=args.encoder_dim,
        n_heads=args.encoder_heads,
        n_layers=args.encoder_layers,
        d_ff=args.encoder_ff,
        vocab_size=args.encoder_vocab,
        max_tokens=args.encoder_max_tokens,
        seed=args.seed,
        pooling=args.pooling,
    )
    backend = pipeline.BackendConfig(
        kind=args.backend,
        encoder=encoder,
        endpoint=args.bridge_endpoint,
        timeout=args.bridge_timeout,
    )
    label_spec = market.LabelSpec(market.LabelKind(args.label_kind), tau=args.tau)
    train = TrainConfig(
        mu1=args.mu1,
        mu2=args.mu2,
        learning_rate=args.learning_rate,
        epochs=args.epochs,
        batch_size=args.batch_size,
        seed=args.seed,
        use_bias=not args.no_bias,
    )
    return pipeline.RunConfig(
        transcript_dir=args.transcripts or Path("."),
        price_dir=args.prices,
        output_dir=args.out,
        backend=backend,
        label_spec=label_spec,
        split_date=args.split_date,
        feature_sets=_feature_sets(args.feature_set),
        train=train,
        weighting=args.weighting,
        positive_class=args.positive_class,
        workers=args.workers,
    )


def _require(args: argparse.Namespace, *names: str) -> None:
    for name in names:
        value = getattr(args, name)
        if value is None:
            raise SystemExit(f"error: --{name.replace('_', '-')} is required for this command")
        if name in ("transcripts", "prices") and not Path(value).is_dir():
            raise SystemExit(f"error: --{name} directory {value} does not exist")


def _load_labeled(args: argparse.Namespace) -> list[market.LabeledCall]:
    path = args.labeled_file or (args.out / "labeled_calls.csv")
    if not path.exists():
        raise SystemExit(f"error: labeled file {path} not found; run `label` or `study` first")
    return market.labeled_from_csv(path.read_text())


def _load_records(args: argparse.Namespace) -> list[tsi.CallIndexRecord]:
    path = args.index_file or (args.out / "index_records.csv")
    if not path.exists():
        raise SystemExit(f"error: index file {path} not found; run `index` first")
    return tsi.records_from_csv(path.read_text())


def _cmd_parse(args: argparse.Namespace) -> None:
    _require(args, "transcripts")
    manifest = pipeline.run_parse(_run_config(args))
    log.info(
        "parsed %d/%d file(s) into %s",
        manifest["parse"]["parsed"],
        manifest["parse"]["total_files"],
        args.out / "parsed",
    )


def _cmd_index(args: argparse.Namespace) -> None:
    _require(args, "transcripts")
    result = pipeline.run_index(_run_config(args))
    log.info(
        "indexed %d call(s), excluded %d, wrote %s",
        len(result.entries),
        len(result.exclusions),
        args.out / "index_records.csv",
    )


def _cmd_label(args: argparse.Namespace) -> None:
    _require(args, "prices")
    config = _run_config(args)
    records = _load_records(args)
    labeled, exclusions = pipeline.label_corpus(records, config.price_dir, config.label_spec)
    args.out.mkdir(parents=True, exist_ok=True)
    (args.out / "labeled_calls.csv").write_text(market.labeled_to_csv(labeled))
    log.info("labeled %d call(s), excluded %d", len(labeled), len(exclusions))


def _cmd_analytics(args: argparse.Namespace) -> None:
    records = _load_records(args)
    args.out.mkdir(parents=True, exist_ok=True)
    (args.out / "tsi_category_summary.csv").write_text(
        ana.summaries_to_csv(ana.summarize_categories(records))
    )
    (args.out / "tsi_yearly_trend.csv").write_text(
        ana.trend_to_csv(ana.yearly_trend([(r.call_date, r.index) for r in records]))
    )
    by_sector: dict[str, list[float]] = {}
    for rec in records:
        by_sector.setdefault(rec.sector.value, []).append(rec.index)
    boxes = [
        ana.box_summary(by_sector[s.value], s.value)
        for s in pipeline.transcript.Sector
        if s.value in by_sector
    ]
    (args.out / "tsi_box_by_category.csv").write_text(ana.boxes_to_csv(boxes))
    log.info("wrote index analytics for %d record(s) to %s", len(records), args.out)


def _cmd_regress(args: argparse.Namespace) -> None:
    labeled = _load_labeled(args)
    results, skipped = regression.fit_by_sector(labeled)
    args.out.mkdir(parents=True, exist_ok=True)
    (args.out / "regression.csv").write_text(regression.results_to_csv(results))
    for sector, reason in skipped.items():
        log.warning("regression skipped %s: %s", sector, reason)
    log.info("wrote %d regression row(s) to %s", len(results), args.out / "regression.csv")


def _cmd_evaluate(args: argparse.Namespace) -> None:
    config = _run_config(args)
    labeled = _load_labeled(args)
    bench = None
    if any(fs is not pipeline.FeatureSet.INDEX_ONLY for fs in config.feature_sets):
        _require(args, "transcripts")
        backend = config.backend.build()
        by_key: dict[tuple[str, str], pipeline.transcript.EarningsCall] = {}
        for path in pipeline.list_transcript_files(config.transcript_dir):
            try:
                call = pipeline.load_paired_call(path)
            except TopicSwitchError:
                continue
            by_key[(call.company_symbol, call.call_date.isoformat())] = call
        calls = []
        for c in labeled:
            key = (c.record.company_symbol, c.record.call_date.isoformat())
            if key not in by_key:
                raise SystemExit(f"error: no transcript for labeled call {key}")
            calls.append(by_key[key])
        bench = pipeline.benchmark_matrix(calls, backend, config.workers)
    rows = pipeline.evaluate_models(
        labeled, bench, config.feature_sets, config.split_date, config.train, config.positive_class
    )
    args.out.mkdir(parents=True, exist_ok=True)
    (args.out / "accuracy.csv").write_text(pipeline.accuracy_csv(rows))
    for row in rows:
        log.info(
            "%s: svm %.3f logistic %.3f nn %.3f (train %d / test %d)",
            row.feature_set,
            row.accuracies["svm"],
            row.accuracies["logistic"],
            row.accuracies["nn"],
            row.n_train,
            row.n_test,
        )


def _cmd_study(args: argparse.Namespace) -> None:
    _require(args, "transcripts", "prices")
    result = pipeline.run_study(_run_config(args))
    overall = next((r for r in result.regression_results if r.sector == regression.OVERALL), None)
    if overall:
        log.info(
            "overall slope %.5f (se %.5f, t %.2f, n %d)",
            overall.coefficient,
            overall.std_error,
            overall.t_value,
            overall.n,
        )
    for row in result.evaluation:
        log.info(
            "%s: svm %.3f logistic %.3f nn %.3f",
            row.feature_set,
            row.accuracies["svm"],
            row.accuracies["logistic"],
            row.accuracies["nn"],
        )
    log.info("report bundle in %s", args.out)


_COMMANDS = {
    "parse": _cmd_parse,
    "index": _cmd_index,
    "label": _cmd_label,
    "analytics": _cmd_analytics,
    "regress": _cmd_regress,
    "evaluate": _cmd_evaluate,
    "study": _cmd_study,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="topicswitch",
        description="Topic-switching index pipeline for earnings-call Q&A sessions",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        sub = subparsers.add_parser(name)
        _add_common(sub)
    return parser


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    if not argv or argv[0] in ("-h", "--help"):
        parser.parse_args(argv)  # prints help and exits
        return 0
    command, rest = argv[0], argv[1:]
    if command not in _COMMANDS:
        parser.parse_args(argv)  # let argparse report the bad subcommand
        return 2
    sub = argparse.ArgumentParser(prog=f"topicswitch {command}")
    _add_common(sub)
    args = _apply_config_file(sub, rest)
    logging.basicConfig(
        stream=sys.stderr,
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        _COMMANDS[command](args)
    except TopicSwitchError as exc:
        log.error("%s: %s", type(exc).__name__, exc)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
