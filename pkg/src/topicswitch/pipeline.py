"""End-to-end orchestration: corpus -> index -> labels -> reports.

Every stage iterates files in sorted order and reduces in (symbol, date)
order, so a run's output bundle is byte-identical for identical inputs
and configuration.  Excluded inputs are never silent: each exclusion is
counted by reason in the run manifest, and parsed + excluded always
equals the number of input files.
"""

from __future__ import annotations

import csv
import enum
import io
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from datetime import date
from pathlib import Path
from typing import Sequence

import numpy as np

from . import analytics as ana
from . import market, regression, transcript, tsi
from .bridge import BridgeBackend
from .encoder import BuiltinBackend, EncoderConfig
from .errors import (
    AllPairsSkipped,
    DuplicateDate,
    EmptySplit,
    InsufficientWindow,
    MalformedInput,
    NonPositivePrice,
    NoPairsFound,
    NoUsableCalls,
)
from .models import (
    Dataset,
    Standardizer,
    TrainConfig,
    evaluate_accuracy,
    logistic_objective,
    mlp_objective,
    sgd_train,
    svm_objective,
)

log = logging.getLogger("topicswitch")


class FeatureSet(enum.Enum):
    INDEX_ONLY = "index"
    BENCHMARK_ONLY = "benchmark"
    BENCHMARK_PLUS_INDEX = "benchmark+index"


MODEL_KINDS = ("svm", "logistic", "nn")


@dataclass(frozen=True)
class BackendConfig:
    """Which embedding backend to use and how to reach or shape it."""

    kind: str = "builtin"
    encoder: EncoderConfig = EncoderConfig()
    endpoint: str = "http://127.0.0.1:8811"
    timeout: float = 30.0

    def build(self):
        if self.kind == "builtin":
            return BuiltinBackend(self.encoder)
        if self.kind == "bridge":
            return BridgeBackend(self.endpoint, self.timeout)
        raise ValueError(f"unknown backend kind {self.kind!r}")


@dataclass(frozen=True)
class RunConfig:
    """Everything a study run needs; flags and config files mirror this."""

    transcript_dir: Path
    output_dir: Path
    price_dir: Path | None = None
    backend: BackendConfig = BackendConfig()
    label_spec: market.LabelSpec = market.LabelSpec(market.LabelKind.ABSOLUTE)
    split_date: date = date(2016, 1, 1)
    feature_sets: tuple[FeatureSet, ...] = (FeatureSet.INDEX_ONLY,)
    train: TrainConfig = TrainConfig()
    weighting: str = "per-pair"
    positive_class: str = "up"
    workers: int = 1

    def echo(self) -> dict:
        """JSON-safe snapshot of the study parameters for run manifests.

        Filesystem paths are deliberately left out so identical studies
        over identical corpora produce byte-identical bundles wherever
        they run.
        """
        return {
            "backend": {
                "kind": self.backend.kind,
                "encoder": self.backend.encoder.__dict__ if self.backend.kind == "builtin" else None,
                "endpoint": self.backend.endpoint if self.backend.kind == "bridge" else None,
                "timeout": self.backend.timeout,
            },
            "label": {"kind": self.label_spec.kind.value, "tau": self.label_spec.tau},
            "split_date": self.split_date.isoformat(),
            "feature_sets": [f.value for f in self.feature_sets],
            "train": {
                "mu1": self.train.mu1,
                "mu2": self.train.mu2,
                "learning_rate": self.train.learning_rate,
                "epochs": self.train.epochs,
                "batch_size": self.train.batch_size,
                "seed": self.train.seed,
                "use_bias": self.train.use_bias,
            },
            "weighting": self.weighting,
            "positive_class": self.positive_class,
        }


@dataclass
class Exclusion:
    file: str
    reason: str
    detail: str


@dataclass
class IndexResult:
    """Scored calls plus bookkeeping for the manifest."""

    entries: list[tuple[transcript.EarningsCall, tsi.CallIndexRecord]]
    exclusions: list[Exclusion]
    total_files: int

    @property
    def records(self) -> list[tsi.CallIndexRecord]:
        return [rec for _, rec in self.entries]

    def manifest(self) -> dict:
        by_reason: dict[str, int] = {}
        for exc in self.exclusions:
            by_reason[exc.reason] = by_reason.get(exc.reason, 0) + 1
        return {
            "total_files": self.total_files,
            "parsed": len(self.entries),
            "excluded": by_reason,
            "exclusions": [exc.__dict__ for exc in self.exclusions],
        }


def list_transcript_files(transcript_dir: Path) -> list[Path]:
    files = [p for p in Path(transcript_dir).iterdir() if p.is_file() and not p.name.startswith(".")]
    return sorted(files, key=lambda p: p.name)


def load_paired_call(path: Path) -> transcript.EarningsCall:
    raw = path.read_bytes()
    call = transcript.parse_transcript(raw, transcript.sniff_format(path.name))
    return transcript.segment_and_pair(call)


def index_corpus(
    transcript_dir: Path,
    backend,
    weighting: str = "per-pair",
    workers: int = 1,
) -> IndexResult:
    """Parse, pair, embed, and score every transcript file in the directory.

    Files that fail any stage are excluded with a reason; scoring runs
    in worker threads when requested, with results reduced in sorted
    (symbol, date) order either way.
    """
    files = list_transcript_files(transcript_dir)
    exclusions: list[Exclusion] = []
    paired: list[tuple[Path, transcript.EarningsCall]] = []
    for path in files:
        try:
            paired.append((path, load_paired_call(path)))
        except MalformedInput as exc:
            exclusions.append(Exclusion(path.name, "malformed_input", str(exc)))
        except NoPairsFound as exc:
            exclusions.append(Exclusion(path.name, "no_pairs_found", str(exc)))

    def score(item: tuple[Path, transcript.EarningsCall]):
        path, call = item
        texts: list[str] = []
        for pair in call.qa_pairs:
            texts.append(pair.question_text)
            texts.append(pair.answer_text)
        matrix = backend.embed_texts(texts)
        triples = [
            (pair, matrix[2 * i], matrix[2 * i + 1]) for i, pair in enumerate(call.qa_pairs)
        ]
        try:
            record = tsi.score_call(
                triples,
                company_symbol=call.company_symbol,
                call_date=call.call_date,
                sector=call.sector,
                weighting=weighting,
            )
        except AllPairsSkipped as exc:
            return path, call, exc
        return path, call, record

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(score, paired))
    else:
        outcomes = [score(item) for item in paired]

    entries = []
    for path, call, outcome in outcomes:
        if isinstance(outcome, AllPairsSkipped):
            exclusions.append(Exclusion(path.name, "all_pairs_skipped", str(outcome)))
        else:
            entries.append((call, outcome))
    entries.sort(key=lambda e: (e[1].company_symbol, e[1].call_date))
    return IndexResult(entries=entries, exclusions=exclusions, total_files=len(files))


def run_index(config: RunConfig, write: bool = True) -> IndexResult:
    """The `index` stage: records plus manifest written to the output dir."""
    backend = config.backend.build()
    result = index_corpus(config.transcript_dir, backend, config.weighting, config.workers)
    if not result.entries:
        raise NoUsableCalls(
            f"no usable call among {result.total_files} file(s); "
            f"reasons: {result.manifest()['excluded']}"
        )
    if write:
        out = Path(config.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "index_records.csv").write_text(tsi.records_to_csv(result.records))
        (out / "index_records.jsonl").write_text(tsi.records_to_jsonl(result.records))
        manifest = {"config": config.echo(), "index": result.manifest()}
        (out / "manifest.json").write_text(json.dumps(manifest, sort_keys=True, indent=2) + "\n")
    return result


def label_corpus(
    records: Sequence[tsi.CallIndexRecord],
    price_dir: Path,
    label_spec: market.LabelSpec,
) -> tuple[list[market.LabeledCall], list[Exclusion]]:
    """Join index records with their price series and attach labels."""
    price_dir = Path(price_dir)
    series_cache: dict[str, market.PriceSeries | None] = {}
    labeled: list[market.LabeledCall] = []
    exclusions: list[Exclusion] = []
    for rec in records:
        symbol = rec.company_symbol
        if symbol not in series_cache:
            path = price_dir / f"{symbol}.csv"
            if not path.exists():
                series_cache[symbol] = None
            else:
                try:
                    series_cache[symbol] = market.load_prices(path.read_bytes(), symbol)
                except (MalformedInput, NonPositivePrice, DuplicateDate) as exc:
                    log.warning("bad price file %s: %s", path.name, exc)
                    series_cache[symbol] = None
        series = series_cache[symbol]
        stamp = f"{symbol}:{rec.call_date.isoformat()}"
        if series is None:
            exclusions.append(Exclusion(stamp, "missing_prices", f"no usable {symbol}.csv"))
            continue
        try:
            labeled.append(market.label_call(rec, series, label_spec))
        except InsufficientWindow as exc:
            exclusions.append(Exclusion(stamp, "insufficient_window", str(exc)))
    return labeled, exclusions


def discussion_texts(call: transcript.EarningsCall) -> list[str]:
    """Turn texts of the Q&A discussion: from the first analyst turn on,
    skipping operator interjections."""
    start = next((t.ordinal for t in call.turns if t.role is transcript.Role.ANALYST), None)
    if start is None:
        return []
    return [
        t.text
        for t in call.turns[start:]
        if t.role is not transcript.Role.OPERATOR
    ]


def benchmark_matrix(
    calls: Sequence[transcript.EarningsCall],
    backend,
    workers: int = 1,
) -> np.ndarray:
    """Whole-discussion embedding per call: mean of its per-turn vectors."""

    def one(call: transcript.EarningsCall) -> np.ndarray:
        texts = discussion_texts(call)
        if not texts:
            return np.zeros(backend.dim)
        return backend.embed_texts(texts).mean(axis=0)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(one, calls))
    else:
        rows = [one(call) for call in calls]
    return np.vstack(rows) if rows else np.zeros((0, backend.dim))


@dataclass
class EvaluationRow:
    feature_set: str
    accuracies: dict[str, float]
    n_train: int
    n_test: int


def split_and_standardize(
    X: np.ndarray,
    y: np.ndarray,
    dates: Sequence[date],
    split_date: date,
) -> tuple[Dataset, Dataset, Standardizer]:
    """Date-based train/test split with train-only standardization.

    Calls dated before ``split_date`` train; the rest test.  The
    standardizer is fitted on the training rows alone, so nothing dated
    at or past the split leaks into training statistics.
    """
    train_mask = np.array([d < split_date for d in dates])
    if not train_mask.any() or train_mask.all():
        raise EmptySplit(
            f"split at {split_date} leaves {int(train_mask.sum())} train / "
            f"{int((~train_mask).sum())} test example(s)"
        )
    standardizer = Standardizer.fit(X[train_mask])
    train = Dataset(standardizer.transform(X[train_mask]), y[train_mask])
    test = Dataset(standardizer.transform(X[~train_mask]), y[~train_mask])
    return train, test, standardizer


def evaluate_models(
    labeled: Sequence[market.LabeledCall],
    bench: np.ndarray | None,
    feature_sets: Sequence[FeatureSet],
    split_date: date,
    train_cfg: TrainConfig,
    positive_class: str = "up",
) -> list[EvaluationRow]:
    """Train the three classifiers per feature set and report test accuracy.

    Standardization statistics come from the training split only, so no
    post-split information leaks into training.
    """
    if positive_class not in ("up", "down"):
        raise ValueError("positive_class must be 'up' or 'down'")
    y = np.array([c.label for c in labeled], dtype=np.int64)
    if positive_class == "down":
        y = -y
    dates = [c.record.call_date for c in labeled]
    index_col = np.array([[c.record.index] for c in labeled])
    rows: list[EvaluationRow] = []
    objectives = {
        "svm": svm_objective,
        "logistic": logistic_objective,
        "nn": mlp_objective,
    }
    for fs in feature_sets:
        if fs is FeatureSet.INDEX_ONLY:
            X = index_col
        elif fs is FeatureSet.BENCHMARK_ONLY:
            X = bench
        else:
            X = np.hstack([bench, index_col])
        if X is None:
            raise ValueError(f"feature set {fs.value} needs benchmark embeddings")
        train_data, test_data, _ = split_and_standardize(X, y, dates, split_date)
        accuracies = {}
        for kind in MODEL_KINDS:
            result = sgd_train(objectives[kind], train_data, train_cfg)
            accuracies[kind] = evaluate_accuracy(result.model, test_data)
        rows.append(
            EvaluationRow(
                feature_set=fs.value,
                accuracies=accuracies,
                n_train=train_data.n,
                n_test=test_data.n,
            )
        )
    return rows


def accuracy_csv(rows: Sequence[EvaluationRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(("feature_set", "svm", "logistic", "nn"))
    for row in rows:
        writer.writerow(
            [
                row.feature_set,
                repr(row.accuracies["svm"]),
                repr(row.accuracies["logistic"]),
                repr(row.accuracies["nn"]),
            ]
        )
    return buf.getvalue()


@dataclass
class StudyResult:
    records: list[tsi.CallIndexRecord]
    labeled: list[market.LabeledCall]
    regression_results: list[regression.RegressionResult]
    evaluation: list[EvaluationRow]
    manifest: dict


def run_study(config: RunConfig) -> StudyResult:
    """Run the whole study and write the report bundle into output_dir."""
    if config.price_dir is None:
        raise ValueError("a price directory is required for the study")
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    backend = config.backend.build()

    index_result = index_corpus(
        config.transcript_dir, backend, config.weighting, config.workers
    )
    if not index_result.entries:
        raise NoUsableCalls(f"no usable call among {index_result.total_files} file(s)")
    records = index_result.records
    (out / "index_records.csv").write_text(tsi.records_to_csv(records))
    (out / "index_records.jsonl").write_text(tsi.records_to_jsonl(records))

    labeled, label_exclusions = label_corpus(records, config.price_dir, config.label_spec)
    if not labeled:
        raise NoUsableCalls("no call could be labeled against the price data")
    (out / "labeled_calls.csv").write_text(market.labeled_to_csv(labeled))

    # Analytics: switching index and relative price change, same operations,
    # each table emitted as CSV plus a JSON twin.
    tsi_summaries = ana.summarize_categories(records)
    ret_summaries = ana.summarize_values(
        [(c.record.sector.value, c.relative_change) for c in labeled]
    )
    by_sector: dict[str, list[float]] = {}
    returns_by_sector: dict[str, list[float]] = {}
    for rec in records:
        by_sector.setdefault(rec.sector.value, []).append(rec.index)
    for c in labeled:
        returns_by_sector.setdefault(c.record.sector.value, []).append(c.relative_change)
    sector_order = [s.value for s in transcript.Sector]
    tsi_boxes = [
        ana.box_summary(by_sector[s], s) for s in sector_order if s in by_sector
    ]
    ret_boxes = [
        ana.box_summary(returns_by_sector[s], s) for s in sector_order if s in returns_by_sector
    ]
    tsi_trend = ana.yearly_trend([(r.call_date, r.index) for r in records])
    ret_trend = ana.yearly_trend([(c.record.call_date, c.relative_change) for c in labeled])
    for stem, csv_text, json_text in (
        ("tsi_category_summary", ana.summaries_to_csv(tsi_summaries), ana.summaries_to_json(tsi_summaries)),
        ("returns_category_summary", ana.summaries_to_csv(ret_summaries), ana.summaries_to_json(ret_summaries)),
        ("tsi_box_by_category", ana.boxes_to_csv(tsi_boxes), ana.boxes_to_json(tsi_boxes)),
        ("returns_box_by_category", ana.boxes_to_csv(ret_boxes), ana.boxes_to_json(ret_boxes)),
        ("tsi_yearly_trend", ana.trend_to_csv(tsi_trend), ana.trend_to_json(tsi_trend)),
        ("returns_yearly_trend", ana.trend_to_csv(ret_trend), ana.trend_to_json(ret_trend)),
    ):
        (out / f"{stem}.csv").write_text(csv_text)
        (out / f"{stem}.json").write_text(json_text)

    regression_results, regression_skips = regression.fit_by_sector(labeled)
    (out / "regression.csv").write_text(regression.results_to_csv(regression_results))

    needs_benchmark = any(fs is not FeatureSet.INDEX_ONLY for fs in config.feature_sets)
    bench = None
    if needs_benchmark:
        # Align one call per labeled row; label_corpus reuses the record
        # objects, so identity matching keeps the row order exact.
        call_by_record = {id(rec): call for call, rec in index_result.entries}
        calls_for_bench = [call_by_record[id(c.record)] for c in labeled]
        bench = benchmark_matrix(calls_for_bench, backend, config.workers)
    evaluation = evaluate_models(
        labeled,
        bench,
        config.feature_sets,
        config.split_date,
        config.train,
        config.positive_class,
    )
    (out / "accuracy.csv").write_text(accuracy_csv(evaluation))

    manifest = {
        "config": config.echo(),
        "index": index_result.manifest(),
        "labeling": {
            "labeled": len(labeled),
            "excluded": len(label_exclusions),
            "exclusions": [e.__dict__ for e in label_exclusions],
        },
        "regression_skipped": regression_skips,
        "evaluation": [
            {
                "feature_set": row.feature_set,
                "n_train": row.n_train,
                "n_test": row.n_test,
                "accuracies": row.accuracies,
                "seed": config.train.seed,
            }
            for row in evaluation
        ],
        "kernel_path": _kernel_path_name(),
    }
    (out / "manifest.json").write_text(json.dumps(manifest, sort_keys=True, indent=2) + "\n")
    return StudyResult(
        records=records,
        labeled=labeled,
        regression_results=regression_results,
        evaluation=evaluation,
        manifest=manifest,
    )


def run_parse(config: RunConfig) -> dict:
    """The `parse` stage: re-emit every parseable transcript as JsonTurns.

    Normalized files land in output_dir/parsed/; the returned manifest
    (also written) counts exclusions by reason.
    """
    out = Path(config.output_dir) / "parsed"
    out.mkdir(parents=True, exist_ok=True)
    files = list_transcript_files(config.transcript_dir)
    exclusions: list[Exclusion] = []
    parsed = 0
    for path in files:
        try:
            call = load_paired_call(path)
        except MalformedInput as exc:
            exclusions.append(Exclusion(path.name, "malformed_input", str(exc)))
            continue
        except NoPairsFound as exc:
            exclusions.append(Exclusion(path.name, "no_pairs_found", str(exc)))
            continue
        (out / (path.stem + ".json")).write_text(transcript.to_json_turns(call))
        parsed += 1
    by_reason: dict[str, int] = {}
    for exc in exclusions:
        by_reason[exc.reason] = by_reason.get(exc.reason, 0) + 1
    manifest = {
        "config": config.echo(),
        "parse": {
            "total_files": len(files),
            "parsed": parsed,
            "excluded": by_reason,
            "exclusions": [e.__dict__ for e in exclusions],
        },
    }
    (Path(config.output_dir) / "manifest.json").write_text(
        json.dumps(manifest, sort_keys=True, indent=2) + "\n"
    )
    return manifest


def _kernel_path_name() -> str:
    from . import kernels

    return kernels.active_path()
