"""End-to-end evaluation runs: score a dataset with the configured metrics,
correlate against labels per overlap partition, and emit deterministic CSV
and NDJSON outputs.

Output files for one run (all byte-stable given equal inputs and config):
  correlations.csv  one row per metric, r/rho/tau per partition
  scores.ndjson     one line per record with every metric score
  histogram.csv     20-bin score distribution per metric and label
  timings.csv       wall-clock seconds per metric (config order; not
                    covered by the byte-stability guarantee)
"""
from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Optional

from . import lexmetrics
from .corpus import Dataset, PartitionKey, load_dataset, partition, text_ref
from .embmetrics import bert_score, bi_encoder_score, build_idf
from .errors import AnswersimError, EvaluationError, SchemaError, UnsupportedLanguage
from .lexmetrics import NormalizationProfile
from .providers import (
    HttpProviderClient,
    PairScoreFileProvider,
    SentenceFileProvider,
    TokenFileProvider,
    sas_lookup,
)
from .rankstats import CorrelationTriple, InsufficientData, correlate_partitioned

LEXICAL_METRICS = set(lexmetrics.LEXICAL_METRICS)
EMBEDDING_METRICS = {"bert_score": "token", "bi_encoder": "sentence", "sas": "pair"}
ALL_METRICS = tuple(lexmetrics.LEXICAL_METRICS) + tuple(EMBEDDING_METRICS)

PARTITION_ORDER = (PartitionKey.ALL, PartitionKey.F1_ZERO, PartitionKey.F1_NONZERO)
HISTOGRAM_BINS = 20


@dataclass(frozen=True)
class RunConfig:
    dataset: str
    metrics: tuple[str, ...] = tuple(lexmetrics.LEXICAL_METRICS)
    format: Optional[str] = None
    name: Optional[str] = None
    lang: Optional[str] = None
    token_embeddings: Optional[str] = None
    sentence_embeddings: Optional[str] = None
    pair_scores: Optional[str] = None
    layer: int = 0
    idf: bool = False
    output_dir: str = "out"
    seed: int = 0
    http_batch_size: int = 32
    http_max_retries: int = 3

    def validate(self) -> None:
        if not self.dataset:
            raise SchemaError("config: dataset path is required")
        if not self.metrics:
            raise SchemaError("config: at least one metric is required")
        bindings = {
            "token": self.token_embeddings,
            "sentence": self.sentence_embeddings,
            "pair": self.pair_scores,
        }
        for metric in self.metrics:
            if metric in LEXICAL_METRICS:
                continue
            needs = EMBEDDING_METRICS.get(metric)
            if needs is None:
                raise SchemaError(f"config: unknown metric {metric!r}")
            if not bindings[needs]:
                raise SchemaError(f"config: metric {metric!r} needs a {needs} provider binding")


_CONFIG_BOOL = {"true": True, "false": False, "1": True, "0": False, "yes": True, "no": False}


def parse_config_file(path) -> dict[str, str]:
    """Flat key = value lines; '#' starts a comment; blank lines ignored."""
    values: dict[str, str] = {}
    for num, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise SchemaError(f"config line {num}: expected key = value")
        key, value = line.split("=", 1)
        values[key.strip()] = value.strip()
    return values


def config_from_mapping(values: Mapping[str, object]) -> RunConfig:
    kwargs: dict = {}
    for key, raw in values.items():
        if raw is None:
            continue
        if key == "metrics":
            if isinstance(raw, str):
                kwargs["metrics"] = tuple(m.strip() for m in raw.split(",") if m.strip())
            else:
                kwargs["metrics"] = tuple(raw)
        elif key == "idf":
            kwargs["idf"] = raw if isinstance(raw, bool) else _parse_bool(str(raw))
        elif key in ("layer", "seed", "http_batch_size", "http_max_retries"):
            kwargs[key] = int(raw)
        elif key in RunConfig.__dataclass_fields__:
            kwargs[key] = str(raw)
        else:
            raise SchemaError(f"config: unknown key {key!r}")
    if "dataset" not in kwargs:
        raise SchemaError("config: dataset path is required")
    return RunConfig(**kwargs)


def _parse_bool(raw: str) -> bool:
    try:
        return _CONFIG_BOOL[raw.lower()]
    except KeyError:
        raise SchemaError(f"config: cannot parse boolean {raw!r}") from None


@dataclass
class EvalReport:
    dataset_name: str
    n_records: int
    output_dir: str
    files: dict[str, str]
    correlations: dict[str, dict[str, object]]
    timings: list[tuple[str, float]] = field(default_factory=list)


class _ProviderContext:
    """Resolves the provider bindings of a run; bindings may be file paths
    or http(s) endpoints (fetched up front into in-memory providers)."""

    def __init__(self, config: RunConfig, dataset: Dataset):
        self.config = config
        self.dataset = dataset
        self._token: Optional[Mapping] = None
        self._sentence: Optional[Mapping] = None
        self._pair: Optional[PairScoreFileProvider] = None

    @staticmethod
    def _is_http(binding: str) -> bool:
        return binding.startswith("http://") or binding.startswith("https://")

    def _texts(self) -> list[tuple[str, str]]:
        texts = []
        for record in self.dataset:
            texts.append((text_ref(record.id, "a"), record.answer_a))
            texts.append((text_ref(record.id, "b"), record.answer_b))
        return texts

    def token_sets(self) -> Mapping:
        if self._token is None:
            binding = self.config.token_embeddings
            if self._is_http(binding):
                with HttpProviderClient(
                    binding,
                    batch_size=self.config.http_batch_size,
                    max_retries=self.config.http_max_retries,
                ) as client:
                    fetched = client.fetch_token(self._texts(), layer=self.config.layer)
                self._token = {s.text_id: s for s in fetched}
            else:
                self._token = TokenFileProvider.load(binding).as_mapping()
        return self._token

    def sentence_embeddings(self) -> Mapping:
        if self._sentence is None:
            binding = self.config.sentence_embeddings
            if self._is_http(binding):
                with HttpProviderClient(
                    binding,
                    batch_size=self.config.http_batch_size,
                    max_retries=self.config.http_max_retries,
                ) as client:
                    fetched = client.fetch_sentence(self._texts())
                self._sentence = {e.text_id: e for e in fetched}
            else:
                self._sentence = SentenceFileProvider.load(binding).as_mapping()
        return self._sentence

    def pair_provider(self) -> PairScoreFileProvider:
        if self._pair is None:
            binding = self.config.pair_scores
            if self._is_http(binding):
                with HttpProviderClient(
                    binding,
                    batch_size=self.config.http_batch_size,
                    max_retries=self.config.http_max_retries,
                ) as client:
                    scores = client.score_pairs(
                        [(r.answer_a, r.answer_b) for r in self.dataset]
                    )
                table = {(r.id, "ab"): s for r, s in zip(self.dataset, scores)}
                self._pair = _InMemoryPairProvider(table)
            else:
                self._pair = PairScoreFileProvider.load(binding)
        return self._pair


class _InMemoryPairProvider(PairScoreFileProvider):
    def __init__(self, scores: dict):
        self._scores = scores
        self.manifest = None


def _metric_vector(metric: str, dataset: Dataset, norm: NormalizationProfile, ctx: _ProviderContext) -> dict[str, float]:
    scores: dict[str, float] = {}
    if metric in LEXICAL_METRICS:
        func = lexmetrics._METRIC_FUNCS[metric]
        for record in dataset:
            try:
                scores[record.id] = float(func(record.answer_b, record.answer_a, norm))
            except AnswersimError as exc:
                raise EvaluationError(metric, record.id, exc) from exc
        return scores
    if metric == "bert_score":
        sets = ctx.token_sets()
        idf_table = None
        if ctx.config.idf:
            idf_table = build_idf(
                [_get(sets, text_ref(r.id, "a"), metric, r.id).tokens for r in dataset]
            )
        for record in dataset:
            ref = _get(sets, text_ref(record.id, "a"), metric, record.id)
            cand = _get(sets, text_ref(record.id, "b"), metric, record.id)
            try:
                scores[record.id] = bert_score(ref, cand, idf_table).f1
            except AnswersimError as exc:
                raise EvaluationError(metric, record.id, exc) from exc
        return scores
    if metric == "bi_encoder":
        embeddings = ctx.sentence_embeddings()
        for record in dataset:
            a = _get(embeddings, text_ref(record.id, "a"), metric, record.id)
            b = _get(embeddings, text_ref(record.id, "b"), metric, record.id)
            try:
                scores[record.id] = bi_encoder_score(a, b)
            except AnswersimError as exc:
                raise EvaluationError(metric, record.id, exc) from exc
        return scores
    if metric == "sas":
        provider = ctx.pair_provider()
        for record in dataset:
            try:
                scores[record.id] = sas_lookup(provider, record, "ab")
            except AnswersimError as exc:
                raise EvaluationError(metric, record.id, exc) from exc
        return scores
    raise SchemaError(f"unknown metric {metric!r}")


def _get(mapping: Mapping, text_id: str, metric: str, record_id: str):
    try:
        return mapping[text_id]
    except KeyError:
        from .errors import MissingEmbedding

        raise EvaluationError(
            metric, record_id, MissingEmbedding(f"no embedding for text {text_id!r}")
        ) from None


def evaluate(config: RunConfig) -> EvalReport:
    """Run the configured metrics over the dataset and write the report files."""
    config.validate()
    dataset = load_dataset(config.dataset, format=config.format, name=config.name)
    lang = config.lang or dataset.lang
    norm = NormalizationProfile.for_language(lang)
    if "meteor" in config.metrics and lang != "en":
        raise UnsupportedLanguage("meteor is only defined for English datasets")

    ctx = _ProviderContext(config, dataset)
    vectors: dict[str, dict[str, float]] = {}
    timings: list[tuple[str, float]] = []
    for metric in config.metrics:
        started = time.perf_counter()
        vectors[metric] = _metric_vector(metric, dataset, norm, ctx)
        timings.append((metric, time.perf_counter() - started))

    correlations = {
        metric: correlate_partitioned(dataset, vectors[metric], norm)
        for metric in config.metrics
    }

    out_dir = Path(config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    files = {
        "correlations": str(out_dir / "correlations.csv"),
        "scores": str(out_dir / "scores.ndjson"),
        "histogram": str(out_dir / "histogram.csv"),
        "timings": str(out_dir / "timings.csv"),
    }
    _write_correlations_csv(files["correlations"], config.metrics, correlations)
    _write_scores_ndjson(files["scores"], dataset, config.metrics, vectors, norm)
    _write_histogram_csv(files["histogram"], dataset, config.metrics, vectors)
    _write_timings_csv(files["timings"], timings)

    return EvalReport(
        dataset_name=dataset.name,
        n_records=len(dataset),
        output_dir=str(out_dir),
        files=files,
        correlations={
            metric: {key.value: _outcome_json(outcome) for key, outcome in by_part.items()}
            for metric, by_part in correlations.items()
        },
        timings=timings,
    )


def _outcome_json(outcome) -> dict:
    if isinstance(outcome, InsufficientData):
        return {"marker": "insufficient_data", "reason": outcome.reason, "n": outcome.n}
    return {
        "pearson_r": outcome.pearson_r,
        "spearman_rho": outcome.spearman_rho,
        "kendall_tau": outcome.kendall_tau,
        "n": outcome.n,
    }


def _fmt(value: float) -> str:
    return f"{value:.4f}"


def _outcome_cells(outcome) -> list[str]:
    if isinstance(outcome, CorrelationTriple):
        return [_fmt(outcome.pearson_r), _fmt(outcome.spearman_rho), _fmt(outcome.kendall_tau)]
    return [f"insufficient_data:{outcome.reason.replace(' ', '_')}"] * 3


def _write_correlations_csv(path, metrics, correlations) -> None:
    header = ["metric"]
    for key in PARTITION_ORDER:
        for stat in ("r", "rho", "tau"):
            header.append(f"{key.value}_{stat}")
    lines = [",".join(header)]
    for metric in metrics:
        row = [metric]
        for key in PARTITION_ORDER:
            row.extend(_outcome_cells(correlations[metric][key]))
        lines.append(",".join(row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _write_scores_ndjson(path, dataset, metrics, vectors, norm) -> None:
    zero_ids = {r.id for r in partition(dataset, norm)[PartitionKey.F1_ZERO]}
    with Path(path).open("w", encoding="utf-8") as handle:
        for record in dataset:
            row = {
                "record_id": record.id,
                "label": record.label,
                "partition": PartitionKey.F1_ZERO.value
                if record.id in zero_ids
                else PartitionKey.F1_NONZERO.value,
                "scores": {metric: vectors[metric][record.id] for metric in metrics},
            }
            handle.write(json.dumps(row, ensure_ascii=False) + "\n")


def _write_histogram_csv(path, dataset, metrics, vectors) -> None:
    labels_of = {r.id: r.label for r in dataset}
    lines = ["metric,label,bin_index,bin_low,bin_high,count"]
    for metric in metrics:
        values = vectors[metric]
        observed_min = min(values.values()) if values else 0.0
        low = min(0.0, observed_min)
        width = (1.0 - low) / HISTOGRAM_BINS
        for label_key in ("all", "0", "1", "2"):
            counts = [0] * HISTOGRAM_BINS
            for record_id, score in values.items():
                label = labels_of[record_id]
                if label_key != "all" and (label is None or str(label) != label_key):
                    continue
                index = HISTOGRAM_BINS - 1 if score >= 1.0 else int((score - low) / width)
                index = min(max(index, 0), HISTOGRAM_BINS - 1)
                counts[index] += 1
            for index, count in enumerate(counts):
                lines.append(
                    f"{metric},{label_key},{index},{_fmt(low + index * width)},"
                    f"{_fmt(low + (index + 1) * width)},{count}"
                )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _write_timings_csv(path, timings) -> None:
    lines = ["metric,seconds"]
    for metric, seconds in timings:
        lines.append(f"{metric},{seconds:.4f}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
