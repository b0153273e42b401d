"""Labeled answer-pair datasets: loading, validation, dedup, partitioning, stats.

Datasets are immutable. answer_a is the ground truth (first answer for the
symmetric-annotation datasets), answer_b the prediction (second answer).
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path
from typing import Iterator, Optional

from .errors import (
    EmptyDataset,
    ParseError,
    SchemaError,
    UnlabeledRecord,
)
from .lexmetrics import NormalizationProfile, token_f1

VALID_LABELS = (0, 1, 2)
VALID_LANGS = ("en", "de")
FIELDS = ("id", "question", "answer_a", "answer_b", "label", "lang", "category")

ABLATION_MODES = ("drop_rows_with_digit_in_a", "strip_digits_both", "strip_digits_a_only")


@dataclass(frozen=True)
class EvalRecord:
    """One answer pair with an optional 3-way human label (0 dissimilar,
    1 somewhat similar, 2 same meaning)."""

    id: str
    answer_a: str
    answer_b: str
    question: Optional[str] = None
    label: Optional[int] = None
    lang: str = "en"
    category: Optional[str] = None


@dataclass(frozen=True)
class Dataset:
    name: str
    records: tuple[EvalRecord, ...]
    lang: str = "en"

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self) -> Iterator[EvalRecord]:
        return iter(self.records)

    def profile(self) -> NormalizationProfile:
        return NormalizationProfile.for_language(self.lang)


class PartitionKey(Enum):
    F1_ZERO = "f1_zero"
    F1_NONZERO = "f1_nonzero"
    ALL = "all"


def text_ref(record_id: str, side: str) -> str:
    """Stable text id for one side of a record, used to key embedding files."""
    if side not in ("a", "b"):
        raise ValueError(f"side must be 'a' or 'b', got {side!r}")
    return f"{record_id}#{side}"


def _validate_record(row: dict, row_num: int, seen_ids: set) -> EvalRecord:
    for field in ("id", "answer_a", "answer_b", "lang"):
        if row.get(field) in (None, ""):
            raise SchemaError(f"row {row_num}: missing required field {field!r}")
    record_id = str(row["id"])
    if record_id in seen_ids:
        raise SchemaError(f"row {row_num}: duplicate id {record_id!r}")
    answer_a = str(row["answer_a"]).strip()
    answer_b = str(row["answer_b"]).strip()
    if not answer_a or not answer_b:
        raise SchemaError(f"row {row_num}: answers must be non-empty after trimming")
    label = row.get("label")
    if label is not None:
        try:
            label = int(label)
        except (TypeError, ValueError):
            raise SchemaError(f"row {row_num}: label {row['label']!r} is not an integer") from None
        if label not in VALID_LABELS:
            raise SchemaError(f"row {row_num}: label {label} outside {{0, 1, 2}}")
    lang = str(row["lang"])
    if lang not in VALID_LANGS:
        raise SchemaError(f"row {row_num}: unsupported lang {lang!r}")
    norm = NormalizationProfile.for_language(lang)
    if not norm.tokens(answer_a) and not norm.tokens(answer_b):
        raise SchemaError(f"row {row_num}: both answers normalize to nothing")
    question = row.get("question")
    category = row.get("category")
    seen_ids.add(record_id)
    return EvalRecord(
        id=record_id,
        answer_a=answer_a,
        answer_b=answer_b,
        question=str(question) if question not in (None, "") else None,
        label=label,
        lang=lang,
        category=str(category) if category not in (None, "") else None,
    )


def _iter_ndjson(path: Path) -> Iterator[tuple[int, dict]]:
    with path.open(encoding="utf-8") as handle:
        for row_num, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                row = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"row {row_num}: invalid JSON ({exc.msg})") from None
            if not isinstance(row, dict):
                raise ParseError(f"row {row_num}: expected an object")
            yield row_num, row


def _iter_csv(path: Path) -> Iterator[tuple[int, dict]]:
    with path.open(encoding="utf-8", newline="") as handle:
        reader = csv.DictReader(handle)
        if reader.fieldnames is None:
            raise ParseError("row 1: missing CSV header")
        missing = set(("id", "answer_a", "answer_b", "lang")) - set(reader.fieldnames)
        if missing:
            raise SchemaError(f"CSV header missing columns: {sorted(missing)}")
        for row_num, row in enumerate(reader, start=2):
            yield row_num, {k: (v if v != "" else None) for k, v in row.items()}


def load_dataset(path, format: Optional[str] = None, name: Optional[str] = None) -> Dataset:
    """Load a dataset from NDJSON or CSV, preserving input order.

    Rows failing schema validation (label outside {0,1,2}, empty answers,
    duplicate ids, both answers normalizing to nothing) raise SchemaError
    with the offending row number; malformed rows raise ParseError.
    """
    path = Path(path)
    if not path.exists():
        raise ParseError(f"dataset file not found: {path}")
    if format is None:
        format = "csv" if path.suffix.lower() == ".csv" else "ndjson"
    if format not in ("ndjson", "csv"):
        raise ParseError(f"unsupported dataset format {format!r}")
    rows = _iter_csv(path) if format == "csv" else _iter_ndjson(path)
    seen_ids: set = set()
    records = [_validate_record(row, row_num, seen_ids) for row_num, row in rows]
    lang_counts: dict[str, int] = {}
    for record in records:
        lang_counts[record.lang] = lang_counts.get(record.lang, 0) + 1
    dominant = max(lang_counts, key=lambda l: lang_counts[l]) if lang_counts else "en"
    return Dataset(name=name or path.stem, records=tuple(records), lang=dominant)


def save_dataset(dataset: Dataset, path, format: str = "ndjson") -> None:
    path = Path(path)
    if format == "ndjson":
        with path.open("w", encoding="utf-8") as handle:
            for r in dataset:
                row = {
                    "id": r.id,
                    "question": r.question,
                    "answer_a": r.answer_a,
                    "answer_b": r.answer_b,
                    "label": r.label,
                    "lang": r.lang,
                    "category": r.category,
                }
                handle.write(json.dumps(row, ensure_ascii=False) + "\n")
    elif format == "csv":
        with path.open("w", encoding="utf-8", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(FIELDS)
            for r in dataset:
                writer.writerow(
                    [r.id, r.question or "", r.answer_a, r.answer_b,
                     "" if r.label is None else r.label, r.lang, r.category or ""]
                )
    else:
        raise ValueError(f"unsupported dataset format {format!r}")


def _dedup_key(record: EvalRecord) -> tuple:
    norm = NormalizationProfile.for_language(record.lang)
    return (tuple(norm.tokens(record.answer_a)), tuple(norm.tokens(record.answer_b)))


def dedup(dataset: Dataset) -> tuple[Dataset, int]:
    """Drop repeated normalized (answer_a, answer_b) pairs, keeping the first.

    The key is the ordered pair: ground truth and prediction are directional.
    """
    seen: set = set()
    kept = []
    for record in dataset:
        key = _dedup_key(record)
        if key not in seen:
            seen.add(key)
            kept.append(record)
    return replace(dataset, records=tuple(kept)), len(dataset) - len(kept)


def partition(dataset: Dataset, norm: Optional[NormalizationProfile] = None) -> dict[PartitionKey, Dataset]:
    """Split into no-token-overlap (token F1 = 0) vs some-overlap records.

    Exhaustive and exclusive: every record lands in exactly one bucket.
    """
    if norm is None:
        norm = dataset.profile()
    zero, nonzero = [], []
    for record in dataset:
        if token_f1(record.answer_a, record.answer_b, norm) == 0.0:
            zero.append(record)
        else:
            nonzero.append(record)
    return {
        PartitionKey.F1_ZERO: replace(dataset, name=f"{dataset.name}[f1=0]", records=tuple(zero)),
        PartitionKey.F1_NONZERO: replace(dataset, name=f"{dataset.name}[f1!=0]", records=tuple(nonzero)),
    }


def label_distribution(dataset: Dataset) -> dict[int, float]:
    """Percentage of records per label; requires every record to be labeled."""
    if len(dataset) == 0:
        raise EmptyDataset("cannot compute label distribution of an empty dataset")
    counts = {label: 0 for label in VALID_LABELS}
    for record in dataset:
        if record.label is None:
            raise UnlabeledRecord(f"record {record.id!r} has no label")
        counts[record.label] += 1
    return {label: 100.0 * count / len(dataset) for label, count in counts.items()}


def _contains_digit(text: str) -> bool:
    return any(c in "0123456789" for c in text)


def _strip_digit_tokens(text: str) -> str:
    return " ".join(tok for tok in text.split() if not _contains_digit(tok))


def ablate_numbers(dataset: Dataset, mode: str) -> Dataset:
    """Number-sensitivity ablations.

    drop_rows_with_digit_in_a: remove records whose ground truth contains a
    decimal digit. strip modes: delete whitespace tokens containing a digit
    from the designated side(s), dropping records left with an empty side.
    """
    if mode not in ABLATION_MODES:
        raise ValueError(f"unknown ablation mode {mode!r}")
    kept = []
    for record in dataset:
        if mode == "drop_rows_with_digit_in_a":
            if not _contains_digit(record.answer_a):
                kept.append(record)
            continue
        new_a = _strip_digit_tokens(record.answer_a)
        if mode == "strip_digits_both":
            new_b = _strip_digit_tokens(record.answer_b)
            if new_a and new_b:
                kept.append(replace(record, answer_a=new_a, answer_b=new_b))
        else:
            if new_a:
                kept.append(replace(record, answer_a=new_a))
    return replace(dataset, name=f"{dataset.name}[{mode}]", records=tuple(kept))


def avg_answer_length(dataset: Dataset) -> float:
    """Mean character length over both answers of all records."""
    if len(dataset) == 0:
        raise EmptyDataset("cannot average answer length of an empty dataset")
    total = sum(len(r.answer_a) + len(r.answer_b) for r in dataset)
    return total / (2 * len(dataset))
