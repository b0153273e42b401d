"""Generation of augmentation datasets: co-referent name pairs from a
person-data dump, and digit/word number pairs.

All generation is deterministic. Random pairing uses an explicit Fisher-Yates
shuffle driven by a SplitMix64 stream so the same seed reproduces the same
pairs on any platform; the PRNG name and seed are recorded in the output
metadata.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Optional, Sequence

from .errors import MissingScore, ParseError, SchemaError

PRNG_NAME = "splitmix64/fisher-yates-v1"

SOURCE_VARIANT = "variant_positive"
SOURCE_RANDOM = "random_scored"
SOURCE_NUMBER_POS = "number_positive"
SOURCE_NUMBER_NEG = "number_negative"
_SOURCES = (SOURCE_VARIANT, SOURCE_RANDOM, SOURCE_NUMBER_POS, SOURCE_NUMBER_NEG)


@dataclass(frozen=True)
class PersonEntity:
    entity_id: str
    canonical_name: str
    variants: tuple[str, ...]
    nationality: str

    def names(self) -> tuple[str, ...]:
        return (self.canonical_name,) + self.variants


@dataclass(frozen=True)
class NamePair:
    name_a: str
    name_b: str
    label: float
    source: str

    def __post_init__(self):
        if self.source not in _SOURCES:
            raise ValueError(f"unknown pair source {self.source!r}")
        if self.source == SOURCE_VARIANT and self.label != 1.0:
            raise ValueError("variant pairs are positives by construction")
        if self.name_a == self.name_b:
            raise ValueError(f"degenerate pair {self.name_a!r}")


class SplitMix64:
    """Tiny deterministic 64-bit PRNG (SplitMix64), portable across languages."""

    MASK = (1 << 64) - 1

    def __init__(self, seed: int):
        self._state = seed & self.MASK

    def next_u64(self) -> int:
        self._state = (self._state + 0x9E3779B97F4A7C15) & self.MASK
        z = self._state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & self.MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & self.MASK
        return z ^ (z >> 31)

    def below(self, bound: int) -> int:
        # multiply-shift bounded draw
        return (self.next_u64() * bound) >> 64

    def shuffle(self, items: list) -> None:
        for i in range(len(items) - 1, 0, -1):
            j = self.below(i + 1)
            items[i], items[j] = items[j], items[i]


def load_person_dump(path, format: Optional[str] = None) -> list[PersonEntity]:
    """Read a person dump: columns entity_id, name, alternative_names
    (semicolon-joined), nationality. CSV needs a header row."""
    path = Path(path)
    if not path.exists():
        raise ParseError(f"person dump not found: {path}")
    if format is None:
        format = "csv" if path.suffix.lower() == ".csv" else "ndjson"
    entities = []
    for row_num, row in _iter_dump_rows(path, format):
        name = (row.get("name") or "").strip()
        entity_id = str(row.get("entity_id") or "").strip()
        if not name or not entity_id:
            raise SchemaError(f"row {row_num}: entity_id and name are required")
        raw_variants = row.get("alternative_names") or ""
        if isinstance(raw_variants, list):
            variant_list = [str(v) for v in raw_variants]
        else:
            variant_list = str(raw_variants).split(";")
        variants = []
        for variant in (v.strip() for v in variant_list):
            if variant and variant != name and variant not in variants:
                variants.append(variant)
        entities.append(
            PersonEntity(
                entity_id=entity_id,
                canonical_name=name,
                variants=tuple(variants),
                nationality=str(row.get("nationality") or "").strip(),
            )
        )
    return entities


def _iter_dump_rows(path: Path, format: str):
    if format == "csv":
        with path.open(encoding="utf-8", newline="") as handle:
            reader = csv.DictReader(handle)
            for row_num, row in enumerate(reader, start=2):
                yield row_num, row
    elif format == "ndjson":
        with path.open(encoding="utf-8") as handle:
            for row_num, line in enumerate(handle, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    yield row_num, json.loads(line)
                except json.JSONDecodeError as exc:
                    raise ParseError(f"row {row_num}: invalid JSON ({exc.msg})") from None
    else:
        raise ParseError(f"unsupported dump format {format!r}")


def filter_entities(
    entities: Iterable[PersonEntity], nationality: str, max_variants: int = 3
) -> list[PersonEntity]:
    """Keep entities of one nationality with at most max_variants name
    variants; entities with more are conflations of distinct people."""
    if max_variants < 0:
        raise ValueError("max_variants must be >= 0")
    return [
        e
        for e in entities
        if e.nationality == nationality and len(e.variants) <= max_variants
    ]


def variant_pairs(entities: Iterable[PersonEntity]) -> list[NamePair]:
    """All unordered pairs among each entity's names, labeled 1.0.

    Entity order is preserved; within an entity, names are paired in
    lexicographic order.
    """
    pairs = []
    for entity in entities:
        names = sorted(set(entity.names()))
        for i in range(len(names)):
            for j in range(i + 1, len(names)):
                pairs.append(NamePair(names[i], names[j], 1.0, SOURCE_VARIANT))
    return pairs


def random_pairs(names: Sequence[str], seed: int) -> list[tuple[str, str]]:
    """Seeded shuffle, then consecutive positions pair up; odd leftover dropped."""
    if len(names) < 2:
        raise ValueError("need at least 2 names to pair")
    shuffled = list(names)
    SplitMix64(seed).shuffle(shuffled)
    return [
        (shuffled[i], shuffled[i + 1]) for i in range(0, len(shuffled) - 1, 2)
    ]


def score_pairs(
    pairs: Sequence[tuple[str, str]],
    scorer: Callable[[Sequence[tuple[str, str]]], Sequence[Optional[float]]],
) -> list[NamePair]:
    """Label pairs with raw scorer outputs (soft labels, not thresholded)."""
    scores = scorer(pairs)
    if len(scores) != len(pairs):
        raise MissingScore(f"scorer returned {len(scores)} scores for {len(pairs)} pairs")
    labeled = []
    for (name_a, name_b), score in zip(pairs, scores):
        if score is None:
            raise MissingScore(f"no score for pair ({name_a!r}, {name_b!r})")
        labeled.append(NamePair(name_a, name_b, float(score), SOURCE_RANDOM))
    return labeled


_UNITS = (
    "zero", "one", "two", "three", "four", "five", "six", "seven", "eight",
    "nine", "ten", "eleven", "twelve", "thirteen", "fourteen", "fifteen",
    "sixteen", "seventeen", "eighteen", "nineteen",
)
_TENS = (
    "", "", "twenty", "thirty", "forty", "fifty", "sixty", "seventy",
    "eighty", "ninety",
)


def number_to_words(n: int) -> str:
    """English words for 0..999999: hyphenated tens, no 'and'."""
    if not 0 <= n <= 999_999:
        raise ValueError(f"number {n} outside supported range 0..999999")
    if n < 20:
        return _UNITS[n]
    if n < 100:
        tens, unit = divmod(n, 10)
        return _TENS[tens] + ("-" + _UNITS[unit] if unit else "")
    if n < 1000:
        hundreds, rest = divmod(n, 100)
        words = _UNITS[hundreds] + " hundred"
        return words + (" " + number_to_words(rest) if rest else "")
    thousands, rest = divmod(n, 1000)
    words = number_to_words(thousands) + " thousand"
    return words + (" " + number_to_words(rest) if rest else "")


def numbers_dataset(max_n: int) -> list[NamePair]:
    """Digit/word pairs for 0..max_n in both orders (positives) plus each
    number against its successor and predecessor (negatives)."""
    if max_n < 1:
        raise ValueError("max_n must be >= 1")
    pairs = []
    for n in range(max_n + 1):
        digits = str(n)
        words = number_to_words(n)
        pairs.append(NamePair(digits, words, 1.0, SOURCE_NUMBER_POS))
        pairs.append(NamePair(words, digits, 1.0, SOURCE_NUMBER_POS))
        pairs.append(NamePair(digits, str(n + 1), 0.0, SOURCE_NUMBER_NEG))
        if n >= 1:
            pairs.append(NamePair(digits, str(n - 1), 0.0, SOURCE_NUMBER_NEG))
    return pairs


def write_pairs(path, pairs: Sequence[NamePair], metadata: dict) -> None:
    """NDJSON pair file plus a <path>.meta.json sidecar with generation
    parameters (seed, PRNG, counts, scorer model)."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as handle:
        for pair in pairs:
            row = {
                "name_a": pair.name_a,
                "name_b": pair.name_b,
                "label": pair.label,
                "source": pair.source,
            }
            handle.write(json.dumps(row, ensure_ascii=False) + "\n")
    counts: dict[str, int] = {}
    for pair in pairs:
        counts[pair.source] = counts.get(pair.source, 0) + 1
    meta = {"prng": PRNG_NAME, "total_pairs": len(pairs), "counts_by_source": counts}
    meta.update(metadata)
    Path(str(path) + ".meta.json").write_text(
        json.dumps(meta, ensure_ascii=False, sort_keys=True) + "\n", encoding="utf-8"
    )
