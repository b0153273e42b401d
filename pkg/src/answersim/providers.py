"""Embedding and pair-score providers: NDJSON interchange files with sha256
manifests, and an HTTP client speaking the /embed + /score-pairs API.

File providers load everything into memory up front; lookups never touch the
filesystem again and return the same objects every time. Vector components
are 32-bit floats on the wire.
"""
from __future__ import annotations

import hashlib
import json
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Optional, Sequence, Union

import httpx
import numpy as np

from .corpus import Dataset, EvalRecord
from .embmetrics import SentenceEmbedding, TokenEmbeddingSet
from .errors import (
    DimensionInconsistent,
    HashMismatch,
    MissingEmbedding,
    MissingManifest,
    MissingScore,
    ParseError,
    RemoteError,
    Timeout,
)

MANIFEST_SUFFIX = ".manifest.json"
DIRECTIONS = ("ab", "ba")


@dataclass(frozen=True)
class ProviderManifest:
    model_id: str
    kind: str  # token | sentence | pair
    dimension: int
    record_count: int
    sha256: str
    layer: Optional[int] = None

    def to_json(self) -> dict:
        payload = {
            "model": self.model_id,
            "kind": self.kind,
            "layer": self.layer,
            "dimension": self.dimension,
            "record_count": self.record_count,
            "sha256": self.sha256,
        }
        if self.kind != "token":
            payload.pop("layer")
        return payload


def manifest_path(data_path) -> Path:
    return Path(str(data_path) + MANIFEST_SUFFIX)


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with path.open("rb") as handle:
        for chunk in iter(lambda: handle.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _f32_list(vector) -> list[float]:
    return [float(v) for v in np.asarray(vector, dtype=np.float32)]


def _write_ndjson(path: Path, rows: Iterable[dict]) -> int:
    count = 0
    with path.open("w", encoding="utf-8") as handle:
        for row in rows:
            handle.write(json.dumps(row, ensure_ascii=False) + "\n")
            count += 1
    return count


def write_token_file(path, sets: Sequence[TokenEmbeddingSet]) -> ProviderManifest:
    path = Path(path)
    if not sets:
        raise ValueError("refusing to write an empty token embedding file")
    rows = (
        {
            "text_id": s.text_id,
            "model": s.model_id,
            "layer": s.layer,
            "tokens": list(s.tokens),
            "vectors": [_f32_list(v) for v in s.vectors],
        }
        for s in sets
    )
    count = _write_ndjson(path, rows)
    manifest = ProviderManifest(
        model_id=sets[0].model_id, kind="token", layer=sets[0].layer,
        dimension=sets[0].dimension, record_count=count, sha256=_sha256(path),
    )
    manifest_path(path).write_text(json.dumps(manifest.to_json()) + "\n", encoding="utf-8")
    return manifest


def write_sentence_file(path, embeddings: Sequence[SentenceEmbedding]) -> ProviderManifest:
    path = Path(path)
    if not embeddings:
        raise ValueError("refusing to write an empty sentence embedding file")
    rows = (
        {"text_id": e.text_id, "model": e.model_id, "vector": _f32_list(e.vector)}
        for e in embeddings
    )
    count = _write_ndjson(path, rows)
    manifest = ProviderManifest(
        model_id=embeddings[0].model_id, kind="sentence",
        dimension=embeddings[0].dimension, record_count=count, sha256=_sha256(path),
    )
    manifest_path(path).write_text(json.dumps(manifest.to_json()) + "\n", encoding="utf-8")
    return manifest


def write_pair_file(path, scores: Sequence[tuple[str, str, float]], model_id: str) -> ProviderManifest:
    """scores: (pair_id, direction, score) triples."""
    path = Path(path)
    if not scores:
        raise ValueError("refusing to write an empty pair-score file")
    rows = (
        {"pair_id": pid, "model": model_id, "direction": direction, "score": float(score)}
        for pid, direction, score in scores
    )
    count = _write_ndjson(path, rows)
    manifest = ProviderManifest(
        model_id=model_id, kind="pair", dimension=0,
        record_count=count, sha256=_sha256(path),
    )
    manifest_path(path).write_text(json.dumps(manifest.to_json()) + "\n", encoding="utf-8")
    return manifest


def _read_manifest(data_path: Path) -> ProviderManifest:
    mpath = manifest_path(data_path)
    if not mpath.exists():
        raise MissingManifest(f"no manifest for {data_path} (expected {mpath.name})")
    raw = json.loads(mpath.read_text(encoding="utf-8"))
    manifest = ProviderManifest(
        model_id=raw["model"], kind=raw["kind"], layer=raw.get("layer"),
        dimension=int(raw["dimension"]), record_count=int(raw["record_count"]),
        sha256=raw["sha256"],
    )
    actual = _sha256(data_path)
    if actual != manifest.sha256:
        raise HashMismatch(f"{data_path}: sha256 {actual} does not match manifest")
    return manifest


def _iter_rows(path: Path) -> Iterable[dict]:
    with path.open(encoding="utf-8") as handle:
        for num, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                yield json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"{path.name} row {num}: invalid JSON ({exc.msg})") from None


class TokenFileProvider:
    """Token embeddings indexed by text_id, all from one model and layer."""

    kind = "token"

    def __init__(self, manifest: ProviderManifest, sets: dict[str, TokenEmbeddingSet]):
        self.manifest = manifest
        self._sets = sets

    @classmethod
    def load(cls, path) -> "TokenFileProvider":
        path = Path(path)
        manifest = _read_manifest(path)
        sets: dict[str, TokenEmbeddingSet] = {}
        for row in _iter_rows(path):
            emb = TokenEmbeddingSet(
                text_id=row["text_id"], model_id=row["model"],
                layer=int(row["layer"]), tokens=tuple(row["tokens"]),
                vectors=np.asarray(row["vectors"], dtype=np.float32),
            )
            if emb.dimension != manifest.dimension:
                raise DimensionInconsistent(
                    f"{emb.text_id!r} has dimension {emb.dimension}, manifest says {manifest.dimension}"
                )
            sets[emb.text_id] = emb
        if len(sets) != manifest.record_count:
            raise DimensionInconsistent(
                f"{path.name}: {len(sets)} records, manifest says {manifest.record_count}"
            )
        return cls(manifest, sets)

    @property
    def model_id(self) -> str:
        return self.manifest.model_id

    @property
    def layer(self) -> int:
        return self.manifest.layer or 0

    def get(self, text_id: str) -> TokenEmbeddingSet:
        try:
            return self._sets[text_id]
        except KeyError:
            raise MissingEmbedding(f"no token embedding for text {text_id!r}") from None

    def as_mapping(self) -> dict[str, TokenEmbeddingSet]:
        return dict(self._sets)

    def __contains__(self, text_id: str) -> bool:
        return text_id in self._sets


class SentenceFileProvider:
    kind = "sentence"

    def __init__(self, manifest: ProviderManifest, embeddings: dict[str, SentenceEmbedding]):
        self.manifest = manifest
        self._embeddings = embeddings

    @classmethod
    def load(cls, path) -> "SentenceFileProvider":
        path = Path(path)
        manifest = _read_manifest(path)
        embeddings: dict[str, SentenceEmbedding] = {}
        for row in _iter_rows(path):
            emb = SentenceEmbedding(
                text_id=row["text_id"], model_id=row["model"],
                vector=np.asarray(row["vector"], dtype=np.float32),
            )
            if emb.dimension != manifest.dimension:
                raise DimensionInconsistent(
                    f"{emb.text_id!r} has dimension {emb.dimension}, manifest says {manifest.dimension}"
                )
            embeddings[emb.text_id] = emb
        if len(embeddings) != manifest.record_count:
            raise DimensionInconsistent(
                f"{path.name}: {len(embeddings)} records, manifest says {manifest.record_count}"
            )
        return cls(manifest, embeddings)

    @property
    def model_id(self) -> str:
        return self.manifest.model_id

    def get(self, text_id: str) -> SentenceEmbedding:
        try:
            return self._embeddings[text_id]
        except KeyError:
            raise MissingEmbedding(f"no sentence embedding for text {text_id!r}") from None

    def as_mapping(self) -> dict[str, SentenceEmbedding]:
        return dict(self._embeddings)


class PairScoreFileProvider:
    """Cross-encoder scores keyed by (pair_id, direction); never computed here."""

    kind = "pair"

    def __init__(self, manifest: ProviderManifest, scores: dict[tuple[str, str], float]):
        self.manifest = manifest
        self._scores = scores

    @classmethod
    def load(cls, path) -> "PairScoreFileProvider":
        path = Path(path)
        manifest = _read_manifest(path)
        scores: dict[tuple[str, str], float] = {}
        for row in _iter_rows(path):
            direction = row["direction"]
            if direction not in DIRECTIONS:
                raise ParseError(f"{path.name}: bad direction {direction!r}")
            scores[(str(row["pair_id"]), direction)] = float(row["score"])
        if len(scores) != manifest.record_count:
            raise DimensionInconsistent(
                f"{path.name}: {len(scores)} records, manifest says {manifest.record_count}"
            )
        return cls(manifest, scores)

    @property
    def model_id(self) -> str:
        return self.manifest.model_id

    def get(self, pair_id: str, direction: str = "ab") -> float:
        try:
            return self._scores[(pair_id, direction)]
        except KeyError:
            raise MissingScore(f"no {direction} score for pair {pair_id!r}") from None

    def has(self, pair_id: str, direction: str) -> bool:
        return (pair_id, direction) in self._scores


FileProvider = Union[TokenFileProvider, SentenceFileProvider, PairScoreFileProvider]

_PROVIDER_KINDS = {
    "token": TokenFileProvider,
    "sentence": SentenceFileProvider,
    "pair": PairScoreFileProvider,
}


def file_provider_load(path) -> FileProvider:
    """Load whichever provider the manifest declares."""
    path = Path(path)
    manifest = _read_manifest(path)
    try:
        cls = _PROVIDER_KINDS[manifest.kind]
    except KeyError:
        raise ParseError(f"unknown provider kind {manifest.kind!r}") from None
    return cls.load(path)


def sas_lookup(provider: PairScoreFileProvider, record: EvalRecord, direction: str = "ab") -> float:
    """Stored cross-encoder score for a record's answer pair, unmodified."""
    if direction not in DIRECTIONS:
        raise ValueError(f"direction must be one of {DIRECTIONS}, got {direction!r}")
    return provider.get(record.id, direction)


class HttpProviderClient:
    """Client for the embedding/pair-scoring HTTP API.

    POST {endpoint}/embed    {"texts": [...], "mode": "token"|"sentence", "layer": n}
    POST {endpoint}/score-pairs  {"pairs": [[a, b], ...]}

    Transient failures (5xx, timeouts) retry with exponential backoff up to
    max_retries; retry counts accumulate on .retries_recorded. Multi-batch
    fetches run at most max_in_flight requests concurrently and reassemble
    results in input order.
    """

    def __init__(
        self,
        endpoint: str,
        batch_size: int = 32,
        max_retries: int = 3,
        backoff: float = 0.25,
        timeout: float = 30.0,
        max_in_flight: int = 4,
    ):
        if batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        self.endpoint = endpoint.rstrip("/")
        self.batch_size = batch_size
        self.max_retries = max_retries
        self.backoff = backoff
        self.max_in_flight = max(1, max_in_flight)
        self._client = httpx.Client(timeout=timeout)
        self._lock = threading.Lock()
        self.retries_recorded = 0

    def close(self) -> None:
        self._client.close()

    def __enter__(self) -> "HttpProviderClient":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    def _post(self, path: str, payload: dict) -> dict:
        attempt = 0
        while True:
            try:
                response = self._client.post(self.endpoint + path, json=payload)
            except httpx.TimeoutException as exc:
                if attempt >= self.max_retries:
                    raise Timeout(f"{path} timed out after {attempt} retries") from exc
                self._sleep_and_count(attempt)
                attempt += 1
                continue
            except httpx.HTTPError as exc:
                raise RemoteError(f"{path}: transport failure ({exc})") from exc
            if response.status_code >= 500:
                if attempt >= self.max_retries:
                    raise RemoteError(
                        f"{path}: status {response.status_code}: {response.text[:200]}"
                    )
                self._sleep_and_count(attempt)
                attempt += 1
                continue
            if response.status_code >= 400:
                raise RemoteError(f"{path}: status {response.status_code}: {response.text[:200]}")
            return response.json()

    def _sleep_and_count(self, attempt: int) -> None:
        with self._lock:
            self.retries_recorded += 1
        if self.backoff > 0:
            time.sleep(self.backoff * (2 ** attempt))

    def fetch_sentence(self, texts: Sequence[tuple[str, str]], model_hint: str = "") -> list[SentenceEmbedding]:
        """texts: (text_id, text) pairs; returns embeddings in input order."""
        results: list[Optional[SentenceEmbedding]] = [None] * len(texts)

        def run(start: int, chunk: list[tuple[str, str]]):
            payload = {"texts": [t for _, t in chunk], "mode": "sentence", "layer": 0}
            body = self._post("/embed", payload)
            vectors = body["embeddings"]
            dim = int(body["dimension"])
            if len(vectors) != len(chunk):
                raise RemoteError(f"/embed returned {len(vectors)} embeddings for {len(chunk)} texts")
            for offset, ((text_id, _), vec) in enumerate(zip(chunk, vectors)):
                arr = np.asarray(vec, dtype=np.float32)
                if arr.ndim != 1 or arr.size != dim:
                    raise DimensionInconsistent(
                        f"/embed returned dimension {arr.shape} for {text_id!r}, expected {dim}"
                    )
                results[start + offset] = SentenceEmbedding(
                    text_id=text_id, model_id=body["model"], vector=arr
                )

        self._run_batches(texts, run)
        return results  # type: ignore[return-value]

    def fetch_token(
        self, texts: Sequence[tuple[str, str]], layer: int
    ) -> list[TokenEmbeddingSet]:
        results: list[Optional[TokenEmbeddingSet]] = [None] * len(texts)

        def run(start: int, chunk: list[tuple[str, str]]):
            payload = {"texts": [t for _, t in chunk], "mode": "token", "layer": layer}
            body = self._post("/embed", payload)
            embeddings = body["embeddings"]
            dim = int(body["dimension"])
            if len(embeddings) != len(chunk):
                raise RemoteError(f"/embed returned {len(embeddings)} embeddings for {len(chunk)} texts")
            for offset, ((text_id, _), item) in enumerate(zip(chunk, embeddings)):
                vectors = np.asarray(item["vectors"], dtype=np.float32)
                if vectors.ndim != 2 or vectors.shape[1] != dim:
                    raise DimensionInconsistent(
                        f"/embed returned shape {vectors.shape} for {text_id!r}, expected (*, {dim})"
                    )
                results[start + offset] = TokenEmbeddingSet(
                    text_id=text_id, model_id=body["model"], layer=layer,
                    tokens=tuple(item["tokens"]), vectors=vectors,
                )

        self._run_batches(texts, run)
        return results  # type: ignore[return-value]

    def score_pairs(self, pairs: Sequence[tuple[str, str]]) -> list[float]:
        results: list[Optional[float]] = [None] * len(pairs)

        def run(start: int, chunk: list[tuple[str, str]]):
            body = self._post("/score-pairs", {"pairs": [list(p) for p in chunk]})
            scores = body["scores"]
            if len(scores) != len(chunk):
                raise RemoteError(f"/score-pairs returned {len(scores)} scores for {len(chunk)} pairs")
            for offset, score in enumerate(scores):
                results[start + offset] = float(score)

        self._run_batches(pairs, run)
        return results  # type: ignore[return-value]

    def _run_batches(self, items: Sequence, run: Callable[[int, list], None]) -> None:
        chunks = [
            (start, list(items[start : start + self.batch_size]))
            for start in range(0, len(items), self.batch_size)
        ]
        if not chunks:
            return
        if len(chunks) == 1 or self.max_in_flight == 1:
            for start, chunk in chunks:
                run(start, chunk)
            return
        with ThreadPoolExecutor(max_workers=self.max_in_flight) as pool:
            futures = [pool.submit(run, start, chunk) for start, chunk in chunks]
            for future in futures:
                future.result()


@dataclass(frozen=True)
class SymmetryRow:
    record_id: str
    score_ab: float
    score_ba: float

    @property
    def gap(self) -> float:
        return abs(self.score_ab - self.score_ba)


@dataclass(frozen=True)
class SymmetryReport:
    rows: tuple[SymmetryRow, ...]
    max_gap: float
    mean_gap: float


def audit_symmetry(score_fn: Callable[[EvalRecord, str], float], dataset: Dataset) -> SymmetryReport:
    """Score every record in both directions and report |ab - ba| gaps,
    largest first (record id breaks ties)."""
    rows = [
        SymmetryRow(record_id=r.id, score_ab=score_fn(r, "ab"), score_ba=score_fn(r, "ba"))
        for r in dataset
    ]
    rows.sort(key=lambda row: (-row.gap, row.record_id))
    if rows:
        max_gap = max(row.gap for row in rows)
        mean_gap = sum(row.gap for row in rows) / len(rows)
    else:
        max_gap = mean_gap = 0.0
    return SymmetryReport(rows=tuple(rows), max_gap=max_gap, mean_gap=mean_gap)


def metric_scorer(metric_fn: Callable[[str, str], float]) -> Callable[[EvalRecord, str], float]:
    """Adapt a two-text metric to the directional audit interface."""

    def score(record: EvalRecord, direction: str) -> float:
        if direction == "ab":
            return float(metric_fn(record.answer_a, record.answer_b))
        if direction == "ba":
            return float(metric_fn(record.answer_b, record.answer_a))
        raise ValueError(f"direction must be 'ab' or 'ba', got {direction!r}")

    return score


def pair_provider_scorer(provider: PairScoreFileProvider) -> Callable[[EvalRecord, str], float]:
    def score(record: EvalRecord, direction: str) -> float:
        return sas_lookup(provider, record, direction)

    return score
