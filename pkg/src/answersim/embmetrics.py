"""Embedding-based similarity: greedy max-cosine token matching and
sentence-vector cosine, with optional idf weighting and a per-layer sweep.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from .corpus import Dataset, PartitionKey, text_ref
from .errors import (
    DimensionMismatch,
    EmptyCorpus,
    LayerMismatch,
    MissingEmbedding,
    MissingLayer,
    ModelMismatch,
    ZeroVector,
)
from .lexmetrics import NormalizationProfile
from .rankstats import CorrelationOutcome, correlate_partitioned


def _as_matrix(vectors) -> np.ndarray:
    arr = np.array(vectors, dtype=np.float64)  # always copy; set read-only below
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise DimensionMismatch(f"expected a (tokens, dim) matrix, got shape {arr.shape}")
    return arr


@dataclass(frozen=True)
class TokenEmbeddingSet:
    """Per-token vectors for one text, extracted from one model layer."""

    text_id: str
    model_id: str
    layer: int
    tokens: tuple[str, ...]
    vectors: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "tokens", tuple(self.tokens))
        matrix = _as_matrix(self.vectors)
        object.__setattr__(self, "vectors", matrix)
        matrix.flags.writeable = False
        if len(self.tokens) != matrix.shape[0]:
            raise DimensionMismatch(
                f"{len(self.tokens)} tokens but {matrix.shape[0]} vectors for {self.text_id!r}"
            )
        if self.layer < 0:
            raise ValueError(f"layer must be >= 0, got {self.layer}")
        norms = np.linalg.norm(matrix, axis=1)
        if not np.isfinite(matrix).all():
            raise ZeroVector(f"non-finite vector entries in {self.text_id!r}")
        if (norms == 0.0).any():
            raise ZeroVector(f"all-zero token vector in {self.text_id!r}")

    @property
    def dimension(self) -> int:
        return int(self.vectors.shape[1])


@dataclass(frozen=True)
class SentenceEmbedding:
    """Pooled vector for one text, for bi-encoder cosine scoring."""

    text_id: str
    model_id: str
    vector: np.ndarray = field(repr=False)

    def __post_init__(self):
        vec = np.array(self.vector, dtype=np.float64)
        object.__setattr__(self, "vector", vec)
        vec.flags.writeable = False
        if vec.ndim != 1 or vec.size < 1:
            raise DimensionMismatch(f"expected a 1-d vector, got shape {vec.shape}")
        if not np.isfinite(vec).all():
            raise ZeroVector(f"non-finite vector entries in {self.text_id!r}")
        if np.linalg.norm(vec) == 0.0:
            raise ZeroVector(f"all-zero sentence vector for {self.text_id!r}")

    @property
    def dimension(self) -> int:
        return int(self.vector.size)


@dataclass(frozen=True)
class IdfTable:
    """ln((M+1)/(df+1)) weights; unseen tokens fall back to df = 0."""

    model_id: str
    doc_count: int
    weights: Mapping[str, float]

    def weight(self, token: str) -> float:
        try:
            return self.weights[token]
        except KeyError:
            return math.log(self.doc_count + 1)


@dataclass(frozen=True)
class BertScoreTriple:
    precision: float
    recall: float
    f1: float


def build_idf(corpus: Iterable[Sequence[str]], model_id: str = "") -> IdfTable:
    """Document-frequency weights over token lists (one list per document)."""
    doc_count = 0
    df: dict[str, int] = {}
    for tokens in corpus:
        doc_count += 1
        for token in set(tokens):
            df[token] = df.get(token, 0) + 1
    if doc_count == 0:
        raise EmptyCorpus("idf table needs at least one document")
    weights = {tok: math.log((doc_count + 1) / (n + 1)) for tok, n in df.items()}
    return IdfTable(model_id=model_id, doc_count=doc_count, weights=weights)


def cosine(u, v) -> float:
    """Cosine similarity, clamped to [-1, 1] against rounding."""
    ua = np.asarray(u, dtype=np.float64)
    va = np.asarray(v, dtype=np.float64)
    if ua.shape != va.shape or ua.ndim != 1:
        raise DimensionMismatch(f"vectors differ in shape: {ua.shape} vs {va.shape}")
    nu = np.linalg.norm(ua)
    nv = np.linalg.norm(va)
    if nu == 0.0 or nv == 0.0:
        raise ZeroVector("cosine is undefined for an all-zero vector")
    return float(min(1.0, max(-1.0, float(ua @ va) / (nu * nv))))


def _unit_rows(matrix: np.ndarray) -> np.ndarray:
    return matrix / np.linalg.norm(matrix, axis=1, keepdims=True)


def _weighted_mean(values: np.ndarray, weights: np.ndarray) -> float:
    total = float(weights.sum())
    if total <= 0.0:
        # every token ubiquitous in the idf corpus; fall back to uniform
        return float(values.mean())
    return float((values * weights).sum() / total)


def bert_score(
    reference: TokenEmbeddingSet,
    candidate: TokenEmbeddingSet,
    idf: Optional[IdfTable] = None,
) -> BertScoreTriple:
    """Greedy max-cosine token matching.

    recall averages each reference token's best cosine against the candidate
    tokens, precision the mirror image; averages are idf-weighted when a
    table is given. f1 is the harmonic mean, 0 when P + R <= 0.
    """
    if reference.model_id != candidate.model_id:
        raise ModelMismatch(
            f"model {reference.model_id!r} vs {candidate.model_id!r}"
        )
    if reference.layer != candidate.layer:
        raise LayerMismatch(f"layer {reference.layer} vs {candidate.layer}")
    if reference.dimension != candidate.dimension:
        raise DimensionMismatch(
            f"dimension {reference.dimension} vs {candidate.dimension}"
        )
    sim = np.clip(_unit_rows(reference.vectors) @ _unit_rows(candidate.vectors).T, -1.0, 1.0)
    if idf is None:
        ref_weights = np.ones(len(reference.tokens))
        cand_weights = np.ones(len(candidate.tokens))
    else:
        ref_weights = np.array([idf.weight(t) for t in reference.tokens])
        cand_weights = np.array([idf.weight(t) for t in candidate.tokens])
    recall = _weighted_mean(sim.max(axis=1), ref_weights)
    precision = _weighted_mean(sim.max(axis=0), cand_weights)
    f1 = 2.0 * precision * recall / (precision + recall) if precision + recall > 0.0 else 0.0
    return BertScoreTriple(precision=precision, recall=recall, f1=f1)


def bi_encoder_score(a: SentenceEmbedding, b: SentenceEmbedding) -> float:
    """Cosine of two independently pooled sentence vectors; exactly symmetric."""
    if a.model_id != b.model_id:
        raise ModelMismatch(f"model {a.model_id!r} vs {b.model_id!r}")
    return cosine(a.vector, b.vector)


@dataclass(frozen=True)
class LayerSweepRow:
    layer: int
    partition: PartitionKey
    outcome: CorrelationOutcome


def layer_sweep(
    dataset: Dataset,
    sets_by_layer: Mapping[int, Mapping[str, TokenEmbeddingSet]],
    layers: Optional[Sequence[int]] = None,
    use_idf: bool = False,
    norm: Optional[NormalizationProfile] = None,
) -> list[LayerSweepRow]:
    """Token-matching f1 correlated against labels, one row per layer and
    partition. sets_by_layer maps layer -> text_id -> TokenEmbeddingSet,
    with text ids following text_ref(record_id, side).
    """
    if layers is None:
        layers = sorted(sets_by_layer)
    rows: list[LayerSweepRow] = []
    for layer in layers:
        if layer not in sets_by_layer:
            raise MissingLayer(f"no embeddings for layer {layer}")
        sets = sets_by_layer[layer]
        idf_table = None
        if use_idf:
            idf_table = build_idf(
                [_lookup(sets, text_ref(r.id, "a"), layer).tokens for r in dataset]
            )
        scores = {}
        for record in dataset:
            ref = _lookup(sets, text_ref(record.id, "a"), layer)
            cand = _lookup(sets, text_ref(record.id, "b"), layer)
            scores[record.id] = bert_score(ref, cand, idf_table).f1
        for key, outcome in correlate_partitioned(dataset, scores, norm).items():
            rows.append(LayerSweepRow(layer=layer, partition=key, outcome=outcome))
    return rows


def _lookup(sets: Mapping[str, TokenEmbeddingSet], text_id: str, layer: int) -> TokenEmbeddingSet:
    try:
        return sets[text_id]
    except KeyError:
        raise MissingEmbedding(f"no layer-{layer} embedding for text {text_id!r}") from None
