"""Request/response models for the evaluation service."""
from __future__ import annotations

from typing import Optional

from pydantic import BaseModel, Field


class ScoreRequest(BaseModel):
    a: str = Field(description="ground-truth answer")
    b: str = Field(description="predicted answer")
    metrics: list[str] = ["em", "f1"]
    lang: str = "en"


class ScoreResponse(BaseModel):
    scores: dict[str, float]


class EvalRequest(BaseModel):
    dataset: str
    metrics: list[str] = ["em", "f1", "bleu", "rouge_l", "meteor"]
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


class EvalResponse(BaseModel):
    dataset: str
    n_records: int
    output_dir: str
    files: dict[str, str]
    correlations: dict[str, dict[str, dict]]
    timings: list[tuple[str, float]]


class PartitionRequest(BaseModel):
    dataset: str
    format: Optional[str] = None
    lang: Optional[str] = None
    output_dir: Optional[str] = None


class PartitionResponse(BaseModel):
    n_records: int
    f1_zero: int
    f1_nonzero: int
    files: dict[str, str] = {}


class DedupRequest(BaseModel):
    dataset: str
    format: Optional[str] = None
    output: Optional[str] = None


class DedupResponse(BaseModel):
    size_before: int
    removed: int
    size_after: int
    output: Optional[str] = None


class AblateRequest(BaseModel):
    dataset: str
    mode: str
    format: Optional[str] = None
    output: Optional[str] = None


class AblateResponse(BaseModel):
    size_before: int
    size_after: int
    output: Optional[str] = None


class NamesGenRequest(BaseModel):
    dump: str
    output: str
    nationality: str = "United States"
    max_variants: int = 3
    seed: int = 0
    format: Optional[str] = None
    include_random: bool = True
    score_endpoint: Optional[str] = None
    http_batch_size: int = 32


class NamesGenResponse(BaseModel):
    entities_total: int
    entities_kept: int
    variant_pairs: int
    random_pairs: int
    total_pairs: int
    output: str


class NumbersGenRequest(BaseModel):
    max_n: int
    output: str


class NumbersGenResponse(BaseModel):
    positives: int
    negatives: int
    total_pairs: int
    output: str


class AuditSymmetryRequest(BaseModel):
    dataset: str
    metric: str
    format: Optional[str] = None
    lang: Optional[str] = None
    token_embeddings: Optional[str] = None
    sentence_embeddings: Optional[str] = None
    pair_scores: Optional[str] = None
    limit: int = 20
    output: Optional[str] = None


class SymmetryRowModel(BaseModel):
    record_id: str
    score_ab: float
    score_ba: float
    gap: float


class AuditSymmetryResponse(BaseModel):
    n_records: int
    max_gap: float
    mean_gap: float
    rows: list[SymmetryRowModel]
    output: Optional[str] = None


class LayerSweepRequest(BaseModel):
    dataset: str
    token_embeddings: list[str]
    format: Optional[str] = None
    lang: Optional[str] = None
    layers: Optional[list[int]] = None
    idf: bool = False


class LayerSweepRowModel(BaseModel):
    layer: int
    partition: str
    outcome: dict


class LayerSweepResponse(BaseModel):
    rows: list[LayerSweepRowModel]


class ErrorResponse(BaseModel):
    error: str
    kind: str = "validation"
