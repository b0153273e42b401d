"""Correlation of metric scores against human labels.

Kendall is the tau-b variant: the 3-way labels are massively tied, and tau-b
corrects for ties on both sides. Degenerate partitions (too small, constant
scores, all-tied labels) surface as InsufficientData markers rather than
numbers so that report tables cannot silently show a fake 0.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Optional, Union

import numpy as np

from .corpus import Dataset, PartitionKey, partition
from .errors import AllTied, ConstantInput, LengthMismatch, MissingScore
from .lexmetrics import NormalizationProfile


@dataclass(frozen=True)
class CorrelationTriple:
    pearson_r: float
    spearman_rho: float
    kendall_tau: float
    n: int


@dataclass(frozen=True)
class InsufficientData:
    reason: str
    n: int


CorrelationOutcome = Union[CorrelationTriple, InsufficientData]


def _as_arrays(x, y) -> tuple[np.ndarray, np.ndarray]:
    xa = np.asarray(x, dtype=np.float64)
    ya = np.asarray(y, dtype=np.float64)
    if xa.shape != ya.shape or xa.ndim != 1:
        raise LengthMismatch(f"inputs must be equal-length vectors, got {xa.shape} and {ya.shape}")
    if xa.size < 2:
        raise LengthMismatch("need at least 2 observations")
    return xa, ya


def pearson(x, y) -> float:
    """Product-moment correlation."""
    xa, ya = _as_arrays(x, y)
    xc = xa - xa.mean()
    yc = ya - ya.mean()
    denom = math.sqrt(float(xc @ xc) * float(yc @ yc))
    if float(xc @ xc) == 0.0 or float(yc @ yc) == 0.0:
        raise ConstantInput("pearson is undefined for a constant input")
    return float(xc @ yc) / denom


def average_ranks(x) -> np.ndarray:
    """1-based ranks; tied values get the mean of the ranks they cover."""
    xa = np.asarray(x, dtype=np.float64)
    order = np.argsort(xa, kind="stable")
    ranks = np.empty(xa.size, dtype=np.float64)
    i = 0
    while i < xa.size:
        j = i
        while j + 1 < xa.size and xa[order[j + 1]] == xa[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def spearman(x, y) -> float:
    """Pearson correlation of average-ran, average-ranked data."""
    xa, ya = _as_arrays(x, y)
    return pearson(average_ranks(xa), average_ranks(ya))


def _tie_correction(values: np.ndarray) -> int:
    _, counts = np.unique(values, return_counts=True)
    return int((counts * (counts - 1) // 2).sum())


def kendall(x, y) -> float:
    """Kendall tau-b: (C - D) / sqrt((n0 - n1)(n0 - n2)) with tie corrections."""
    xa, ya = _as_arrays(x, y)
    n = xa.size
    n0 = n * (n - 1) // 2
    n1 = _tie_correction(xa)
    n2 = _tie_correction(ya)
    if n0 == n1 or n0 == n2:
        raise AllTied("kendall is undefined when one side is entirely tied")
    # sum over all ordered pairs of sign(dx)*sign(dy) equals 2(C - D)
    numerator2 = 0
    block = 512
    for start in range(0, n, block):
        dx = np.sign(xa[start : start + block, None] - xa[None, :])
        dy = np.sign(ya[start : start + block, None] - ya[None, :])
        numerator2 += int((dx * dy).sum())
    concordant_minus_discordant = numerator2 // 2
    return concordant_minus_discordant / math.sqrt(float(n0 - n1) * float(n0 - n2))


def correlate(x, y) -> CorrelationTriple:
    """All three correlations at once; raises on degenerate inputs."""
    xa, ya = _as_arrays(x, y)
    return CorrelationTriple(
        pearson_r=pearson(xa, ya),
        spearman_rho=spearman(xa, ya),
        kendall_tau=kendall(xa, ya),
        n=int(xa.size),
    )


def count_unlabeled(dataset: Dataset) -> int:
    return sum(1 for r in dataset if r.label is None)


def correlate_partitioned(
    dataset: Dataset,
    metric_scores: Mapping[str, float],
    norm: Optional[NormalizationProfile] = None,
) -> dict[PartitionKey, CorrelationOutcome]:
    """Correlate one metric's scores against labels on each overlap partition.

    Unlabeled records are excluded. Every labeled record must have a score.
    """
    buckets = {PartitionKey.ALL: dataset}
    buckets.update(partition(dataset, norm))
    outcomes: dict[PartitionKey, CorrelationOutcome] = {}
    for key, subset in buckets.items():
        scores, labels = [], []
        for record in subset:
            if record.label is None:
                continue
            if record.id not in metric_scores:
                raise MissingScore(f"labeled record {record.id!r} has no metric score")
            scores.append(metric_scores[record.id])
            labels.append(float(record.label))
        if len(labels) < 2:
            outcomes[key] = InsufficientData("fewer than 2 labeled records", len(labels))
            continue
        try:
            outcomes[key] = correlate(scores, labels)
        except ConstantInput:
            outcomes[key] = InsufficientData("constant input", len(labels))
        except AllTied:
            outcomes[key] = InsufficientData("all tied", len(labels))
    return outcomes
