"""Pairwise similarity and distance measures used by the embedding ranker.

Cosine and Jaccard form the CJ family (similarity, larger means closer);
Euclidean and Manhattan form the EM family (distance, smaller means
closer).  Jaccard operates on token sets because set intersection over
real-valued vectors is undefined.
"""

from __future__ import annotations

from enum import Enum
from typing import Collection, Sequence, Union

import numpy as np

from .errors import DimensionMismatch, ZeroVector


class MetricFamily(Enum):
    CJ = "similarity"
    EM = "distance"


class MetricKind(Enum):
    COSINE = "cosine"
    JACCARD = "jaccard"
    EUCLIDEAN = "euclidean"
    MANHATTAN = "manhattan"

    @property
    def family(self) -> MetricFamily:
        if self in (MetricKind.COSINE, MetricKind.JACCARD):
            return MetricFamily.CJ
        return MetricFamily.EM


def _as_vectors(a, b) -> tuple[np.ndarray, np.ndarray]:
    va = np.asarray(a, dtype=float)
    vb = np.asarray(b, dtype=float)
    if va.shape != vb.shape or va.ndim != 1:
        raise DimensionMismatch(f"shapes {va.shape} vs {vb.shape}")
    return va, vb


def cosine(a: Sequence[float], b: Sequence[float]) -> float:
    va, vb = _as_vectors(a, b)
    na = float(np.linalg.norm(va))
    nb = float(np.linalg.norm(vb))
    if na == 0.0 or nb == 0.0:
        raise ZeroVector("cosine similarity undefined for a zero vector")
    return float(np.dot(va, vb)) / (na * nb)


def jaccard(a: Collection, b: Collection) -> float:
    sa, sb = set(a), set(b)
    if not sa and not sb:
        return 1.0
    return len(sa & sb) / len(sa | sb)


def euclidean(a: Sequence[float], b: Sequence[float]) -> float:
    va, vb = _as_vectors(a, b)
    return float(np.sqrt(np.sum((va - vb) ** 2)))


def manhattan(a: Sequence[float], b: Sequence[float]) -> float:
    va, vb = _as_vectors(a, b)
    return float(np.sum(np.abs(va - vb)))


def pairwise(metric: MetricKind,
             p_repr: Union[Sequence[float], Collection],
             q_repr: Union[Sequence[float], Collection]) -> float:
    """Apply one of the four measures; Jaccard expects token sets, the
    rest expect equal-length vectors."""
    if metric is MetricKind.COSINE:
        return cosine(p_repr, q_repr)
    if metric is MetricKind.JACCARD:
        return jaccard(p_repr, q_repr)
    if metric is MetricKind.EUCLIDEAN:
        return euclidean(p_repr, q_repr)
    return manhattan(p_repr, q_repr)
