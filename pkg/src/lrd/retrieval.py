"""Exact k-nearest-neighbor search over descriptor collections.

Search is a brute-force scan; with the dataset sizes this toolkit targets
(tens of thousands of vectors of a few hundred dimensions) that is faster
than building an approximate index and is exact by construction. Ties at
equal distance are broken by ascending source id so results are stable
across platforms and insertion orders.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .descriptor import Descriptor

__all__ = ["DescriptorIndex", "QueryResult", "METRICS", "distance", "build_index", "knn_query"]

_CHI_EPS = 1e-12


def _l1(matrix, q):
    return np.abs(matrix - q).sum(axis=1)


def _l2(matrix, q):
    diff = matrix - q
    return np.sqrt(np.einsum("ij,ij->i", diff, diff))


def _chisq(matrix, q):
    diff = matrix - q
    return (diff * diff / (matrix + q + _CHI_EPS)).sum(axis=1)


def _cosine(matrix, q):
    qn = np.linalg.norm(q)
    mn = np.linalg.norm(matrix, axis=1)
    sim = np.zeros(matrix.shape[0])
    both = mn > 0
    if qn > 0:
        sim[both] = (matrix[both] @ q) / (mn[both] * qn)
        dist = 1.0 - sim
        dist[~both] = 1.0  # zero vs nonzero: maximally dissimilar
    else:
        dist = np.ones(matrix.shape[0])
        dist[~both] = 0.0  # zero vs zero: identical
    return np.maximum(dist, 0.0)


METRICS = {"l1": _l1, "l2": _l2, "chisq": _chisq, "cosine": _cosine}


def _values(x) -> np.ndarray:
    return x.values if isinstance(x, Descriptor) else np.asarray(x, dtype=np.float64)


def distance(a, b, metric: str = "l1") -> float:
    """Distance between two equal-length descriptors under a named metric."""
    if metric not in METRICS:
        raise ValueError(f"unknown metric {metric!r}; choose from {sorted(METRICS)}")
    va, vb = _values(a), _values(b)
    if va.shape != vb.shape:
        raise ValueError(f"length mismatch: {va.shape[0]} vs {vb.shape[0]}")
    return float(METRICS[metric](va.reshape(1, -1), vb)[0])


@dataclass(frozen=True)
class DescriptorIndex:
    """Immutable search structure: one row per descriptor, sorted by id."""

    ids: tuple[str, ...]
    labels: tuple[str, ...]
    matrix: np.ndarray
    params_digest: str
    metric: str

    def __len__(self) -> int:
        return len(self.ids)

    @property
    def descriptor_length(self) -> int:
        return self.matrix.shape[1]


@dataclass(frozen=True)
class QueryResult:
    """Ranked neighbors: ``(source_id, label, distance)``, nearest first."""

    neighbors: tuple[tuple[str, str, float], ...]
    k: int


def build_index(descriptors, labels, metric: str = "l1") -> DescriptorIndex:
    """Assemble an index from parallel descriptor and label sequences."""
    if metric not in METRICS:
        raise ValueError(f"unknown metric {metric!r}; choose from {sorted(METRICS)}")
    descriptors = list(descriptors)
    labels = [str(l) for l in labels]
    if not descriptors:
        raise ValueError("cannot build an empty index")
    if len(descriptors) != len(labels):
        raise ValueError(f"{len(descriptors)} descriptors but {len(labels)} labels")

    length = len(descriptors[0])
    digest = descriptors[0].params_digest
    seen = set()
    for d in descriptors:
        if len(d) != length:
            raise ValueError(f"mixed descriptor lengths: {length} vs {len(d)} (id {d.source_id!r})")
        if d.params_digest != digest:
            raise ValueError(
                f"mixed descriptor configurations in one index: "
                f"{digest!r} vs {d.params_digest!r} (id {d.source_id!r})"
            )
        if d.source_id in seen:
            raise ValueError(f"duplicate source id {d.source_id!r}")
        seen.add(d.source_id)

    order = sorted(range(len(descriptors)), key=lambda i: descriptors[i].source_id)
    matrix = np.stack([descriptors[i].values for i in order])
    return DescriptorIndex(
        ids=tuple(descriptors[i].source_id for i in order),
        labels=tuple(labels[i] for i in order),
        matrix=matrix,
        params_digest=digest,
        metric=metric,
    )


def knn_query(index: DescriptorIndex, query: Descriptor, k: int) -> QueryResult:
    """Exact k nearest entries to ``query`` under the index metric."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    q = _values(query)
    if q.shape[0] != index.descriptor_length:
        raise ValueError(
            f"query length {q.shape[0]} does not match index length {index.descriptor_length}"
        )
    if isinstance(query, Descriptor) and query.params_digest and index.params_digest \
            and query.params_digest != index.params_digest:
        raise ValueError(
            f"query configuration {query.params_digest!r} does not match "
            f"index configuration {index.params_digest!r}"
        )
    dists = METRICS[index.metric](index.matrix, q)
    # rows are id-sorted, so a stable sort breaks distance ties by ascending id
    order = np.argsort(dists, kind="stable")[:k]
    neighbors = tuple((index.ids[i], index.labels[i], float(dists[i])) for i in order)
    return QueryResult(neighbors=neighbors, k=k)
