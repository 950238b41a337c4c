"""Cluster-quality and ground-truth recovery metrics."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .core import ClusteringError, as_dataset, squared_distances

SSE_DISTANCES = ("sqeuclidean", "euclidean")
GAP_REDUCTIONS = ("sum", "mean")


@dataclass
class MetricsReport:
    wsse: float
    osse: float
    gap: float | None
    ngap: float | None
    n_points: int
    dim: int
    k: int

    FIELDS = ("wsse", "osse", "gap", "ngap", "n_points", "dim", "k")

    def to_dict(self) -> dict:
        return asdict(self)


def hard_assign(u) -> np.ndarray:
    """Argmax of each membership row, lowest index on ties."""
    u = np.asarray(u, dtype=float)
    if u.ndim != 2:
        raise ClusteringError("membership matrix must be 2-D")
    return np.argmax(u, axis=1)


def _point_center_distances(data, labels, centers, distance):
    x = as_dataset(data)
    c = np.asarray(centers, dtype=float)
    if c.ndim == 1:
        c = c[:, None]
    if c.shape[1] != x.shape[1]:
        raise ClusteringError(f"dimension mismatch: data d={x.shape[1]}, centers d={c.shape[1]}")
    labels = np.asarray(labels, dtype=int)
    if labels.shape != (x.shape[0],):
        raise ClusteringError("labels must have one entry per data point")
    if labels.min() < 0 or labels.max() >= c.shape[0]:
        raise ClusteringError("label out of range for the given centers")
    if distance not in SSE_DISTANCES:
        raise ValueError(f"distance must be one of {SSE_DISTANCES}, got {distance!r}")
    d = squared_distances(x, c)
    if distance == "euclidean":
        d = np.sqrt(d)
    own = np.zeros_like(d, dtype=bool)
    own[np.arange(x.shape[0]), labels] = True
    return d, own, x.shape[0] * x.shape[1]


def wsse(data, labels, centers, distance: str = "sqeuclidean") -> float:
    """Within-cluster sum of squared errors normalised by ``N * d``.

    ``distance="euclidean"`` sums plain distances instead of squared ones.
    """
    d, own, norm = _point_center_distances(data, labels, centers, distance)
    return float(d[own].sum() / norm)


def osse(data, labels, centers, distance: str = "sqeuclidean") -> float:
    """Sum of distances from each point to the centers it is *not* assigned
    to, normalised by ``N * d``. Larger means better separated."""
    d, own, norm = _point_center_distances(data, labels, centers, distance)
    return float(d[~own].sum() / norm)


def match_centers(learned, truth) -> np.ndarray:
    """Permutation ``perm`` minimising ``sum_k ||learned[perm[k]] - truth[k]||``."""
    a = np.atleast_2d(np.asarray(learned, dtype=float))
    b = np.atleast_2d(np.asarray(truth, dtype=float))
    if a.shape != b.shape:
        raise ClusteringError(f"center sets differ in shape: {a.shape} vs {b.shape}")
    # cost[k, j] = ||truth_k - learned_j||
    cost = np.sqrt(squared_distances(b, a))
    rows, cols = linear_sum_assignment(cost)
    perm = np.empty(a.shape[0], dtype=int)
    perm[rows] = cols
    return perm


def knowledge_gap(learned, truth, reduction: str = "sum") -> float:
    """Distance between two center sets under their best correspondence.

    The per-pair Euclidean distances are summed (``reduction="sum"``) or
    averaged over the ``K`` pairs (``reduction="mean"``).
    """
    if reduction not in GAP_REDUCTIONS:
        raise ValueError(f"reduction must be one of {GAP_REDUCTIONS}, got {reduction!r}")
    a = np.atleast_2d(np.asarray(learned, dtype=float))
    b = np.atleast_2d(np.asarray(truth, dtype=float))
    perm = match_centers(a, b)
    dists = np.linalg.norm(a[perm] - b, axis=1)
    total = float(dists.sum())
    return total / a.shape[0] if reduction == "mean" else total


def ngap(gap: float, d: int) -> float:
    if d < 1:
        raise ClusteringError("d must be >= 1")
    return gap / math.sqrt(d)


def evaluate(
    data,
    u,
    centers,
    truth=None,
    distance: str = "sqeuclidean",
    gap_reduction: str = "sum",
) -> MetricsReport:
    """Hard-assign ``u`` and compute every metric for one clustering."""
    x = as_dataset(data)
    c = np.atleast_2d(np.asarray(centers, dtype=float))
    labels = hard_assign(u)
    g = ng = None
    if truth is not None:
        g = knowledge_gap(c, truth, gap_reduction)
        ng = ngap(g, x.shape[1])
    return MetricsReport(
        wsse=wsse(x, labels, c, distance),
        osse=osse(x, labels, c, distance),
        gap=g,
        ngap=ng,
        n_points=x.shape[0],
        dim=x.shape[1],
        k=c.shape[0],
    )
