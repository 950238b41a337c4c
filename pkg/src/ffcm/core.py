"""Non-federated k-means and fuzzy c-means kernels.

Everything here is a pure function of its inputs plus an explicit
``numpy.random.Generator``. Arrays follow the usual layout: data is
``(n_points, dim)``, centers ``(k, dim)``, memberships ``(n_points, k)``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np


class ClusteringError(ValueError):
    """Invalid input to a clustering kernel."""


class DegenerateClusterError(ClusteringError):
    """A cluster received zero total membership weight."""

    def __init__(self, clusters):
        self.clusters = list(clusters)
        super().__init__(f"degenerate clusters (zero total weight): {self.clusters}")


class MembershipFormula(str, enum.Enum):
    # exponent 2/(m-1) on squared-distance ratios, as printed
    PAPER_LITERAL = "paper"
    # classical exponent 1/(m-1) on squared-distance ratios
    BEZDEK = "bezdek"


@dataclass(frozen=True)
class FcmConfig:
    m: float = 2.0
    epsilon: float = 1e-4
    max_iter: int = 300
    membership_formula: MembershipFormula = MembershipFormula.PAPER_LITERAL
    rng_seed: int = 0

    def __post_init__(self):
        if not self.m > 1:
            raise ClusteringError(f"fuzziness m must be > 1, got {self.m}")
        if not self.epsilon > 0:
            raise ClusteringError(f"epsilon must be > 0, got {self.epsilon}")
        if self.max_iter < 1:
            raise ClusteringError(f"max_iter must be >= 1, got {self.max_iter}")
        object.__setattr__(self, "membership_formula", MembershipFormula(self.membership_formula))


@dataclass(frozen=True)
class KmeansConfig:
    epsilon: float = 1e-4
    max_iter: int = 300
    n_init: int = 10
    rng_seed: int = 0

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ClusteringError(f"epsilon must be > 0, got {self.epsilon}")
        if self.n_init < 1:
            raise ClusteringError(f"n_init must be >= 1, got {self.n_init}")
        if self.max_iter < 1:
            raise ClusteringError(f"max_iter must be >= 1, got {self.max_iter}")


@dataclass
class KmeansResult:
    centers: np.ndarray
    labels: np.ndarray
    objective: float
    n_iter: int
    history: list[float] = field(default_factory=list)


@dataclass
class FcmResult:
    centers: np.ndarray
    u: np.ndarray
    n_iter: int
    history: list[float] = field(default_factory=list)
    # centers after each iteration, starting with the first center update
    center_trajectory: list[np.ndarray] = field(default_factory=list)


def as_dataset(data) -> np.ndarray:
    """Validate and return ``data`` as a finite 2-D float array."""
    x = np.asarray(data, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2 or x.shape[0] < 1 or x.shape[1] < 1:
        raise ClusteringError(f"data must be a non-empty 2-D array, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ClusteringError("data contains non-finite values")
    return x


def _check_centers(data: np.ndarray, centers) -> np.ndarray:
    c = np.asarray(centers, dtype=float)
    if c.ndim == 1:
        c = c[:, None]
    if c.ndim != 2 or c.shape[0] < 1:
        raise ClusteringError(f"centers must be a non-empty 2-D array, got shape {c.shape}")
    if c.shape[1] != data.shape[1]:
        raise ClusteringError(
            f"dimension mismatch: data has d={data.shape[1]}, centers have d={c.shape[1]}"
        )
    return c


def squared_distances(data: np.ndarray, centers: np.ndarray) -> np.ndarray:
    """Pairwise squared Euclidean distances, shape ``(n_points, k)``.

    Computed from explicit differences rather than the expanded dot-product
    form so that coincident points give exactly zero.
    """
    diff = data[:, None, :] - centers[None, :, :]
    return np.einsum("nkd,nkd->nk", diff, diff)


# ---------------------------------------------------------------------------
# k-means
# ---------------------------------------------------------------------------


def kmeans_assign(data, centers) -> np.ndarray:
    """Index of the nearest center for every point; ties go to the lowest index."""
    x = as_dataset(data)
    c = _check_centers(x, centers)
    # np.argmin returns the first minimum, which is the tie rule we want
    return np.argmin(squared_distances(x, c), axis=1)


def _weighted_means(data: np.ndarray, weights: np.ndarray):
    """Column-weighted means ``weights.T @ data / weights.sum(0)``.

    Returns the means and the per-cluster denominators; clusters with a zero
    denominator get NaN rows that callers must repair.
    """
    num = weights.T @ data
    den = weights.sum(axis=0)
    with np.errstate(invalid="ignore", divide="ignore"):
        centers = num / den[:, None]
    return centers, den


def _one_hot(labels: np.ndarray, k: int) -> np.ndarray:
    a = np.zeros((labels.shape[0], k))
    a[np.arange(labels.shape[0]), labels] = 1.0
    return a


def kmeans_center_update(data, labels, k: int) -> np.ndarray:
    """Per-cluster means of the labelled points.

    An empty cluster is reseeded to the point lying farthest from its own
    (freshly updated) center; several empty clusters are filled in index
    order, each taking a different point.
    """
    x = as_dataset(data)
    labels = np.asarray(labels, dtype=int)
    if labels.shape != (x.shape[0],):
        raise ClusteringError("labels must have one entry per data point")
    if labels.size and (labels.min() < 0 or labels.max() >= k):
        raise ClusteringError(f"labels must lie in [0, {k})")
    centers, den = _weighted_means(x, _one_hot(labels, k))
    empty = np.flatnonzero(den == 0)
    if empty.size:
        filled = ~np.isin(labels, empty)
        dist = np.full(x.shape[0], -1.0)
        dist[filled] = np.sum((x[filled] - centers[labels[filled]]) ** 2, axis=1)
        for j in empty:
            far = int(np.argmax(dist))
            centers[j] = x[far]
            dist[far] = -1.0
    return centers


def kmeans_objective(data, labels, centers) -> float:
    """Sum of squared distances from each point to its assigned center."""
    x = as_dataset(data)
    c = _check_centers(x, centers)
    labels = np.asarray(labels, dtype=int)
    if labels.shape != (x.shape[0],):
        raise ClusteringError("labels must have one entry per data point")
    if labels.min() < 0 or labels.max() >= c.shape[0]:
        raise ClusteringError("label out of range for the given centers")
    return float(np.sum((x - c[labels]) ** 2))


def kmeanspp_init(data, k: int, rng: np.random.Generator) -> np.ndarray:
    """Pick ``k`` distinct data points by D^2 sampling (k-means++)."""
    x = as_dataset(data)
    n = x.shape[0]
    if k < 1:
        raise ClusteringError("k must be >= 1")
    if n < k:
        raise ClusteringError(f"need at least k={k} points, got {n}")
    chosen = [int(rng.integers(n))]
    d2 = np.sum((x - x[chosen[0]]) ** 2, axis=1)
    for _ in range(1, k):
        # already chosen points have weight zero; duplicated rows too
        available = np.ones(n, dtype=bool)
        available[chosen] = False
        w = np.where(available, d2, 0.0)
        total = w.sum()
        if total > 0:
            idx = int(rng.choice(n, p=w / total))
        else:
            # every remaining point coincides with a chosen one
            idx = int(rng.choice(np.flatnonzero(available)))
        chosen.append(idx)
        d2 = np.minimum(d2, np.sum((x - x[idx]) ** 2, axis=1))
    return x[chosen].copy()


def _kmeans_single(x: np.ndarray, init: np.ndarray, config: KmeansConfig) -> KmeansResult:
    k = init.shape[0]
    centers = init
    labels = kmeans_assign(x, centers)
    history = []
    n_iter = 0
    for n_iter in range(1, config.max_iter + 1):
        centers = kmeans_center_update(x, labels, k)
        history.append(kmeans_objective(x, labels, centers))
        new_labels = kmeans_assign(x, centers)
        # squared Frobenius norm of the one-hot difference = 2 * (#changed)
        change = 2.0 * np.count_nonzero(new_labels != labels)
        labels = new_labels
        if change < config.epsilon:
            break
    return KmeansResult(centers, labels, kmeans_objective(x, labels, centers), n_iter, history)


def kmeans_fit(data, k: int, config: KmeansConfig | None = None, init=None) -> KmeansResult:
    """Lloyd iterations from k-means++ seeds, best of ``n_init`` restarts.

    Passing ``init`` warm-starts a single run from the given centers.
    Restart ``r`` draws its seeds from ``SeedSequence([rng_seed, r])`` so runs
    are independent of execution order; ties in the objective keep the
    earliest restart.
    """
    config = config or KmeansConfig()
    x = as_dataset(data)
    if k < 1:
        raise ClusteringError("k must be >= 1")
    if x.shape[0] < k:
        raise ClusteringError(f"need at least k={k} points, got {x.shape[0]}")
    if init is not None:
        return _kmeans_single(x, _check_centers(x, init).copy(), config)
    best = None
    for r in range(config.n_init):
        rng = np.random.default_rng([config.rng_seed, r])
        res = _kmeans_single(x, kmeanspp_init(x, k, rng), config)
        if best is None or res.objective < best.objective:
            best = res
    return best


# ---------------------------------------------------------------------------
# fuzzy c-means
# ---------------------------------------------------------------------------


def _membership_exponent(m: float, formula: MembershipFormula) -> float:
    if MembershipFormula(formula) is MembershipFormula.PAPER_LITERAL:
        return 2.0 / (m - 1.0)
    return 1.0 / (m - 1.0)


def fcm_membership_update(data, centers, config: FcmConfig | None = None) -> np.ndarray:
    """Fuzzy memberships of every point in every cluster.

    ``u_ij = 1 / sum_k (d_ij^2 / d_ik^2) ** p`` with ``p = 2/(m-1)`` in
    paper-literal mode and ``p = 1/(m-1)`` in Bezdek mode. Evaluated in log
    space, which keeps large exponents (small m) from overflowing. A point
    sitting exactly on ``q`` centers gets ``1/q`` on each of them.
    """
    config = config or FcmConfig()
    x = as_dataset(data)
    c = _check_centers(x, centers)
    p = _membership_exponent(config.m, config.membership_formula)
    d2 = squared_distances(x, c)

    zero = d2 == 0.0
    hit = zero.any(axis=1)
    u = np.empty_like(d2)
    if hit.any():
        z = zero[hit].astype(float)
        u[hit] = z / z.sum(axis=1, keepdims=True)
    rest = ~hit
    if rest.any():
        logw = -p * np.log(d2[rest])
        logw -= logw.max(axis=1, keepdims=True)
        w = np.exp(logw)
        u[rest] = w / w.sum(axis=1, keepdims=True)
    return u


def _check_membership(x: np.ndarray, u) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    if u.ndim != 2 or u.shape[0] != x.shape[0]:
        raise ClusteringError(
            f"membership matrix must have shape (n_points, k); got {u.shape} for {x.shape[0]} points"
        )
    return u


def fcm_center_update(data, u, m: float) -> np.ndarray:
    """Membership-weighted means ``sum_i u_ij^m x_i / sum_i u_ij^m``.

    Raises :class:`DegenerateClusterError` if some cluster has zero total
    weight.
    """
    x = as_dataset(data)
    u = _check_membership(x, u)
    centers, den = _weighted_means(x, u**m)
    bad = np.flatnonzero(den == 0)
    if bad.size:
        raise DegenerateClusterError(bad)
    return centers


def fcm_objective(data, u, centers, m: float) -> float:
    """``J_m = sum_i sum_j u_ij^m ||x_i - c_j||^2``."""
    x = as_dataset(data)
    c = _check_centers(x, centers)
    u = _check_membership(x, u)
    if u.shape[1] != c.shape[0]:
        raise ClusteringError(f"membership has {u.shape[1]} clusters, centers have {c.shape[0]}")
    return float(np.sum(u**m * squared_distances(x, c)))


def random_membership(n: int, k: int, rng: np.random.Generator) -> np.ndarray:
    """Rows drawn from a symmetric Dirichlet(1) via normalised exponentials."""
    # -log(uniform) is Exp(1); normalised Exp(1) draws are Dirichlet(1)
    e = -np.log1p(-rng.random((n, k)))
    return e / e.sum(axis=1, keepdims=True)


def fcm_fit(data, k: int, config: FcmConfig | None = None, init_centers=None) -> FcmResult:
    """Alternate center and membership updates until memberships settle.

    Starts from a random membership matrix seeded by ``config.rng_seed``, or,
    when ``init_centers`` is given, from the memberships those centers
    induce. Stops once the Frobenius norm of the membership change is at most
    ``config.epsilon`` or after ``config.max_iter`` iterations.

    ``history[t]`` is ``J_m`` of the centers computed in iteration ``t``
    paired with the memberships they induce. The returned ``u`` is the
    membership matrix of the returned centers.
    """
    config = config or FcmConfig()
    x = as_dataset(data)
    if k < 1:
        raise ClusteringError("k must be >= 1")
    if x.shape[0] < k:
        raise ClusteringError(f"need at least k={k} points, got {x.shape[0]}")
    if init_centers is not None:
        centers = _check_centers(x, init_centers)
        if centers.shape[0] != k:
            raise ClusteringError(f"init_centers has {centers.shape[0]} rows, expected k={k}")
        u = fcm_membership_update(x, centers, config)
    else:
        centers = None
        u = random_membership(x.shape[0], k, np.random.default_rng(config.rng_seed))

    history = []
    trajectory = []
    n_iter = 0
    for n_iter in range(1, config.max_iter + 1):
        new_centers, den = _weighted_means(x, u**config.m)
        degenerate = den == 0
        if degenerate.any():
            if centers is None:
                raise DegenerateClusterError(np.flatnonzero(degenerate))
            new_centers[degenerate] = centers[degenerate]
        centers = new_centers
        new_u = fcm_membership_update(x, centers, config)
        history.append(fcm_objective(x, new_u, centers, config.m))
        trajectory.append(centers.copy())
        change = np.linalg.norm(new_u - u)
        u = new_u
        if change <= config.epsilon:
            break
    return FcmResult(centers, u, n_iter, history, trajectory)
