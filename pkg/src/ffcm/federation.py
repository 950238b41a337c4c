"""Simulated federated fuzzy c-means.

A server keeps the global centers; each round it broadcasts them, every
client runs membership and center updates on its private shard and reports
its local centers plus per-cluster weights, and the server aggregates those
reports into new global centers. Clients never hand over raw points. The
only exception is the ``client_sample`` initialisation, which reveals a few
sampled points per client and should not be used where that matters.
"""

from __future__ import annotations

import enum
import io
import logging
from dataclasses import dataclass, field

import numpy as np

from .core import (
    ClusteringError,
    DegenerateClusterError,
    FcmConfig,
    KmeansConfig,
    _weighted_means,
    as_dataset,
    fcm_membership_update,
    kmeans_fit,
    kmeanspp_init,
)
from .metrics import match_centers

log = logging.getLogger(__name__)


class AvgMethod(str, enum.Enum):
    AVG1 = "avg1"
    AVG2 = "avg2"


class InitStrategy(str, enum.Enum):
    BOUNDING_BOX = "bbox"
    CLIENT_SAMPLE = "client_sample"


@dataclass
class ClientState:
    client_id: int
    data: np.ndarray

    def __post_init__(self):
        self.data = as_dataset(self.data)


@dataclass
class ClientUpdate:
    client_id: int
    local_centers: np.ndarray
    weights: np.ndarray


@dataclass(frozen=True)
class FedConfig:
    k: int
    fcm: FcmConfig = field(default_factory=FcmConfig)
    avg_method: AvgMethod = AvgMethod.AVG1
    local_epochs: int = 1
    max_rounds: int = 300
    round_epsilon: float = 1e-4
    init_strategy: InitStrategy = InitStrategy.BOUNDING_BOX
    inner_kmeans: KmeansConfig = field(default_factory=KmeansConfig)
    # seed the avg2 k-means with the previous global centers instead of k-means++
    avg2_warm_start: bool = False

    def __post_init__(self):
        if self.k < 1:
            raise ClusteringError("k must be >= 1")
        if not self.round_epsilon > 0:
            raise ClusteringError("round_epsilon must be > 0")
        if self.local_epochs < 1 or self.max_rounds < 1:
            raise ClusteringError("local_epochs and max_rounds must be >= 1")
        object.__setattr__(self, "avg_method", AvgMethod(self.avg_method))
        object.__setattr__(self, "init_strategy", InitStrategy(self.init_strategy))


@dataclass
class FedResult:
    global_centers: np.ndarray
    rounds_used: int
    center_drift_history: list[float]
    initial_centers: np.ndarray
    converged: bool
    # global centers after every round
    trajectory: list[np.ndarray] = field(default_factory=list)


def _common_dim(clients) -> int:
    if not clients:
        raise ClusteringError("need at least one client")
    dims = {c.data.shape[1] for c in clients}
    if len(dims) != 1:
        raise ClusteringError(f"clients disagree on dimension: {sorted(dims)}")
    return dims.pop()


def server_init_centers(clients, k: int, strategy=InitStrategy.BOUNDING_BOX, rng=None) -> np.ndarray:
    """Initial global centers.

    ``bbox``: clients report per-dimension min/max; the server samples ``k``
    points uniformly from the union box. ``client_sample``: every client
    sends ``k`` of its points (fewer if its shard is smaller) and the server
    picks ``k`` of them by D^2 sampling.
    """
    rng = rng if rng is not None else np.random.default_rng()
    if k < 1:
        raise ClusteringError("k must be >= 1")
    _common_dim(clients)
    strategy = InitStrategy(strategy)
    if strategy is InitStrategy.BOUNDING_BOX:
        lo = np.min([c.data.min(axis=0) for c in clients], axis=0)
        hi = np.max([c.data.max(axis=0) for c in clients], axis=0)
        return lo + (hi - lo) * rng.random((k, lo.shape[0]))
    candidates = []
    for c in clients:
        n = c.data.shape[0]
        idx = rng.choice(n, size=min(k, n), replace=False)
        candidates.append(c.data[idx])
    pool = np.vstack(candidates)
    if pool.shape[0] < k:
        raise ClusteringError(f"clients supplied only {pool.shape[0]} candidate points for k={k}")
    return kmeanspp_init(pool, k, rng)


def client_local_update(client: ClientState, global_centers, config: FedConfig) -> ClientUpdate:
    """Local membership and center passes starting from the broadcast centers.

    Local index ``j`` always refers to global cluster ``j``. A cluster with
    zero local weight keeps the incoming center and reports weight 0.
    """
    centers = np.asarray(global_centers, dtype=float)
    if centers.ndim != 2 or centers.shape[1] != client.data.shape[1]:
        raise ClusteringError(
            f"client {client.client_id}: centers shape {centers.shape} does not match d={client.data.shape[1]}"
        )
    m = config.fcm.m
    for _ in range(config.local_epochs):
        u = fcm_membership_update(client.data, centers, config.fcm)
        new_centers, den = _weighted_means(client.data, u**m)
        empty = den == 0
        new_centers[empty] = centers[empty]
        centers = new_centers
    # weights describe the membership that produced the reported centers
    weights = np.sum(u**m, axis=0)
    return ClientUpdate(client.client_id, centers, weights)


def _stack_updates(updates):
    if not updates:
        raise ClusteringError("no client updates to aggregate")
    shapes = {u.local_centers.shape for u in updates}
    if len(shapes) != 1:
        raise ClusteringError(f"client updates disagree on (K, d): {sorted(shapes)}")
    return np.stack([u.local_centers for u in updates]), np.stack([u.weights for u in updates])


def server_avg1(updates, previous=None) -> np.ndarray:
    """Weight-proportional mean of the local centers, per cluster index.

    A cluster whose total weight is zero keeps its ``previous`` center; with
    no previous centers that is a :class:`DegenerateClusterError`.
    """
    centers, weights = _stack_updates(updates)  # (P, K, d), (P, K)
    total = weights.sum(axis=0)
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.einsum("pk,pkd->kd", weights, centers) / total[:, None]
    bad = total == 0
    if bad.any():
        if previous is None:
            raise DegenerateClusterError(np.flatnonzero(bad))
        out[bad] = np.asarray(previous, dtype=float)[bad]
    return out


def server_avg2(updates, k: int, inner_kmeans: KmeansConfig | None = None, previous=None, warm_start=False) -> np.ndarray:
    """k-means over the pooled local centers; client weights are ignored.

    With ``previous`` given, the result is reordered to line up with it by
    minimum-cost matching, so that index ``j`` keeps meaning the same cluster
    from round to round.
    """
    centers, _ = _stack_updates(updates)
    pool = centers.reshape(-1, centers.shape[-1])
    if pool.shape[0] < k:
        raise ClusteringError(f"only {pool.shape[0]} pooled centers for k={k}")
    init = previous if (warm_start and previous is not None) else None
    out = kmeans_fit(pool, k, inner_kmeans or KmeansConfig(), init=init).centers
    if previous is not None:
        out = out[match_centers(out, previous)]
    return out


def center_drift(prev, nxt) -> float:
    """Sum over clusters of the Euclidean distance each center moved."""
    a = np.asarray(prev, dtype=float)
    b = np.asarray(nxt, dtype=float)
    if a.shape != b.shape:
        raise ClusteringError(f"center shapes differ: {a.shape} vs {b.shape}")
    return float(np.linalg.norm(a - b, axis=1).sum())


def server_round_converged(prev, nxt, round_epsilon: float) -> bool:
    return center_drift(prev, nxt) <= round_epsilon


def run_federated(clients, config: FedConfig, rng=None, init_centers=None, trace=None) -> FedResult:
    """Run rounds until the summed center drift is at most ``round_epsilon``
    or ``max_rounds`` is reached.

    ``rng`` drives the server initialisation; the avg2 inner k-means is
    seeded from ``config.inner_kmeans.rng_seed`` and the round index.
    ``trace`` may be a writable text stream receiving one line per round
    (see :func:`format_trace_line`).
    """
    rng = rng if rng is not None else np.random.default_rng(config.fcm.rng_seed)
    _common_dim(clients)
    if init_centers is None:
        centers = server_init_centers(clients, config.k, config.init_strategy, rng)
    else:
        centers = np.array(init_centers, dtype=float)
        if centers.shape != (config.k, clients[0].data.shape[1]):
            raise ClusteringError(f"init_centers shape {centers.shape} does not match (k, d)")
    initial = centers.copy()
    drifts = []
    trajectory = []
    converged = False
    rounds = 0
    for rounds in range(1, config.max_rounds + 1):
        # clients are independent; aggregation below is the barrier
        updates = [client_local_update(c, centers, config) for c in clients]
        if config.avg_method is AvgMethod.AVG1:
            new = server_avg1(updates, previous=centers)
        else:
            inner = KmeansConfig(
                epsilon=config.inner_kmeans.epsilon,
                max_iter=config.inner_kmeans.max_iter,
                n_init=config.inner_kmeans.n_init,
                rng_seed=int(np.random.SeedSequence([config.inner_kmeans.rng_seed, rounds]).generate_state(1)[0]),
            )
            new = server_avg2(updates, config.k, inner, previous=centers, warm_start=config.avg2_warm_start)
        drift = center_drift(centers, new)
        drifts.append(drift)
        centers = new
        trajectory.append(centers.copy())
        if trace is not None:
            trace.write(format_trace_line(rounds, drift, centers) + "\n")
        log.debug("round %d drift %.6g", rounds, drift)
        if drift <= config.round_epsilon:
            converged = True
            break
    return FedResult(centers, rounds, drifts, initial, converged, trajectory)


def format_trace_line(round_index: int, drift: float, centers) -> str:
    """``round=<i> drift=<g> centers=<c00>,<c01>;<c10>,...`` with 17 significant digits."""
    flat = ";".join(",".join(f"{v:.17g}" for v in row) for row in np.asarray(centers))
    return f"round={round_index} drift={drift:.17g} centers={flat}"


def parse_trace(text: str) -> list[dict]:
    """Inverse of the trace format: a list of ``{round, drift, centers}``."""
    records = []
    for line in io.StringIO(text):
        line = line.strip()
        if not line:
            continue
        fields = dict(part.split("=", 1) for part in line.split(" "))
        centers = np.array([[float(v) for v in row.split(",")] for row in fields["centers"].split(";")])
        records.append({"round": int(fields["round"]), "drift": float(fields["drift"]), "centers": centers})
    return records
