"""Federated fuzzy c-means clustering."""

from .core import (
    ClusteringError,
    DegenerateClusterError,
    FcmConfig,
    KmeansConfig,
    MembershipFormula,
    fcm_center_update,
    fcm_fit,
    fcm_membership_update,
    fcm_objective,
    kmeans_assign,
    kmeans_center_update,
    kmeans_fit,
    kmeans_objective,
    kmeanspp_init,
)
from .federation import (
    AvgMethod,
    ClientState,
    ClientUpdate,
    FedConfig,
    FedResult,
    InitStrategy,
    client_local_update,
    run_federated,
    server_avg1,
    server_avg2,
    server_init_centers,
    server_round_converged,
)
from .metrics import MetricsReport, hard_assign, knowledge_gap, ngap, osse, wsse

__version__ = "0.1.0"
