"""DBSCAN swarm identification, radius tracking and split detection.

Attackers are grouped into swarms with plain density-based clustering;
anything landing in a group smaller than three agents is a "singular swarm"
and reported as unclustered.  Neighborhood search is O(n^2) on purpose:
instances stay at desk scale (<= 100 agents).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

#: Smallest group that can be enclosed by a ring of defenders.
MIN_SWARM_SIZE = 3


@dataclass(frozen=True)
class ClusteringParams:
    eps: float                 # neighborhood radius, m
    min_pts: int = 3           # core-point threshold, neighbors incl. self
    max_net_radius: float = 0.0  # largest enclosable swarm radius, m
    string_length: float = 0.0   # max barrier length between two defenders, m

    def __post_init__(self):
        if not (self.eps > 0.0):
            raise ValueError("eps must be positive")
        if self.min_pts < 1:
            raise ValueError("min_pts must be at least 1")


@dataclass
class SwarmPartition:
    """Clusters plus unclustered stragglers over a fixed index set."""

    clusters: list            # list of sorted index lists, each >= MIN_SWARM_SIZE
    unclustered: list         # sorted index list
    centers: np.ndarray       # (k, 2) per-cluster center of mass
    radii: np.ndarray         # (k,) per-cluster max distance to center

    @property
    def n_clusters(self) -> int:
        return len(self.clusters)

    def all_indices(self) -> list:
        out = sorted(i for c in self.clusters for i in c) + sorted(self.unclustered)
        return sorted(out)


def dbscan_params(n_attackers: int, n_defenders: int, string_length: float) -> ClusteringParams:
    """Neighborhood parameters scaled so identified swarms are enclosable.

    The largest ring the full defender team can form inscribes a circle of
    radius (L/2) * cot(pi / N_d); the neighborhood radius shrinks with the
    attacker count so a cluster of size m stays within its share of that ring.
    """
    if n_attackers < 2:
        raise ValueError("need at least 2 attackers")
    if n_defenders < 3:
        raise ValueError("need at least 3 defenders to form a closed net")
    if not (string_length > 0.0):
        raise ValueError("string_length must be positive")
    min_pts = 3
    max_net_radius = 0.5 * string_length / math.tan(math.pi / n_defenders)
    eps = max_net_radius * (min_pts - 1) / (n_attackers - 1)
    return ClusteringParams(eps=eps, min_pts=min_pts,
                            max_net_radius=max_net_radius, string_length=string_length)


def swarm_radius(points) -> float:
    """Max distance from the center of mass over one group of points."""
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    if len(pts) == 0:
        raise ValueError("empty point set")
    com = pts.mean(axis=0)
    return float(np.max(np.linalg.norm(pts - com, axis=1)))


def split_threshold(cluster_size: int, n_attackers: int, string_length: float,
                    resources) -> float:
    """Largest radius a cluster of the given size may reach before splitting.

    ``resources`` maps an attacker count to the defender head-count budgeted
    for it (callable).  The threshold scales the full-team net radius by the
    cluster's share of the attacker population.
    """
    if cluster_size < 1:
        raise ValueError("cluster_size must be positive")
    if n_attackers < 2:
        raise ValueError("n_attackers must be at least 2")
    n_net = resources(n_attackers)
    full = 0.5 * string_length / math.tan(math.pi / n_net)
    return full * (cluster_size - 1) / (n_attackers - 1)


def detect_split(partition: SwarmPartition, thresholds) -> list:
    """Indices of clusters whose radius strictly exceeds their threshold."""
    thr = np.asarray(thresholds, dtype=float)
    if thr.shape != partition.radii.shape:
        raise ValueError("one threshold per cluster required")
    return [k for k in range(partition.n_clusters) if partition.radii[k] > thr[k]]


def cluster(positions, params: ClusteringParams) -> SwarmPartition:
    """Partition points into dense swarms and unclustered noise.

    Standard DBSCAN over the eps-neighborhood graph.  Border points (non-core
    points in reach of several clusters) join the cluster of their
    smallest-index core neighbor, which makes the labeling independent of
    scan order.  Groups smaller than MIN_SWARM_SIZE are folded into the
    unclustered set.
    """
    pts = np.asarray(positions, dtype=float).reshape(-1, 2)
    n = len(pts)
    if n == 0:
        raise ValueError("need at least one position")
    d2 = np.sum((pts[:, None, :] - pts[None, :, :]) ** 2, axis=-1)
    adj = d2 <= params.eps ** 2
    neighbor_counts = adj.sum(axis=1)  # includes self
    core = neighbor_counts >= params.min_pts

    labels = np.full(n, -1, dtype=int)
    cluster_id = 0
    for seed in range(n):
        if not core[seed] or labels[seed] != -1:
            continue
        # Grow a new cluster from this core point through core-core links.
        labels[seed] = cluster_id
        queue = [seed]
        while queue:
            p = queue.pop(0)
            for q in np.flatnonzero(adj[p]):
                if core[q] and labels[q] == -1:
                    labels[q] = cluster_id
                    queue.append(q)
        cluster_id += 1

    # Border points: attach to the smallest-index core point in reach.
    for i in range(n):
        if core[i] or labels[i] != -1:
            continue
        reachable_cores = np.flatnonzero(adj[i] & core)
        if len(reachable_cores):
            labels[i] = labels[reachable_cores[0]]

    groups = [sorted(np.flatnonzero(labels == cid).tolist()) for cid in range(cluster_id)]
    clusters = [g for g in groups if len(g) >= MIN_SWARM_SIZE]
    unclustered = sorted(
        [i for g in groups if len(g) < MIN_SWARM_SIZE for i in g]
        + np.flatnonzero(labels == -1).tolist()
    )
    if clusters:
        centers = np.array([pts[c].mean(axis=0) for c in clusters])
        radii = np.array([swarm_radius(pts[c]) for c in clusters])
    else:
        centers = np.zeros((0, 2))
        radii = np.zeros(0)
    return SwarmPartition(clusters=clusters, unclustered=unclustered,
                          centers=centers, radii=radii)
