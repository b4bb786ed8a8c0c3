import math

import numpy as np
import pytest

from swarmdefense.clustering import (ClusteringParams, cluster, dbscan_params,
                                     detect_split, split_threshold, swarm_radius)

from oracles import dbscan_reference, partition_key

IDENTITY = lambda n: n


def reference_partition(points, params):
    """Oracle partition with the same singular-swarm folding as cluster()."""
    clusters, noise = dbscan_reference(points, params.eps, params.min_pts)
    keep = [c for c in clusters if len(c) >= 3]
    dropped = [i for c in clusters if len(c) < 3 for i in c]
    return partition_key(keep, sorted(noise + dropped))


def test_dbscan_params_values():
    p = dbscan_params(9, 4, 2.0)
    assert p.max_net_radius == pytest.approx(1.0)  # cot(pi/4) = 1
    assert p.eps == pytest.approx(2.0 / 8.0)
    assert p.min_pts == 3
    p16 = dbscan_params(16, 16, 10.0)
    assert p16.max_net_radius == pytest.approx(5.0 / math.tan(math.pi / 16))
    assert p16.eps == pytest.approx(p16.max_net_radius * 2 / 15)
    p2 = dbscan_params(2, 4, 2.0)
    assert p2.eps == pytest.approx(2.0 * p2.max_net_radius)
    with pytest.raises(ValueError):
        dbscan_params(9, 2, 2.0)


def test_minimal_core_cluster():
    pts = np.array([[0.0, 0.0], [0.5, 0.0], [0.0, 0.5]])
    part = cluster(pts, ClusteringParams(eps=1.0, min_pts=3))
    assert part.clusters == [[0, 1, 2]]
    assert part.unclustered == []


def test_isolated_points_are_noise():
    pts = np.array([[0.0, 0.0], [10.0, 0.0]])
    part = cluster(pts, ClusteringParams(eps=1.0, min_pts=3))
    assert part.clusters == []
    assert part.unclustered == [0, 1]


def blob(center, n, spread, rng):
    return np.asarray(center) + rng.normal(0.0, spread, (n, 2))


def test_three_group_layout():
    # 10-blob + 4-blob + 2 stragglers, checked against the reference oracle
    rng = np.random.default_rng(42)
    pts = np.concatenate([
        blob((0.0, 0.0), 10, 0.8, rng),
        blob((30.0, 5.0), 4, 0.6, rng),
        np.array([[60.0, -20.0], [-40.0, 40.0]]),
    ])
    params = ClusteringParams(eps=3.0, min_pts=3)
    part = cluster(pts, params)
    assert sorted(len(c) for c in part.clusters) == [4, 10]
    assert len(part.unclustered) == 2
    assert partition_key(part.clusters, part.unclustered) == \
        reference_partition(pts, params)


def test_matches_reference_oracle_randomized():
    rng = np.random.default_rng(1)
    for trial in range(60):
        n = int(rng.integers(1, 26))
        pts = rng.uniform(-10, 10, (n, 2))
        eps = float(rng.uniform(1.0, 6.0))
        params = ClusteringParams(eps=eps, min_pts=3)
        part = cluster(pts, params)
        assert partition_key(part.clusters, part.unclustered) == \
            reference_partition(pts, params), f"trial {trial}"


def test_partition_properties():
    rng = np.random.default_rng(5)
    pts = rng.uniform(-8, 8, (25, 2))
    part = cluster(pts, ClusteringParams(eps=3.0, min_pts=3))
    seen = part.all_indices()
    assert seen == list(range(25))
    flat = [i for c in part.clusters for i in c] + list(part.unclustered)
    assert len(flat) == len(set(flat))
    for c in part.clusters:
        assert len(c) >= 3


def test_permutation_invariance():
    rng = np.random.default_rng(9)
    pts = rng.uniform(-6, 6, (18, 2))
    params = ClusteringParams(eps=2.5, min_pts=3)
    base = cluster(pts, params)
    for _ in range(5):
        perm = rng.permutation(18)
        shuffled = pts[perm]
        part = cluster(shuffled, params)
        remapped = ([sorted(perm[i] for i in c) for c in part.clusters],
                    sorted(perm[i] for i in part.unclustered))
        assert partition_key(*remapped) == partition_key(base.clusters,
                                                         base.unclustered)


def test_swarm_radius():
    assert swarm_radius([[2.0, 2.0]] * 4) == 0.0
    assert swarm_radius([[0.0, 0.0], [4.0, 0.0]]) == pytest.approx(2.0)
    s = 3.0
    tri = [[0.0, 0.0], [s, 0.0], [s / 2, s * math.sqrt(3) / 2]]
    assert swarm_radius(tri) == pytest.approx(s / math.sqrt(3))


def test_split_threshold_values():
    # full-population cluster recovers the whole-team net radius
    full = split_threshold(16, 16, 10.0, IDENTITY)
    assert full == pytest.approx(5.0 / math.tan(math.pi / 16))
    assert split_threshold(1, 16, 10.0, IDENTITY) == 0.0
    ten = split_threshold(10, 16, 10.0, IDENTITY)
    assert ten == pytest.approx(5.0 / math.tan(math.pi / 16) * 9 / 15)
    prev = -1.0
    for size in range(1, 17):
        val = split_threshold(size, 16, 10.0, IDENTITY)
        assert val > prev
        prev = val


def test_detect_split_strict_inequality():
    rng = np.random.default_rng(2)
    tight = blob((0.0, 0.0), 6, 0.3, rng)
    wide = blob((0.0, 0.0), 6, 0.3, rng) * np.array([8.0, 1.0]) + np.array([40.0, 0.0])
    part = cluster(np.concatenate([tight, wide]), ClusteringParams(eps=5.0, min_pts=3))
    assert part.n_clusters >= 1
    radii = part.radii
    assert detect_split(part, radii + 1e-6) == []
    assert detect_split(part, radii.copy()) == []          # tie is not a split
    thresholds = radii.copy()
    thresholds[0] = radii[0] - 1e-6
    assert detect_split(part, thresholds) == [0]
