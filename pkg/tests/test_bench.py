import os

import numpy as np
import pytest

from swarmdefense import bench
from swarmdefense.assignment import check_split_assignment


def test_gen_instance_reproducible():
    a = bench.gen_instance(42, 15, 2, 3)
    b = bench.gen_instance(42, 15, 2, 3)
    assert a.cluster_sizes == b.cluster_sizes
    assert np.array_equal(a.snapshot.defender_pos, b.snapshot.defender_pos)
    assert np.array_equal(a.snapshot.unclustered_pos, b.snapshot.unclustered_pos)
    c = bench.gen_instance(43, 15, 2, 3)
    assert not np.array_equal(a.snapshot.defender_pos, c.snapshot.defender_pos)


def test_gen_instance_dims():
    inst = bench.gen_instance(7, 15, 2, 3)
    assert sum(inst.cluster_sizes) == 12
    assert all(s >= 3 for s in inst.cluster_sizes)
    assert inst.snapshot.n_defenders == 15
    assert inst.snapshot.n_unclustered == 3
    inst.snapshot.check_bookkeeping()
    forced = bench.gen_instance(1, 9, 3, 0)
    assert forced.cluster_sizes == [3, 3, 3]
    with pytest.raises(ValueError):
        bench.gen_instance(0, 10, 3, 2)


def test_gen_instance_straggler_geometry():
    # stragglers sit farther out than every new cluster center, inside the
    # transverse cone about the parent center
    for seed in range(6):
        inst = bench.gen_instance(seed, 18, 2, 4)
        snap = inst.snapshot
        com = (snap.defender_pos.mean(axis=0)
               - 25.0 * (snap.world.protected_center - snap.defender_pos.mean(axis=0))
               / np.linalg.norm(snap.world.protected_center - snap.defender_pos.mean(axis=0)))
        # reconstruct the parent center from the generator's geometry is
        # fiddly; use cluster centers' mean as a stand-in reference
        ref = snap.cluster_centers.mean(axis=0)
        max_cluster = max(np.linalg.norm(c - ref) for c in snap.cluster_centers)
        for p in snap.unclustered_pos:
            assert np.linalg.norm(p - ref) > max_cluster - 1e-9


def test_run_instance_records_and_pct():
    inst = bench.gen_instance(3, 12, 2, 2)
    recs = bench.run_instance(inst, ("miqcqp", "rs_miqcqp", "heuristic"))
    by = {r.solver: r for r in recs}
    assert set(by) == {"miqcqp", "rs_miqcqp", "heuristic"}
    assert by["miqcqp"].objective <= by["rs_miqcqp"].objective + 1e-9
    assert by["rs_miqcqp"].objective <= by["heuristic"].objective + 1e-9
    assert by["heuristic"].pct_e is not None and by["heuristic"].pct_e >= 0.0
    assert by["miqcqp"].pct_e is None


def test_pct_zero_when_degenerate():
    # single cluster, no stragglers: every solver returns the same assignment
    inst = bench.gen_instance(5, 12, 1, 0)
    recs = bench.run_instance(inst, ("rs_miqcqp", "heuristic"))
    by = {r.solver: r for r in recs}
    assert by["heuristic"].pct_e == pytest.approx(0.0, abs=1e-12)


def test_bench_csv_roundtrip(tmp_path):
    cells = [(12, 1, 2), (12, 2, 0)]
    recs = bench.bench_assign(cells, reps=2, solvers=("rs_miqcqp", "heuristic"),
                              out_dir=tmp_path, allow_large=True)
    csv = (tmp_path / "bench.csv").read_text().splitlines()
    assert csv[0] == "seed,N_a,N_ac,N_uc,solver,wall_s,objective,pctE"
    assert len(csv) == 1 + len(recs)
    # objectives reproduce bit-exactly on a second run
    recs2 = bench.bench_assign(cells, reps=2, solvers=("rs_miqcqp", "heuristic"),
                               allow_large=True)
    obj1 = [(r.solver, r.seed, r.objective) for r in recs]
    obj2 = [(r.solver, r.seed, r.objective) for r in recs2]
    assert obj1 == obj2
    assert (tmp_path / "summary.txt").exists()


def test_size_guard():
    with pytest.raises(ValueError):
        bench.bench_assign([(30, 3, 8)], reps=1, solvers=("miqcqp",))
    # heuristic-only runs are never guarded
    bench.bench_assign([(30, 3, 8)], reps=1, solvers=("heuristic",))


def test_solver_validation():
    with pytest.raises(ValueError):
        bench.bench_assign([(12, 1, 0)], reps=1, solvers=("gurobi",))


def test_worker_pool_matches_serial():
    cells = [(12, 1, 2)]
    serial = bench.bench_assign(cells, reps=3, solvers=("heuristic",), workers=1)
    pooled = bench.bench_assign(cells, reps=3, solvers=("heuristic",), workers=2)
    assert [(r.seed, r.objective) for r in serial] == \
        [(r.seed, r.objective) for r in pooled]


def test_assignments_valid_across_grid():
    for seed in range(6):
        inst = bench.gen_instance(seed, 15, 2, 3)
        from swarmdefense import assignment as asg
        for solver in (asg.solve_split_rs_miqcqp, asg.solve_split_hierarchical):
            res = solver(inst.snapshot)
            assert check_split_assignment(inst.snapshot, res.teams,
                                          res.interceptors) == []
