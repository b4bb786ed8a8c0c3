"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Heavy benchmark records are cached at module level and shared between the
cost-gap, runtime-ordering and restriction-inequality criteria.
"""

import math
import statistics
import time

import numpy as np

from swarmdefense import bench, binprog
from swarmdefense import assignment as asg
from swarmdefense import clustering as clu
from swarmdefense import simulation as sim
from swarmdefense.dynamics import AgentParams, AgentState, speed_bound, step

from oracles import partition_key, rk4_trajectory
from test_binprog import SHAPES, random_program
from test_clustering import reference_partition
from test_simulation import CONFIG_DIR, crossing_config, min_defender_gap

import os

_cache = {}


def report(num, name, ok, detail=""):
    print(f"\nACCEPTANCE {num} ({name}): {'PASS' if ok else 'FAIL'} {detail}")
    assert ok, f"criterion {num} ({name}) failed: {detail}"


def grid_records():
    if "grid" not in _cache:
        recs = bench.bench_assign(bench.default_grid(), reps=30,
                                  solvers=("rs_miqcqp", "heuristic"),
                                  allow_large=True, workers=1)
        _cache["grid"] = recs
    return _cache["grid"]


def big_cell_records():
    if "big" not in _cache:
        recs = bench.bench_assign([(30, 3, 8)], reps=30,
                                  solvers=("miqcqp", "rs_miqcqp", "heuristic"),
                                  allow_large=True, workers=1, base_seed=77000)
        _cache["big"] = recs
    return _cache["big"]


def test_criterion_1_solver_oracle_equivalence():
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    mismatches = 0
    for trial in range(500):
        prog = random_program(rng, SHAPES[trial % len(SHAPES)])
        got = binprog.solve(prog)
        want = binprog.brute_force(prog)
        if got.status != want.status or (
                got.status == "optimal" and got.objective != want.objective):
            mismatches += 1
    wall = time.perf_counter() - t0
    report(1, "solver-oracle equivalence",
           mismatches == 0 and wall < 300.0,
           f"(500 programs, {mismatches} mismatches, {wall:.0f} s)")


def test_criterion_2_cost_gap_reproduction():
    t0 = time.perf_counter()
    recs = grid_records()
    wall = time.perf_counter() - t0
    pcts = [r.pct_e for r in recs if r.pct_e is not None]
    per_cell = {}
    for r in recs:
        if r.pct_e is not None:
            per_cell.setdefault((r.n_a, r.n_ac, r.n_uc), []).append(r.pct_e)
    worst_mean = max(statistics.mean(v) for v in per_cell.values())
    worst = max(pcts)
    ok = worst_mean <= 4.0 and worst <= 8.0 and wall < 900.0
    report(2, "heuristic cost gap",
           ok, f"({len(pcts)} instances, worst cell mean {worst_mean:.2f}%, "
               f"max {worst:.2f}%, {wall:.0f} s)")


def test_criterion_3_runtime_ordering():
    recs = big_cell_records()
    med = {s: statistics.median([r.wall_s for r in recs if r.solver == s])
           for s in ("miqcqp", "rs_miqcqp", "heuristic")}
    rep = asg.worst_case_costs(n_attackers=30, n_clusters=3, n_unclustered=8,
                               n_defenders=30, n_ac_max=2)
    predicted = rep.ordering_strict and rep.ordering_weak
    measured = (med["heuristic"] < med["rs_miqcqp"] <= med["miqcqp"]
                and med["heuristic"] * 2.0 <= med["rs_miqcqp"])
    report(3, "runtime ordering", predicted and measured,
           f"(medians: heuristic {med['heuristic']:.3f} s, "
           f"rs {med['rs_miqcqp']:.3f} s, full {med['miqcqp']:.3f} s; "
           f"exponent bounds {rep.heuristic_exponent_sum} reduced {rep.n_delta_rs} "
           f"full {rep.n_delta})")


def test_criterion_4_heuristic_throughput():
    walls = []
    for seed in range(30):
        inst = bench.gen_instance(30000 + seed, 60, 6, 24)
        snap = inst.snapshot
        snap.engagements()
        snap.collision_costs()
        t0 = time.perf_counter()
        asg.solve_split_hierarchical(snap)
        walls.append(time.perf_counter() - t0)
    med = statistics.median(walls)
    report(4, "heuristic throughput", med <= 0.5,
           f"(60 attackers / 24 stragglers: median {med * 1000:.0f} ms, "
           f"max {max(walls) * 1000:.0f} ms)")


def test_criterion_5_restriction_inequality():
    by_instance = {}
    for r in grid_records() + big_cell_records():
        if not math.isnan(r.objective):
            by_instance.setdefault((r.seed, r.n_a, r.n_ac, r.n_uc), {})[r.solver] \
                = r.objective
    violations = 0
    checked = 0
    for objs in by_instance.values():
        checked += 1
        if "miqcqp" in objs and "rs_miqcqp" in objs:
            if not objs["miqcqp"] <= objs["rs_miqcqp"]:
                violations += 1
        if "rs_miqcqp" in objs and "heuristic" in objs:
            if not objs["rs_miqcqp"] <= objs["heuristic"]:
                violations += 1
    report(5, "restriction inequality", violations == 0,
           f"({checked} instances, {violations} violations)")


def test_criterion_6_dynamics_fidelity():
    att = AgentParams(u_max=9.0, drag=1.5)
    rng = np.random.default_rng(6)
    pos = rng.normal(0, 30, (100, 2))
    vel = rng.uniform(-4, 4, (100, 2))
    acc = rng.uniform(-6, 6, (100, 2))
    ref_p, ref_v = rk4_trajectory(pos, vel, lambda t: acc, att.drag, 1e-4, 10.0)
    worst = 0.0
    for run in range(100):
        s = AgentState(pos[run], vel[run])
        for _ in range(10):
            s = step(s, acc[run], 1.0, att)
        worst = max(worst,
                    float(np.max(np.abs(s.position - ref_p[-1][run]))),
                    float(np.max(np.abs(s.velocity - ref_v[-1][run]))))
    # speed bound property along random bounded controls
    bound_ok = True
    vbar = speed_bound(att)
    for _ in range(20):
        s = AgentState(rng.normal(0, 10, 2), np.zeros(2))
        for _ in range(150):
            a = rng.normal(0, 5, 2)
            n = np.linalg.norm(a)
            if n > att.u_max:
                a = a * (att.u_max / n)
            s = step(s, a, 0.05, att)
            if s.speed > vbar + 1e-9:
                bound_ok = False
    # terminal speeds under the published parameter set
    s_a = AgentState((0.0, 0.0), (0.0, 0.0))
    s_d = AgentState((0.0, 0.0), (0.0, 0.0))
    dfn = AgentParams(u_max=18.4, drag=1.5)
    for _ in range(200):
        s_a = step(s_a, (9.0, 0.0), 0.1, att)
        s_d = step(s_d, (18.4, 0.0), 0.1, dfn)
    term_ok = abs(s_a.speed - 6.0) <= 0.01 and abs(s_d.speed - 12.27) <= 0.01
    report(6, "dynamics fidelity", worst <= 1e-6 and bound_ok and term_ok,
           f"(max deviation vs RK4 {worst:.2e}; terminal speeds "
           f"{s_a.speed:.3f} / {s_d.speed:.3f} m/s)")


def test_criterion_7_scenario3_regression():
    t0 = time.perf_counter()
    trace = sim.run(sim.load_config(os.path.join(CONFIG_DIR, "scenario3.json")))
    wall = time.perf_counter() - t0
    ok = trace.completed
    detail = []

    part = trace.events_of("partition")
    ok &= len(part) == 1 and part[0].detail == "sizes=10/4;unclustered=2"
    detail.append(f"t0 partition {part[0].detail if part else 'missing'}")

    caps = trace.events_of("interception")
    splits = trace.events_of("split")
    ok &= len(splits) == 1
    initial_caps = [e for e in caps if e.t < splits[0].t] if splits else []
    ok &= len(initial_caps) == 2
    ok &= {e.obj for e in initial_caps} == {"A14", "A15"}

    new_teams = [e for e in trace.events_of("reassign_herd")]
    sizes = sorted(len(e.detail.split("=")[1].split("+")) for e in new_teams)
    ok &= sizes == [4, 4]
    post_caps = [e for e in caps if splits and e.t > splits[0].t]
    ok &= len(post_caps) == 2

    enclosures = trace.events_of("enclosure")
    arrivals = trace.events_of("herd_arrival")
    ok &= len(enclosures) == 3 and len(arrivals) == 3
    if ok:
        ok &= max(e.t for e in initial_caps) < splits[0].t
        ok &= splits[0].t < min(e.t for e in post_caps)
        ok &= max(e.t for e in post_caps) < min(e.t for e in enclosures)
        ok &= max(e.t for e in enclosures) < min(e.t for e in arrivals)
    ok &= len(trace.events_of("breach")) == 0
    ok &= wall < 120.0
    report(7, "scenario-3 regression", bool(ok),
           f"(split at t={splits[0].t:.2f}s, 4 interceptions, 3 enclosures, "
           f"3 arrivals, 0 breaches, {wall:.0f} s wall)" if splits else "(no split)")


def test_criterion_8_constraint_feasibility():
    rng = np.random.default_rng(88)
    failures = 0
    for trial in range(200):
        n_ac = int(rng.integers(1, 3))
        n_uc = int(rng.integers(0, 3))
        n_a = int(rng.integers(3 * n_ac + n_uc, 15))
        try:
            inst = bench.gen_instance(88000 + trial, n_a, n_ac, n_uc)
        except ValueError:
            inst = bench.gen_instance(88000 + trial, 3 * n_ac + n_uc + 2,
                                      n_ac, n_uc)
        snap = inst.snapshot
        for solver in (asg.solve_split_miqcqp, asg.solve_split_rs_miqcqp,
                       asg.solve_split_hierarchical):
            res = solver(snap)
            if asg.check_split_assignment(snap, res.teams, res.interceptors):
                failures += 1
    report(8, "constraint feasibility", failures == 0,
           f"(200 split events x 3 solvers, {failures} invalid assignments)")


def test_criterion_9_dbscan_oracle():
    rng = np.random.default_rng(99)
    mismatches = 0
    for trial in range(200):
        n = int(rng.integers(1, 26))
        pts = rng.uniform(-12, 12, (n, 2))
        params = clu.ClusteringParams(eps=float(rng.uniform(1.0, 6.0)), min_pts=3)
        part = clu.cluster(pts, params)
        if partition_key(part.clusters, part.unclustered) != \
                reference_partition(pts, params):
            mismatches += 1
    report(9, "density-reachability oracle", mismatches == 0,
           f"(200 point sets, {mismatches} mismatches)")


def test_criterion_10_collision_avoidance():
    body = 0.5
    protected_min = math.inf
    bare_min = math.inf
    for seed in range(100):
        protected_min = min(protected_min,
                            min_defender_gap(sim.run(crossing_config(seed, True))))
    for seed in range(100):
        bare_min = min(bare_min,
                       min_defender_gap(sim.run(crossing_config(seed, False))))
        if bare_min < 2 * body:
            break
    ok = protected_min >= 2 * body and bare_min < 2 * body
    report(10, "collision avoidance", ok,
           f"(min gap with filter {protected_min:.2f} m, "
           f"without {bare_min:.2f} m, threshold {2 * body:.1f} m)")
