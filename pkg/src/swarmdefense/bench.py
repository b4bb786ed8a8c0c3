"""Seeded random split-event instances and the solver benchmark harness.

Instances mimic the moment a herded swarm fragments: the defenders sit on a
line across the swarm's path, the new clusters scatter around the old
center, and the stragglers sit farther out inside the transverse cone.
Each (dims, seed) pair regenerates bit-identically.

The harness times each requested solver on each instance (clock around the
solve itself; cost matrices and program construction are pre-built), prices
every result under the common split-assignment objective, and reports the
heuristic's percentage gap against the reduced exact program:
pctE = 100 * |cost_rs - cost_heuristic| / cost_rs.

CSV schema: ``seed,N_a,N_ac,N_uc,solver,wall_s,objective,pctE``.
"""

from __future__ import annotations

import math
import os
import statistics
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import assignment as asg
from . import binprog
from .dynamics import AgentParams, WorldGeometry, speed_bound
from .formations import line_slots

#: Default worlds/params for benchmark instances.
DEFAULT_WORLD = WorldGeometry(protected_radius=45.0, defense_annulus=(60.0, 150.0))
DEFAULT_ATTACKER = AgentParams(u_max=9.0, drag=1.5, body_radius=0.5, sensing_radius=15.0)
DEFAULT_DEFENDER = AgentParams(u_max=18.4, drag=1.5, body_radius=0.5,
                               interception_radius=5.0, sensing_radius=60.0)

#: Exact solvers refuse programs above this many decision variables unless
#: explicitly overridden; keeps accidental huge exponential solves at bay.
SIZE_GUARD = 30

EXACT_SOLVERS = ("miqcqp", "rs_miqcqp")
ALL_SOLVERS = ("miqcqp", "rs_miqcqp", "heuristic")


@dataclass
class BenchInstance:
    seed: int
    n_a: int
    n_ac: int
    n_uc: int
    cluster_sizes: list
    snapshot: asg.SplitSnapshot


@dataclass
class BenchRecord:
    seed: int
    n_a: int
    n_ac: int
    n_uc: int
    solver: str
    wall_s: float
    objective: float
    pct_e: float | None = None
    timed_out: bool = False

    def row(self) -> str:
        pct = "" if self.pct_e is None else repr(self.pct_e)
        obj = "" if math.isnan(self.objective) else repr(self.objective)
        return (f"{self.seed},{self.n_a},{self.n_ac},{self.n_uc},{self.solver},"
                f"{self.wall_s:.6f},{obj},{pct}")


def _compositions(total: int, parts: int, minimum: int, rng) -> list:
    """One uniformly random composition of ``total`` into ``parts`` each >= minimum."""
    extra = total - minimum * parts
    if extra < 0:
        raise ValueError("composition infeasible")
    if parts == 1:
        return [total]
    cuts = np.sort(rng.choice(extra + parts - 1, size=parts - 1, replace=False))
    sizes = []
    prev = -1
    for c in list(cuts) + [extra + parts - 1]:
        sizes.append(int(c - prev - 1) + minimum)
        prev = c
    return sizes


def gen_instance(seed: int, n_a: int, n_ac: int, n_uc: int,
                 world: WorldGeometry = DEFAULT_WORLD,
                 d_params: AgentParams = DEFAULT_DEFENDER,
                 a_params: AgentParams = DEFAULT_ATTACKER) -> BenchInstance:
    """Deterministic random split scenario with the given dimensions."""
    if n_a - n_uc < 3 * n_ac:
        raise ValueError("need at least 3 attackers per cluster")
    if n_ac < 1 or n_uc < 0:
        raise ValueError("invalid dimensions")
    rng = np.random.default_rng(seed)
    sizes = _compositions(n_a - n_uc, n_ac, 3, rng)

    angle = rng.uniform(0.0, 2.0 * math.pi)
    radius = rng.uniform(85.0, 125.0)
    com = world.protected_center + radius * np.array([math.cos(angle), math.sin(angle)])
    g = world.protected_center - com
    g = g / np.linalg.norm(g)
    trans = np.array([-g[1], g[0]])

    n_d = n_a  # one defender per attacker in the parent engagement
    line_center = com + 25.0 * g
    heading = math.atan2(-g[1], -g[0])
    slots = line_slots(line_center, heading, n_d, 4.0)
    dpos = slots + rng.normal(0.0, 0.3, size=slots.shape)
    dvel = rng.normal(0.0, 0.2, size=slots.shape)

    # new swarms scatter transverse to the old path, mirrored around it; the
    # first keeps the parent's course (the core the stragglers peeled off)
    centers = []
    for k in range(n_ac):
        if k == 0:
            lat = rng.uniform(-3.0, 3.0)
        else:
            side = 1.0 if k % 2 else -1.0
            lat = side * rng.uniform(6.0, 14.0)
        lon = rng.uniform(-5.0, 5.0)
        centers.append(com + lat * trans + lon * g)
    centers = np.array(centers)
    max_off = float(np.max(np.linalg.norm(centers - com, axis=1))) if n_ac else 0.0

    v_a = speed_bound(a_params)
    uc_pos, uc_vel = [], []
    for u in range(n_uc):
        side = 1.0 if u % 2 == 0 else -1.0  # transverse spread, both wings
        phi = rng.uniform(-0.85, 0.85) * (math.pi / 4.0)
        direction = math.cos(phi) * side * trans + math.sin(phi) * g
        dist = max_off + rng.uniform(4.0, 14.0)
        p = com + dist * direction
        uc_pos.append(p)
        to_p = world.protected_center - p
        uc_vel.append(v_a * rng.uniform(0.6, 1.0) * to_p / np.linalg.norm(to_p))

    snap = asg.SplitSnapshot(
        defender_pos=dpos, defender_vel=dvel,
        cluster_centers=centers, cluster_sizes=sizes,
        unclustered_pos=np.array(uc_pos).reshape(-1, 2),
        unclustered_vel=np.array(uc_vel).reshape(-1, 2),
        world=world, d_params=d_params, a_params=a_params,
        capacities=list(sizes))
    return BenchInstance(seed=seed, n_a=n_a, n_ac=n_ac, n_uc=n_uc,
                         cluster_sizes=sizes, snapshot=snap)


def exact_var_count(n_a: int, n_ac: int, n_uc: int, solver: str) -> int:
    n_d = n_a
    if solver == "miqcqp":
        return n_d * (n_ac + n_uc)
    return n_d * n_ac + min(2 * n_uc, n_d) * n_uc


def run_instance(inst: BenchInstance, solvers, n_ac_max: int = 3,
                 time_limit: float | None = None) -> list:
    """Time the requested solvers on one instance.

    Cost matrices are precomputed so the clock sees only the solve; exact
    solvers additionally get their program built off the clock.
    """
    snap = inst.snapshot
    snap.engagements()
    snap.collision_costs()
    results = {}
    records = []
    for name in solvers:
        if name in EXACT_SOLVERS:
            prog = asg.build_split_program(snap, reduced=(name == "rs_miqcqp"))
            t0 = time.perf_counter()
            try:
                sol = binprog.solve(prog, time_limit=time_limit)
            except binprog.SolveBudgetExceeded:
                records.append(BenchRecord(inst.seed, inst.n_a, inst.n_ac, inst.n_uc,
                                           name, time.perf_counter() - t0,
                                           float("nan"), timed_out=True))
                continue
            wall = time.perf_counter() - t0
            result = asg._extract_split_solution(snap, prog, sol, name)
        else:
            t0 = time.perf_counter()
            result = asg.solve_split_hierarchical(snap, n_ac_max=n_ac_max)
            wall = time.perf_counter() - t0
        results[name] = result
        records.append(BenchRecord(inst.seed, inst.n_a, inst.n_ac, inst.n_uc,
                                   name, wall, result.objective))
    if "heuristic" in results and "rs_miqcqp" in results:
        rs = results["rs_miqcqp"].objective
        h = results["heuristic"].objective
        if rs > 0.0:
            pct = 100.0 * abs(rs - h) / rs
            for rec in records:
                if rec.solver == "heuristic":
                    rec.pct_e = pct
    return records


def _bench_task(args):
    seed, n_a, n_ac, n_uc, solvers, n_ac_max, time_limit = args
    inst = gen_instance(seed, n_a, n_ac, n_uc)
    return run_instance(inst, solvers, n_ac_max=n_ac_max, time_limit=time_limit)


def bench_assign(cells, reps: int, solvers=ALL_SOLVERS, n_ac_max: int = 3,
                 base_seed: int = 0, workers: int = 1,
                 time_limit: float | None = None, allow_large: bool = False,
                 out_dir=None) -> list:
    """Benchmark the solvers over a grid of (N_a, N_ac, N_uc) cells.

    Each cell runs ``reps`` seeded instances.  Exact solvers refuse cells
    whose decision vector exceeds the size guard unless ``allow_large``.
    Returns the flat record list; optionally writes bench.csv and
    summary.txt under ``out_dir``.
    """
    solvers = list(solvers)
    for s in solvers:
        if s not in ALL_SOLVERS:
            raise ValueError(f"unknown solver {s!r}")
    tasks = []
    for c_idx, (n_a, n_ac, n_uc) in enumerate(cells):
        for s in solvers:
            if s in EXACT_SOLVERS and not allow_large:
                nv = exact_var_count(n_a, n_ac, n_uc, s)
                if nv > SIZE_GUARD:
                    raise ValueError(
                        f"cell {(n_a, n_ac, n_uc)} needs {nv} binary variables for "
                        f"{s}; pass allow_large / --unsafe-large to run it")
        for rep in range(reps):
            seed = base_seed + 1009 * c_idx + rep
            tasks.append((seed, n_a, n_ac, n_uc, tuple(solvers), n_ac_max, time_limit))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(_bench_task, tasks))
    else:
        chunks = [_bench_task(t) for t in tasks]
    records = [rec for chunk in chunks for rec in chunk]
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        write_csv(records, os.path.join(out_dir, "bench.csv"))
        with open(os.path.join(out_dir, "summary.txt"), "w") as fh:
            fh.write(summarize(records))
    return records


def write_csv(records, path):
    with open(path, "w") as fh:
        fh.write("seed,N_a,N_ac,N_uc,solver,wall_s,objective,pctE\n")
        for rec in records:
            fh.write(rec.row() + "\n")


def summarize(records) -> str:
    """Per-cell, per-solver medians/means as a plain-text table."""
    cells = {}
    for rec in records:
        cells.setdefault((rec.n_a, rec.n_ac, rec.n_uc), {}).setdefault(
            rec.solver, []).append(rec)
    lines = ["cell (N_a,N_ac,N_uc) | solver | n | median_wall_s | mean_wall_s"
             " | mean_pctE | max_pctE | timeouts"]
    for cell in sorted(cells):
        for solver in sorted(cells[cell]):
            recs = cells[cell][solver]
            walls = [r.wall_s for r in recs]
            pcts = [r.pct_e for r in recs if r.pct_e is not None]
            nto = sum(r.timed_out for r in recs)
            pct_s = f"{statistics.mean(pcts):.3f} | {max(pcts):.3f}" if pcts else "- | -"
            lines.append(f"{cell} | {solver} | {len(recs)}"
                         f" | {statistics.median(walls):.4f}"
                         f" | {statistics.mean(walls):.4f} | {pct_s} | {nto}")
    return "\n".join(lines) + "\n"


def default_grid() -> list:
    """Desk-scale benchmark grid: all feasible (N_a, N_ac, N_uc) cells."""
    cells = []
    for n_a in (12, 20, 30):
        for n_ac in (1, 2, 3):
            for n_uc in (0, 2, 4, 8):
                if n_a - n_uc >= 3 * n_ac:
                    cells.append((n_a, n_ac, n_uc))
    return cells
