"""Defender-to-task assignment: interception matching, gathering plans and
split-event reassignment.

Three solvers cover a split event: the full exact program, a reduced exact
program that only lets the net's terminal defenders intercept, and a
hierarchical heuristic that decomposes the problem left/right.  All of them
emit the same assignment structure, so their costs compare directly under
one evaluator.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from . import binprog
from .binprog import BinaryProgram, Constraint, LARGE_COST
from .dynamics import (AgentParams, AgentState, WorldGeometry, interception_time,
                       reach_distance, speed_bound, time_optimal_traj)
from .formations import (NetTeam, line_slots, split_clusters_equal,
                         split_unclustered_groups, terminal_groups)

log = logging.getLogger(__name__)

#: Collision sampling pitch along pursuit trajectories (seconds).
COLLISION_DT = 0.1

#: Programs at or below this size go through the generic branch-and-bound
#: solver directly; larger interception matchings use the matching-specific
#: exact search (same optimum, far fewer nodes).
GENERIC_SOLVER_MAX_VARS = 26


class ResourceTable:
    """Cluster size -> defender head-count budget.

    Defaults to identity.  Explicit entries must be strictly increasing in
    the cluster size; sub-identity entries (fewer defenders than attackers)
    are allowed but logged, since they give up the one-defender-per-attacker
    fallback.
    """

    def __init__(self, table: dict | None = None):
        self.table = dict(table) if table else {}
        keys = sorted(self.table)
        for a, b in zip(keys, keys[1:]):
            if self.table[a] >= self.table[b]:
                raise ValueError("resource table must be strictly increasing")
        for k, v in self.table.items():
            if v < k:
                log.warning("resource table assigns %d defenders to %d attackers", v, k)

    def __call__(self, n: int) -> int:
        return int(self.table.get(n, n))


def allocate_capacities(sizes, n_available: int, resources=None, floor: int = 3):
    """Defender head-counts per cluster, repaired to use exactly what exists.

    Starts from the resource table and walks clusters in descending size
    order (ties by index), removing or adding one defender per visit until
    the total matches ``n_available``.  No cluster drops below ``floor``.
    """
    resources = resources or ResourceTable()
    caps = [resources(int(s)) for s in sizes]
    if not caps:
        if n_available > 0:
            raise ValueError(f"{n_available} defenders left over with no clusters")
        return caps
    order = sorted(range(len(caps)), key=lambda k: (-sizes[k], k))
    guard = 0
    while sum(caps) > n_available:
        moved = False
        for k in order:
            if sum(caps) <= n_available:
                break
            if caps[k] > floor:
                caps[k] -= 1
                moved = True
        if not moved:
            raise ValueError(
                f"cannot cover clusters {list(sizes)} with {n_available} defenders")
        guard += 1
        if guard > 10000:
            raise RuntimeError("capacity repair failed to converge")
    while sum(caps) < n_available:
        for k in order:
            if sum(caps) >= n_available:
                break
            caps[k] += 1
    return caps


# ---------------------------------------------------------------------------
# Engagements and pairwise costs


@dataclass
class Engagement:
    """One defender committed to one attacker, with its pursuit geometry."""

    defender: AgentState
    attacker: AgentState
    t_int: float                  # time to close, +inf if never
    intercept_point: np.ndarray   # aim point of the straight pursuit
    winnable: bool                # interception beats the attacker's dash


def build_engagement(defender: AgentState, attacker: AgentState,
                     world: WorldGeometry, d_params: AgentParams,
                     a_params: AgentParams) -> Engagement:
    t_attack = world.distance_to_protected(attacker.position) / speed_bound(a_params)
    t_int = interception_time(defender, attacker, world, d_params, a_params,
                              horizon=t_attack + 1.0)
    winnable = math.isfinite(t_int) and t_int <= t_attack
    if math.isfinite(t_int):
        d = world.distance_to_protected(attacker.position)
        if d <= 0.0:
            point = attacker.position.copy()
        else:
            path = time_optimal_traj(attacker.position, world)
            point = path.position_at(speed_bound(a_params) * t_int)
    else:
        point = attacker.position.copy()
    return Engagement(defender, attacker, t_int, np.asarray(point, dtype=float),
                      winnable)


def interception_cost(defender: AgentState, attacker: AgentState,
                      world: WorldGeometry, d_params: AgentParams,
                      a_params: AgentParams) -> float:
    """Time to capture inside the winning region, else the large constant."""
    eng = build_engagement(defender, attacker, world, d_params, a_params)
    return eng.t_int if eng.winnable else LARGE_COST


def _pursuit_samples(eng: Engagement, d_params: AgentParams, times: np.ndarray) -> np.ndarray:
    """Defender positions along its straight pursuit ray at given times."""
    d0 = eng.defender.position
    rel = eng.intercept_point - d0
    dist = float(np.linalg.norm(rel))
    if dist == 0.0:
        return np.tile(d0, (len(times), 1))
    u = rel / dist
    v_par = float(np.dot(eng.defender.velocity, u))
    v_max = speed_bound(d_params)
    c = d_params.drag
    reach = v_max * times - (v_max - v_par) * (-np.expm1(-c * times)) / c
    reach = np.clip(reach, 0.0, dist)
    return d0[None, :] + reach[:, None] * u[None, :]


def collision_cost(eng_a: Engagement, eng_b: Engagement, d_params: AgentParams,
                   horizon: float = 120.0) -> float:
    """Inverse time-to-collision of two committed pursuits, 0 if none.

    Defined only when both pursuits actually intercept (a hopeless pursuit
    already carries the dominating sentinel cost).  Both trajectories are
    sampled at a 0.1 s pitch until the earlier capture completes; the first
    sample with separation under twice the body radius sets the collision
    time (clamped to one pitch so a coincident start maps to a finite,
    dominating cost).
    """
    if not (eng_a.winnable and eng_b.winnable):
        return 0.0
    t_end = min(eng_a.t_int, eng_b.t_int, horizon)
    if t_end <= 0.0:
        return 0.0
    times = np.arange(0.0, t_end + 0.5 * COLLISION_DT, COLLISION_DT)
    pa = _pursuit_samples(eng_a, d_params, times)
    pb = _pursuit_samples(eng_b, d_params, times)
    dist = np.linalg.norm(pa - pb, axis=1)
    hits = np.flatnonzero(dist < 2.0 * d_params.body_radius)
    if len(hits) == 0:
        return 0.0
    t_col = max(float(times[hits[0]]), COLLISION_DT)
    return 1.0 / t_col


def _point_seg_dist(pts: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Rowwise distance from pts (m,2) to segments a->b ((m,2) each)."""
    ab = b - a
    denom = np.maximum(np.sum(ab * ab, axis=1), 1e-12)
    t = np.clip(np.sum((pts - a) * ab, axis=1) / denom, 0.0, 1.0)
    proj = a + t[:, None] * ab
    return np.linalg.norm(pts - proj, axis=1)


def _seg_seg_dist(p0, p1, q0: np.ndarray, q1: np.ndarray) -> np.ndarray:
    """Distance from segment p0->p1 to each segment q0[i]->q1[i].

    Zero for properly crossing pairs, otherwise the closest-endpoint
    distance (exact for segments).
    """
    m = len(q0)
    P0 = np.broadcast_to(p0, (m, 2))
    P1 = np.broadcast_to(p1, (m, 2))
    d = np.minimum.reduce([
        _point_seg_dist(P0, q0, q1), _point_seg_dist(P1, q0, q1),
        _point_seg_dist(q0, P0, P1), _point_seg_dist(q1, P0, P1)])
    r = p1 - p0
    s = q1 - q0
    c1 = r[0] * (q0[:, 1] - p0[1]) - r[1] * (q0[:, 0] - p0[0])
    c2 = r[0] * (q1[:, 1] - p0[1]) - r[1] * (q1[:, 0] - p0[0])
    c3 = s[:, 0] * (p0[1] - q0[:, 1]) - s[:, 1] * (p0[0] - q0[:, 0])
    c4 = s[:, 0] * (p1[1] - q0[:, 1]) - s[:, 1] * (p1[0] - q0[:, 0])
    crossing = (c1 * c2 < 0) & (c3 * c4 < 0)
    d[crossing] = 0.0
    return d


def _collision_matrix(engagements, d_params: AgentParams, horizon: float = 120.0,
                      layout: tuple | None = None):
    """Pairwise collision costs over a flat engagement list.

    A pair can only collide if its swept path segments pass within the
    body-contact threshold, so pairs are prefiltered geometrically (exact:
    every sampled position lies on those segments) and only the candidates
    get time-sampled.  ``layout=(n_rows, n_cols)`` marks the list as a
    row-major grid; pairs sharing a row or column are skipped (they can
    never be co-active in a one-task matching).  Returns {(a, b): cost}
    over index pairs a < b with nonzero cost.
    """
    n = len(engagements)
    if n < 2:
        return {}
    thr = 2.0 * d_params.body_radius
    t_end = np.empty(n)
    starts = np.empty((n, 2))
    ends = np.empty((n, 2))
    live = np.zeros(n, dtype=bool)
    for idx, e in enumerate(engagements):
        t_end[idx] = min(e.t_int, horizon)
        live[idx] = e.winnable and e.t_int > 0.0
        starts[idx] = e.defender.position
        rel = e.intercept_point - e.defender.position
        dist = float(np.linalg.norm(rel))
        if dist == 0.0 or not live[idx]:
            ends[idx] = starts[idx]
            continue
        u = rel / dist
        v_par = float(np.dot(e.defender.velocity, u))
        span = min(max(reach_distance(float(t_end[idx]), v_par, d_params), 0.0), dist)
        ends[idx] = starts[idx] + span * u
    if layout is not None:
        rows = np.arange(n) // layout[1]
        cols = np.arange(n) % layout[1]
    pairs_a, pairs_b, windows = [], [], []
    for a in range(n - 1):
        if not live[a]:
            continue
        d = _seg_seg_dist(starts[a], ends[a], starts[a + 1:], ends[a + 1:])
        if layout is not None:
            clash = (rows[a + 1:] == rows[a]) | (cols[a + 1:] == cols[a])
            d[clash] = math.inf
        d[~live[a + 1:]] = math.inf
        for off in np.flatnonzero(d < thr):
            b = a + 1 + int(off)
            window = min(t_end[a], t_end[b])
            if window <= 0.0:
                continue
            pairs_a.append(a)
            pairs_b.append(b)
            windows.append(window)
    if not pairs_a:
        return {}
    pairs_a = np.array(pairs_a)
    pairs_b = np.array(pairs_b)
    windows = np.array(windows)
    times = np.arange(0.0, float(windows.max()) + 0.5 * COLLISION_DT, COLLISION_DT)
    involved = np.unique(np.concatenate([pairs_a, pairs_b]))
    trajs = np.zeros((n, len(times), 2))
    for idx in involved:
        trajs[idx] = _pursuit_samples(engagements[idx], d_params, times)
    out = {}
    thr2 = thr * thr
    for s0 in range(0, len(pairs_a), 2048):
        sl = slice(s0, s0 + 2048)
        diff = trajs[pairs_a[sl]] - trajs[pairs_b[sl]]
        d2 = np.einsum("ptk,ptk->pt", diff, diff)
        below = (d2 < thr2) & (times[None, :] <= windows[sl][:, None] + 1e-12)
        any_hit = below.any(axis=1)
        firsts = np.argmax(below, axis=1)
        for p in np.flatnonzero(any_hit):
            t_col = max(float(times[firsts[p]]), COLLISION_DT)
            out[(int(pairs_a[sl][p]), int(pairs_b[sl][p]))] = 1.0 / t_col
    return out


# ---------------------------------------------------------------------------
# Interception assignment (collision-aware matching)


def build_interception_program(defenders, attackers, w: float,
                               world: WorldGeometry, d_params: AgentParams,
                               a_params: AgentParams):
    """Binary program matching defenders to attackers, collisions weighted in.

    Variables index (defender j, attacker i) as j * n_att + i.  Every
    attacker gets exactly one defender; each defender takes at most one
    attacker (exactly one in the square case, matching the one-shot
    formulation; the at-most-one relaxation covers the surplus-defender
    case, where forcing every defender onto an attacker would be
    infeasible).
    Returns (program, engagement matrix).
    """
    if not (0.0 <= w < 1.0):
        raise ValueError("collision weight w must be in [0, 1)")
    n_d, n_a = len(defenders), len(attackers)
    if n_d < n_a:
        raise ValueError(f"{n_a} attackers but only {n_d} defenders")
    engs = [[build_engagement(d, a, world, d_params, a_params) for a in attackers]
            for d in defenders]
    lin = np.zeros(n_d * n_a)
    meta = []
    for j in range(n_d):
        for i in range(n_a):
            cost = engs[j][i].t_int if engs[j][i].winnable else LARGE_COST
            lin[j * n_a + i] = (1.0 - w) * cost
            meta.append(("int", j, i))
    flat = [engs[j][i] for j in range(n_d) for i in range(n_a)]
    col = _collision_matrix(flat, d_params, layout=(n_d, n_a))
    qp, qc = [], []
    for (u, v), cost in sorted(col.items()):
        ju, iu = divmod(u, n_a)
        jv, iv = divmod(v, n_a)
        if ju == jv or iu == iv:
            continue  # excluded by the one-task rows anyway
        qp.append((u, v))
        qc.append(2.0 * w * cost)  # ordered double-sum folds to 2x per pair
    eqs = [Constraint(rhs=1.0, lin_idx=[j * n_a + i for j in range(n_d)],
                      lin_coef=np.ones(n_d)) for i in range(n_a)]
    ges = []
    for j in range(n_d):
        idx = [j * n_a + i for i in range(n_a)]
        if n_d == n_a:
            eqs.append(Constraint(rhs=1.0, lin_idx=idx, lin_coef=np.ones(n_a)))
        else:
            ges.append(Constraint(rhs=-1.0, lin_idx=idx, lin_coef=-np.ones(n_a)))
    prog = BinaryProgram(n_vars=n_d * n_a, linear_cost=lin,
                         quad_pairs=np.array(qp, dtype=np.int64).reshape(-1, 2),
                         quad_coef=np.array(qc),
                         eq_constraints=eqs, ge_constraints=ges, var_meta=meta)
    return prog, engs


def _matching_branch_bound(lin: np.ndarray, quad: dict, node_limit=2_000_000):
    """Exact minimum of a one-to-one matching with nonnegative pair costs.

    lin is (n_d, n_a) with n_d >= n_a; quad maps ((j,i),(j2,i2)) unordered
    pairs to added cost when both assignments are active.  Bound: assigned
    cost so far plus the linear-assignment optimum of the remainder (valid
    since pair costs are nonnegative).
    """
    n_d, n_a = lin.shape
    if any(c < 0.0 for c in quad.values()):
        raise ValueError("matching search requires nonnegative pair costs")

    def lap_value(cols, rows_used):
        rows = [j for j in range(n_d) if j not in rows_used]
        if not cols:
            return 0.0, {}
        sub = lin[np.ix_(rows, cols)]
        ri, ci = linear_sum_assignment(sub)
        val = float(sub[ri, ci].sum())
        return val, {cols[c]: rows[r] for r, c in zip(ri, ci)}

    def full_cost(assign):
        val = sum(lin[j, i] for i, j in assign.items())
        items = sorted(assign.items())
        for x in range(len(items)):
            for y in range(x + 1, len(items)):
                (ia, ja), (ib, jb) = items[x], items[y]
                key = ((ja, ia), (jb, ib)) if (ja, ia) <= (jb, ib) else ((jb, ib), (ja, ia))
                val += quad.get(key, 0.0)
        return val

    base_val, base_assign = lap_value(list(range(n_a)), set())
    best_assign = dict(base_assign)
    best = full_cost(best_assign)
    if best <= base_val + 1e-15 or not quad:
        return best_assign
    nodes = 0

    def quad_with(assign, j, i):
        extra = 0.0
        for i2, j2 in assign.items():
            key = ((j, i), (j2, i2)) if (j, i) <= (j2, i2) else ((j2, i2), (j, i))
            extra += quad.get(key, 0.0)
        return extra

    def dfs(i, assign, cost):
        nonlocal best, best_assign, nodes
        nodes += 1
        if nodes > node_limit:
            raise binprog.SolveBudgetExceeded(nodes, 0.0)
        if i == n_a:
            if cost < best - 1e-12:
                best, best_assign = cost, dict(assign)
            return
        remaining = list(range(i + 1, n_a))
        used = set(assign.values())
        cands = sorted((lin[j, i], j) for j in range(n_d) if j not in used)
        for base_c, j in cands:
            step = base_c + quad_with(assign, j, i)
            rem_val, rem_assign = lap_value(remaining, used | {j})
            if cost + step + rem_val >= best - 1e-12:
                continue
            # The relaxed completion is itself a feasible candidate.
            cand = dict(assign)
            cand[i] = j
            cand.update(rem_assign)
            cand_cost = full_cost(cand)
            if cand_cost < best - 1e-12:
                best, best_assign = cand_cost, cand
            assign[i] = j
            dfs(i + 1, assign, cost + step)
            del assign[i]
        return

    dfs(0, {}, 0.0)
    return best_assign


def assign_interceptors(defenders, attackers, w: float,
                        world: WorldGeometry, d_params: AgentParams,
                        a_params: AgentParams) -> dict:
    """Collision-aware defender-to-attacker matching.

    Returns {attacker index -> defender index}.  Small programs run through
    the generic exact solver; larger ones use the matching-specific exact
    search, which prices collision pairs identically.
    """
    n_d, n_a = len(defenders), len(attackers)
    if n_a == 0:
        return {}
    prog, engs = build_interception_program(defenders, attackers, w, world,
                                            d_params, a_params)
    if prog.n_vars <= GENERIC_SOLVER_MAX_VARS:
        sol = binprog.solve(prog)
        if sol.status != "optimal":
            raise RuntimeError("interception matching infeasible")
        beta = {}
        for j in range(n_d):
            for i in range(n_a):
                if sol.assignment[j * n_a + i]:
                    if i not in beta:  # argmax tie-break: lowest defender index
                        beta[i] = j
        return beta
    lin = np.array([[(1.0 - w) * (engs[j][i].t_int if engs[j][i].winnable else LARGE_COST)
                     for i in range(n_a)] for j in range(n_d)])
    quad = {}
    for (u, v), coef in zip(prog.quad_pairs, prog.quad_coef):
        ju, iu = divmod(int(u), n_a)
        jv, iv = divmod(int(v), n_a)
        key = ((ju, iu), (jv, iv)) if (ju, iu) <= (jv, iv) else ((jv, iv), (ju, iu))
        quad[key] = float(coef)
    assign = _matching_branch_bound(lin, quad)
    return {i: j for i, j in assign.items()}


# ---------------------------------------------------------------------------
# Gathering: slot matching and formation placement


def _lap_square(cost: np.ndarray):
    ri, ci = linear_sum_assignment(cost)
    total = float(cost[ri, ci].sum())
    row_of_col = np.zeros(cost.shape[1], dtype=int)
    row_of_col[ci] = ri
    return total, row_of_col


def _lex_min_assignment(cost: np.ndarray) -> np.ndarray:
    """Optimal assignment, lexicographically smallest in slot-major order.

    Fixes slots left to right to the smallest defender index that keeps the
    reduced problem at the global optimum.
    """
    n = cost.shape[0]
    total, _ = _lap_square(cost)
    tol = 1e-9 * (1.0 + abs(total))
    available = list(range(n))
    out = np.zeros(n, dtype=int)
    remaining = total
    for s in range(n):
        rest = list(range(s + 1, n))
        for j in available:
            if rest:
                sub = cost[np.ix_([r for r in available if r != j], rest)]
                ri, ci = linear_sum_assignment(sub)
                tail = float(sub[ri, ci].sum())
            else:
                tail = 0.0
            if cost[j, s] + tail <= remaining + tol:
                out[s] = j
                available.remove(j)
                remaining -= cost[j, s]
                break
        else:
            raise RuntimeError("lexicographic assignment repair failed")
    return out


def gather_assignment(defender_pos, slot_groups, d_params: AgentParams):
    """Min-total-distance matching of defenders onto gathering slots.

    ``slot_groups`` is one array of slot positions per cluster; the flat
    slot count must equal the defender count.  Returns (teams, times) where
    teams[k][l] is the defender index on slot l of cluster k and times[k]
    is the slowest member's straight-line travel time to its slot.
    """
    dpos = np.asarray(defender_pos, dtype=float).reshape(-1, 2)
    groups = [np.asarray(g, dtype=float).reshape(-1, 2) for g in slot_groups]
    slots = np.concatenate(groups) if groups else np.zeros((0, 2))
    if len(slots) != len(dpos):
        raise ValueError(f"{len(dpos)} defenders cannot fill {len(slots)} slots")
    if len(slots) == 0:
        return [], []
    cost = np.linalg.norm(dpos[:, None, :] - slots[None, :, :], axis=2)
    assign = _lex_min_assignment(cost)
    v_d = speed_bound(d_params)
    teams, times = [], []
    s0 = 0
    for g in groups:
        idx = assign[s0:s0 + len(g)]
        teams.append([int(j) for j in idx])
        times.append(float(np.max(np.linalg.norm(dpos[idx] - g, axis=1))) / v_d)
        s0 += len(g)
    return teams, times


@dataclass
class GatheringPlan:
    slots: list                 # per-cluster slot arrays
    teams: list                 # per-cluster defender index lists (net order)
    centers: list               # per-cluster formation centers
    headings: list              # per-cluster formation headings (facing swarm)
    gammas: list                # converged path parameters
    gather_times: list          # per-cluster slowest-member travel time
    lead_errors: list           # per-cluster lead-time residuals, s
    converged: bool
    iterations: int


def plan_gathering_formations(defender_states, cluster_points, world: WorldGeometry,
                              d_params: AgentParams, a_params: AgentParams,
                              lead_times=5.0, eps_tol: float = 0.1,
                              spacing: float = 4.0, standoff_margin: float | None = None,
                              resources=None, max_iters: int = 60) -> GatheringPlan:
    """Place line formations on each swarm's shortest path, as far out as the
    defenders can reach in time.

    For each cluster the formation center slides along the swarm's straight
    path to the protected area; a joint slot matching prices each candidate
    placement and a per-cluster bisection drives the defenders' arrival
    margin to the requested lead time.  Formations face back along the path
    toward the oncoming swarm.  If the margins cannot be met anywhere the
    best iterate is returned with a warning (converged=False).
    """
    n_clusters = len(cluster_points)
    if n_clusters == 0:
        raise ValueError("no clusters to gather against")
    dpos = np.array([d.position for d in defender_states])
    sizes = [len(np.asarray(p).reshape(-1, 2)) for p in cluster_points]
    if any(s == 0 for s in sizes):
        raise ValueError("empty attacker cluster")
    caps = allocate_capacities(sizes, len(defender_states), resources)
    if standoff_margin is None:
        standoff_margin = world.protected_radius / 3.0
    if np.isscalar(lead_times):
        lead_times = [float(lead_times)] * n_clusters
    v_a = speed_bound(a_params)

    paths, lo, hi = [], [], []
    for pts in cluster_points:
        com = np.asarray(pts, dtype=float).reshape(-1, 2).mean(axis=0)
        path = time_optimal_traj(com, world)
        paths.append(path)
        lo.append(0.0)
        hi.append(max(path.total_length - standoff_margin, 1e-6))

    best = None
    converged = False
    it = 0
    gammas = [0.5 * (a + b) for a, b in zip(lo, hi)]
    for it in range(1, max_iters + 1):
        gammas = [0.5 * (a + b) for a, b in zip(lo, hi)]
        slot_groups, centers, headings = [], [], []
        for k, path in enumerate(paths):
            center = path.position_at(gammas[k])
            heading = path.tangent_angle_at(gammas[k]) - math.pi
            slot_groups.append(line_slots(center, heading, caps[k], spacing))
            centers.append(center)
            headings.append(heading)
        teams, times = gather_assignment(dpos, slot_groups, d_params)
        errors = [gammas[k] / v_a - times[k] - lead_times[k] for k in range(n_clusters)]
        total = sum(abs(e) for e in errors)
        if best is None or total < best[0]:
            best = (total, slot_groups, teams, centers, headings, list(gammas),
                    times, errors)
        if total <= eps_tol:
            converged = True
            break
        for k, err in enumerate(errors):
            if err < 0.0:
                lo[k] = gammas[k]   # defenders late: fall back toward the area
            else:
                hi[k] = gammas[k]   # slack: push the formation farther out
    if not converged:
        log.warning("gathering placement did not converge (residual %.3f s)", best[0])
    _, slot_groups, teams, centers, headings, gammas, times, errors = best
    return GatheringPlan(slots=slot_groups, teams=teams, centers=centers,
                         headings=headings, gammas=gammas, gather_times=times,
                         lead_errors=errors, converged=converged, iterations=it)


# ---------------------------------------------------------------------------
# Split-event snapshot and reassignment programs


@dataclass
class SplitSnapshot:
    """Frozen pre-split state of one net team and its fragmented swarm.

    Defender arrays are in net order; ``defender_ids`` maps positions back
    to caller identifiers.  Capacities default to the resource budget of
    each new cluster and must book-keep exactly against the team size.
    """

    defender_pos: np.ndarray
    defender_vel: np.ndarray
    cluster_centers: np.ndarray
    cluster_sizes: list
    unclustered_pos: np.ndarray
    unclustered_vel: np.ndarray
    world: WorldGeometry
    d_params: AgentParams
    a_params: AgentParams
    defender_ids: list | None = None
    unclustered_ids: list | None = None
    capacities: list | None = None
    parent_size: int | None = None

    def __post_init__(self):
        self.defender_pos = np.asarray(self.defender_pos, dtype=float).reshape(-1, 2)
        self.defender_vel = np.asarray(self.defender_vel, dtype=float).reshape(-1, 2)
        self.cluster_centers = np.asarray(self.cluster_centers, dtype=float).reshape(-1, 2)
        self.cluster_sizes = [int(s) for s in self.cluster_sizes]
        self.unclustered_pos = np.asarray(self.unclustered_pos, dtype=float).reshape(-1, 2)
        self.unclustered_vel = np.asarray(self.unclustered_vel, dtype=float).reshape(-1, 2)
        if self.defender_ids is None:
            self.defender_ids = list(range(len(self.defender_pos)))
        if self.unclustered_ids is None:
            self.unclustered_ids = list(range(len(self.unclustered_pos)))
        if self.capacities is None:
            self.capacities = [int(s) for s in self.cluster_sizes]
        if self.parent_size is None:
            self.parent_size = sum(self.cluster_sizes) + len(self.unclustered_pos)
        if len(self.cluster_centers) != len(self.cluster_sizes):
            raise ValueError("cluster centers/sizes mismatch")

    @property
    def n_defenders(self) -> int:
        return len(self.defender_pos)

    @property
    def n_clusters(self) -> int:
        return len(self.cluster_sizes)

    @property
    def n_unclustered(self) -> int:
        return len(self.unclustered_pos)

    def defender_state(self, pos: int) -> AgentState:
        return AgentState(self.defender_pos[pos], self.defender_vel[pos])

    def unclustered_state(self, i: int) -> AgentState:
        return AgentState(self.unclustered_pos[i], self.unclustered_vel[i])

    def check_bookkeeping(self):
        need = sum(self.capacities) + self.n_unclustered
        if need != self.n_defenders:
            raise ValueError(
                f"capacity bookkeeping broken: {sum(self.capacities)} herding + "
                f"{self.n_unclustered} intercepting != {self.n_defenders} defenders")

    def engagements(self):
        """(n_d, n_u) engagement grid, cached."""
        if not hasattr(self, "_engs"):
            self._engs = [
                [build_engagement(self.defender_state(j), self.unclustered_state(i),
                                  self.world, self.d_params, self.a_params)
                 for i in range(self.n_unclustered)]
                for j in range(self.n_defenders)
            ]
        return self._engs

    def herd_cost(self, j: int, k: int) -> float:
        return float(np.linalg.norm(self.cluster_centers[k] - self.defender_pos[j]))

    def interception_cost(self, j: int, i: int) -> float:
        eng = self.engagements()[j][i]
        return eng.t_int if eng.winnable else LARGE_COST

    def collision_costs(self):
        """{((j,i),(j2,i2)): cost} over unordered engagement pairs."""
        if not hasattr(self, "_col"):
            n_u = self.n_unclustered
            if n_u == 0:
                self._col = {}
            else:
                flat = [self.engagements()[j][i]
                        for j in range(self.n_defenders) for i in range(n_u)]
                raw = _collision_matrix(flat, self.d_params,
                                        layout=(self.n_defenders, n_u))
                out = {}
                for (u, v), cost in raw.items():
                    ju, iu = divmod(u, n_u)
                    jv, iv = divmod(v, n_u)
                    if ju == jv or iu == iv:
                        continue
                    out[((ju, iu), (jv, iv))] = cost
                self._col = out
        return self._col


@dataclass
class SplitAssignment:
    """Per-cluster net teams plus interceptor matching after a split."""

    teams: list          # per cluster: defender positions in net order
    interceptors: dict   # unclustered index -> defender position
    objective: float
    solver: str
    node_count: int = 0
    wall_time: float = 0.0

    def team_ids(self, snap: SplitSnapshot, k: int) -> list:
        return [snap.defender_ids[p] for p in self.teams[k]]

    def interceptor_ids(self, snap: SplitSnapshot) -> dict:
        return {snap.unclustered_ids[i]: snap.defender_ids[p]
                for i, p in self.interceptors.items()}


def evaluate_split_assignment(snap: SplitSnapshot, teams, interceptors) -> float:
    """Canonical cost of any split assignment: herding distances plus
    interception times plus pairwise collision prices (ordered-sum
    convention, i.e. each unordered pair counts twice)."""
    val = 0.0
    for k, team in enumerate(teams):
        for j in team:
            val += snap.herd_cost(j, k)
    items = sorted(interceptors.items())
    for i, j in items:
        val += snap.interception_cost(j, i)
    col = snap.collision_costs()
    for x in range(len(items)):
        for y in range(x + 1, len(items)):
            (ia, ja), (ib, jb) = items[x], items[y]
            key = ((ja, ia), (jb, ib)) if (ja, ia) <= (jb, ib) else ((jb, ib), (ja, ia))
            val += 2.0 * col.get(key, 0.0)
    return val


def check_split_assignment(snap: SplitSnapshot, teams, interceptors) -> list:
    """Invariant violations of a split assignment (empty list = valid)."""
    problems = []
    seen = {}
    for k, team in enumerate(teams):
        for j in team:
            if j in seen:
                problems.append(f"defender {j} assigned to {seen[j]} and cluster {k}")
            seen[j] = f"cluster {k}"
    for i, j in interceptors.items():
        if j in seen:
            problems.append(f"defender {j} assigned to {seen[j]} and attacker {i}")
        seen[j] = f"attacker {i}"
    if len(seen) != snap.n_defenders:
        missing = [j for j in range(snap.n_defenders) if j not in seen]
        problems.append(f"unassigned defenders: {missing}")
    for k, team in enumerate(teams):
        if len(team) != snap.capacities[k]:
            problems.append(f"cluster {k} got {len(team)} defenders, "
                            f"capacity {snap.capacities[k]}")
        if team and sorted(team) != list(range(min(team), max(team) + 1)):
            problems.append(f"cluster {k} team not contiguous in net order: {team}")
    for i in range(snap.n_unclustered):
        if i not in interceptors:
            problems.append(f"unclustered attacker {i} has no interceptor")
    return problems


def build_split_program(snap: SplitSnapshot, reduced: bool = False) -> BinaryProgram:
    """Assignment program over one fragmented net team.

    Variables: herd(j, k) for every defender/new-cluster pair, then int(j, i)
    interception pairs; the reduced variant only creates interception
    variables for the net's terminal defenders and pins the central ones to
    herding duty.  Constraints: one task per defender, exact per-cluster
    head counts, one interceptor per straggler, herding sub-teams contiguous
    in pre-split net order, and total conservation.
    """
    snap.check_bookkeeping()
    n_d, n_c, n_u = snap.n_defenders, snap.n_clusters, snap.n_unclustered
    if reduced and n_u > 0:
        team = NetTeam(members=list(range(n_d)), kind="open")
        left, right, _central = terminal_groups(team, n_u)
        terminals = left + right
    else:
        terminals = list(range(n_d))
    term_set = set(terminals)

    herd_index = lambda j, k: j * n_c + k
    n_herd = n_d * n_c
    int_vars = [(j, i) for j in range(n_d) if j in term_set for i in range(n_u)]
    int_index = {pair: n_herd + p for p, pair in enumerate(int_vars)}
    n_vars = n_herd + len(int_vars)

    lin = np.zeros(n_vars)
    meta = []
    for j in range(n_d):
        for k in range(n_c):
            lin[herd_index(j, k)] = snap.herd_cost(j, k)
            meta.append(("herd", j, k))
    for (j, i) in int_vars:
        lin[int_index[(j, i)]] = snap.interception_cost(j, i)
        meta.append(("int", j, i))

    qp, qc = [], []
    for ((ja, ia), (jb, ib)), cost in sorted(snap.collision_costs().items()):
        if (ja, ia) in int_index and (jb, ib) in int_index:
            qp.append((int_index[(ja, ia)], int_index[(jb, ib)]))
            qc.append(2.0 * cost)

    eqs, ges = [], []
    for j in range(n_d):
        idx = [herd_index(j, k) for k in range(n_c)]
        if j in term_set:
            idx += [int_index[(j, i)] for i in range(n_u)]
        eqs.append(Constraint(rhs=1.0, lin_idx=idx, lin_coef=np.ones(len(idx))))
    for k in range(n_c):
        idx = [herd_index(j, k) for j in range(n_d)]
        eqs.append(Constraint(rhs=float(snap.capacities[k]), lin_idx=idx,
                              lin_coef=np.ones(n_d)))
    for i in range(n_u):
        idx = [int_index[(j, i)] for j in terminals]
        eqs.append(Constraint(rhs=1.0, lin_idx=idx, lin_coef=np.ones(len(idx))))
    for k in range(n_c):
        if snap.capacities[k] <= 1:
            continue
        pairs = [(herd_index(l, k), herd_index(l + 1, k)) for l in range(n_d - 1)]
        ges.append(Constraint(rhs=float(snap.capacities[k] - 1),
                              quad_pairs=np.array(pairs, dtype=np.int64),
                              quad_coef=np.ones(len(pairs))))
    eqs.append(Constraint(rhs=float(n_d), lin_idx=np.arange(n_vars),
                          lin_coef=np.ones(n_vars)))
    return BinaryProgram(n_vars=n_vars, linear_cost=lin,
                         quad_pairs=np.array(qp, dtype=np.int64).reshape(-1, 2),
                         quad_coef=np.array(qc), eq_constraints=eqs,
                         ge_constraints=ges, var_meta=meta)


def _extract_split_solution(snap: SplitSnapshot, prog: BinaryProgram,
                            sol: binprog.Solution, solver: str) -> SplitAssignment:
    n_c = snap.n_clusters
    teams = [[] for _ in range(n_c)]
    interceptors = {}
    for var, meta in enumerate(prog.var_meta):
        if not sol.assignment[var]:
            continue
        if meta[0] == "herd":
            _, j, k = meta
            teams[k].append(j)
        else:
            _, j, i = meta
            if i not in interceptors:
                interceptors[i] = j
    teams = [sorted(t) for t in teams]  # net order inherits pre-split order
    obj = evaluate_split_assignment(snap, teams, interceptors)
    return SplitAssignment(teams=teams, interceptors=interceptors, objective=obj,
                           solver=solver, node_count=sol.node_count,
                           wall_time=sol.wall_time)


def solve_split_miqcqp(snap: SplitSnapshot, node_limit=None, time_limit=None) -> SplitAssignment:
    """Exact reassignment over the full variable set."""
    prog = build_split_program(snap, reduced=False)
    sol = binprog.solve(prog, node_limit=node_limit, time_limit=time_limit)
    if sol.status != "optimal":
        raise RuntimeError("split reassignment program infeasible")
    return _extract_split_solution(snap, prog, sol, "miqcqp")


def solve_split_rs_miqcqp(snap: SplitSnapshot, node_limit=None, time_limit=None) -> SplitAssignment:
    """Exact reassignment with interception restricted to terminal defenders."""
    prog = build_split_program(snap, reduced=True)
    sol = binprog.solve(prog, node_limit=node_limit, time_limit=time_limit)
    if sol.status != "optimal":
        raise RuntimeError("reduced split reassignment program infeasible")
    return _extract_split_solution(snap, prog, sol, "rs_miqcqp")


def _sub_snapshot(snap: SplitSnapshot, defender_positions, cluster_indices) -> SplitSnapshot:
    dp = [int(p) for p in defender_positions]
    ck = [int(k) for k in cluster_indices]
    return SplitSnapshot(
        defender_pos=snap.defender_pos[dp],
        defender_vel=snap.defender_vel[dp],
        cluster_centers=snap.cluster_centers[ck],
        cluster_sizes=[snap.cluster_sizes[k] for k in ck],
        unclustered_pos=np.zeros((0, 2)),
        unclustered_vel=np.zeros((0, 2)),
        world=snap.world, d_params=snap.d_params, a_params=snap.a_params,
        defender_ids=[snap.defender_ids[p] for p in dp],
        unclustered_ids=[],
        capacities=[snap.capacities[k] for k in ck],
        parent_size=snap.parent_size,
    )


def solve_split_hierarchical(snap: SplitSnapshot, n_ac_max: int = 3,
                             w: float = 0.5, node_limit=None) -> SplitAssignment:
    """Divide-and-conquer reassignment heuristic.

    Stragglers are split across the net's perpendicular bisector and matched
    against the nearest terminal run on each side; the remaining connected
    net is then split recursively into halves of similar attacker count
    until each piece holds at most ``n_ac_max`` clusters and is solved
    exactly.  Feasible for the reduced program by construction, so its cost
    upper-bounds both exact solvers.
    """
    if n_ac_max < 3:
        raise ValueError("cluster threshold must be at least 3")
    snap.check_bookkeeping()
    n_d, n_u = snap.n_defenders, snap.n_unclustered
    interceptors = {}
    herding_positions = list(range(n_d))
    if n_u > 0:
        la, ra, ld, rd = split_unclustered_groups(snap.unclustered_pos,
                                                  snap.defender_pos)
        col = snap.collision_costs()
        for att_group, def_group in ((la, ld), (ra, rd)):
            if not att_group:
                continue
            lin = np.array([[(1.0 - w) * snap.interception_cost(p, i)
                             for i in att_group] for p in def_group])
            jmap = {p: x for x, p in enumerate(def_group)}
            imap = {i: x for x, i in enumerate(att_group)}
            quad = {}
            for ((ja, ia), (jb, ib)), cost in col.items():
                if ja in jmap and jb in jmap and ia in imap and ib in imap:
                    k1 = (jmap[ja], imap[ia])
                    k2 = (jmap[jb], imap[ib])
                    key = (k1, k2) if k1 <= k2 else (k2, k1)
                    quad[key] = 2.0 * w * cost
            beta = _matching_branch_bound(lin, quad)
            for local_i, local_j in beta.items():
                interceptors[att_group[local_i]] = def_group[local_j]
        consumed = set(ld) | set(rd)
        herding_positions = [p for p in range(n_d) if p not in consumed]

    teams = [None] * snap.n_clusters

    def recurse(cluster_idx, def_positions):
        if not cluster_idx:
            if def_positions:
                raise RuntimeError("defenders left over with no clusters")
            return
        if len(cluster_idx) > n_ac_max:
            caps = [snap.capacities[k] for k in cluster_idx]
            sizes = [snap.cluster_sizes[k] for k in cluster_idx]
            centers = snap.cluster_centers[cluster_idx]
            lc, ldef, rc, rdef = split_clusters_equal(
                centers, sizes, snap.defender_pos[def_positions], caps)
            left_clusters = [cluster_idx[k] for k in lc]
            right_clusters = [cluster_idx[k] for k in rc]
            left_defs = [def_positions[p] for p in ldef]
            right_defs = [def_positions[p] for p in rdef]
            recurse(left_clusters, left_defs)
            recurse(right_clusters, right_defs)
            return
        sub = _sub_snapshot(snap, def_positions, cluster_idx)
        result = solve_split_rs_miqcqp(sub, node_limit=node_limit)
        for local_k, k in enumerate(cluster_idx):
            teams[k] = [def_positions[p] for p in result.teams[local_k]]

    recurse(list(range(snap.n_clusters)), herding_positions)
    teams = [t if t is not None else [] for t in teams]
    obj = evaluate_split_assignment(snap, teams, interceptors)
    return SplitAssignment(teams=teams, interceptors=interceptors, objective=obj,
                           solver="heuristic")


# ---------------------------------------------------------------------------
# Snapshot (de)serialization for the CLI and regression fixtures


def snapshot_to_dict(snap: SplitSnapshot) -> dict:
    return {
        "version": "v1",
        "defenders": {"pos": snap.defender_pos.tolist(),
                      "vel": snap.defender_vel.tolist(),
                      "ids": list(snap.defender_ids)},
        "clusters": [{"center": snap.cluster_centers[k].tolist(),
                      "size": snap.cluster_sizes[k],
                      "capacity": snap.capacities[k]}
                     for k in range(snap.n_clusters)],
        "unclustered": {"pos": snap.unclustered_pos.tolist(),
                        "vel": snap.unclustered_vel.tolist(),
                        "ids": list(snap.unclustered_ids)},
        "world": {"protected_center": snap.world.protected_center.tolist(),
                  "protected_radius": snap.world.protected_radius,
                  "safe_areas": [[list(c), r] for c, r in snap.world.safe_areas],
                  "defense_annulus": list(snap.world.defense_annulus)},
        "attacker_params": {"u_max": snap.a_params.u_max, "drag": snap.a_params.drag,
                            "body_radius": snap.a_params.body_radius,
                            "sensing_radius": snap.a_params.sensing_radius},
        "defender_params": {"u_max": snap.d_params.u_max, "drag": snap.d_params.drag,
                            "body_radius": snap.d_params.body_radius,
                            "interception_radius": snap.d_params.interception_radius,
                            "sensing_radius": snap.d_params.sensing_radius},
    }


def snapshot_from_dict(d: dict) -> SplitSnapshot:
    if d.get("version") != "v1":
        raise ValueError("snapshot file must declare version 'v1'")
    w = d["world"]
    world = WorldGeometry(
        protected_center=w.get("protected_center", (0.0, 0.0)),
        protected_radius=w["protected_radius"],
        safe_areas=tuple((tuple(c), r) for c, r in w.get("safe_areas", [])),
        defense_annulus=tuple(w.get("defense_annulus", (60.0, 150.0))))
    defs = d["defenders"]
    uc = d.get("unclustered", {"pos": [], "vel": []})
    clusters = d.get("clusters", [])
    n_u = len(uc.get("pos", []))
    return SplitSnapshot(
        defender_pos=np.asarray(defs["pos"], dtype=float).reshape(-1, 2),
        defender_vel=np.asarray(defs.get("vel", np.zeros((len(defs["pos"]), 2))),
                                dtype=float).reshape(-1, 2),
        cluster_centers=np.asarray([c["center"] for c in clusters],
                                   dtype=float).reshape(-1, 2),
        cluster_sizes=[c["size"] for c in clusters],
        unclustered_pos=np.asarray(uc.get("pos", []), dtype=float).reshape(-1, 2),
        unclustered_vel=np.asarray(uc.get("vel", np.zeros((n_u, 2))),
                                   dtype=float).reshape(-1, 2),
        world=world,
        d_params=AgentParams(**d["defender_params"]),
        a_params=AgentParams(**d["attacker_params"]),
        defender_ids=defs.get("ids"),
        unclustered_ids=uc.get("ids"),
        capacities=[c["capacity"] for c in clusters] if clusters and
                   "capacity" in clusters[0] else None)


# ---------------------------------------------------------------------------
# Mode switching and cost model


def is_risk_taking_swarm(com_position, com_velocity, gathering_center,
                         world: WorldGeometry) -> bool:
    """True when a swarm has passed its blocking formation and drives inward.

    Compares the swarm center's distance to the protected center against the
    (frozen, assignment-time) gathering center's, and requires the mean
    velocity to point toward the area.  Scaling all velocities by a positive
    constant cannot change the answer: only the sign of the radial component
    matters.
    """
    rp = world.protected_center
    com = np.asarray(com_position, dtype=float).reshape(2)
    vel = np.asarray(com_velocity, dtype=float).reshape(2)
    center = np.asarray(gathering_center, dtype=float).reshape(2)
    closer = np.linalg.norm(com - rp) <= np.linalg.norm(center - rp)
    inbound = float(np.dot(com - rp, vel)) < 0.0
    return bool(closer and inbound)


@dataclass
class CostModelReport:
    """Predicted worst-case search sizes of the three split solvers."""

    n_delta: int             # full program decision-vector length
    n_delta_rs: int          # reduced program decision-vector length
    n_rs_blocks: int         # leaf solves in the hierarchical recursion
    n_ac_remainder: int      # clusters left over after whole blocks
    n_max: int               # largest leaf attacker count
    heuristic_exponents: tuple
    heuristic_exponent_sum: int
    ordering_strict: bool    # heuristic bound < reduced bound
    ordering_weak: bool      # reduced bound <= full bound


def worst_case_costs(n_attackers: int, n_clusters: int, n_unclustered: int,
                     n_defenders: int, n_ac_max: int) -> CostModelReport:
    """Exponent bookkeeping for the three solvers' worst-case 2^x costs.

    Asserts the predicted ordering heuristic < reduced <= full whenever the
    preconditions (1 < n_ac_max < n_clusters, one defender per attacker)
    hold.
    """
    if min(n_attackers, n_clusters, n_defenders) < 1 or n_unclustered < 0:
        raise ValueError("invalid dimensions")
    if n_ac_max < 2:
        raise ValueError("n_ac_max must be at least 2")
    n_delta = n_defenders * (n_clusters + n_unclustered)
    n_delta_rs = (n_defenders * n_clusters
                  + min(2 * n_unclustered, n_defenders) * n_unclustered)
    blocks = n_clusters // n_ac_max
    remainder = n_clusters - blocks * n_ac_max
    n_max = (n_attackers - n_unclustered - 3 * remainder
             - 3 * n_ac_max * max(blocks - 1, 0))
    exps = (n_unclustered ** 2,
            3 * n_ac_max ** 2 * max(blocks - 1, 0),
            n_ac_max * n_max,
            3 * remainder ** 2)
    exp_sum = sum(exps)
    relaxed = n_unclustered ** 2 + n_ac_max * n_attackers
    strict = relaxed < n_delta_rs
    weak = n_delta_rs <= n_delta
    if 1 < n_ac_max < n_clusters and n_defenders == n_attackers and not (strict and weak):
        raise RuntimeError("worst-case cost ordering violated; check dimensions")
    return CostModelReport(n_delta=n_delta, n_delta_rs=n_delta_rs,
                           n_rs_blocks=blocks, n_ac_remainder=remainder,
                           n_max=n_max, heuristic_exponents=exps,
                           heuristic_exponent_sum=exp_sum,
                           ordering_strict=strict, ordering_weak=weak)
