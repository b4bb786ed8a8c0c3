"""Fixed-step multi-mode defense simulation.

One engagement runs as: cluster the attackers once at t=0, send
interceptors after the stragglers and gather blocking lines on each swarm's
path, then walk the per-team phase machine gather -> seek -> enclose ->
herd while watching for swarm splits (radius over threshold), re-solving
the assignment on each split with the configured solver, and switching a
team to interception when its swarm stops avoiding the defenders.

Controllers here are deliberately plain clamped PD trackers; the point of
the simulation is the mode/assignment logic, not control-law fidelity, so
reported event times are qualitative.  Enclosed swarms are caged: the ring
of defenders acts as an impenetrable circular wall that drags its captives
toward the safe area.

Scenario files are JSON with a required ``"version": "v1"`` marker; see
``config_from_dict`` for the field list.  Traces export as two CSVs with
headers ``t,agent_id,class,x,y,vx,vy,phase,team`` and
``t,event_type,subject,object,detail``.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import assignment as asg
from . import clustering as clu
from .dynamics import AgentParams, AgentState, WorldGeometry, speed_bound, step
from .formations import line_slots

log = logging.getLogger(__name__)

ACTIVE, ENCLOSED, CAPTURED, SAFE, BREACHED = "active", "enclosed", "captured", "safe", "breached"


# ---------------------------------------------------------------------------
# Configuration


@dataclass
class AttackerSpec:
    position: tuple
    velocity: tuple = (0.0, 0.0)
    behavior: str = "swarm"      # "swarm" | "risk_taking"


@dataclass
class SplitScript:
    """Scripted dispersal: at the given time each listed subgroup steers to a
    lateral offset from the group's momentary center, transverse to the
    protected-area direction.  Singleton subgroups end up unclustered."""

    time: float
    subgroups: list              # list of (member id list, lateral offset m)


@dataclass
class ScenarioConfig:
    world: WorldGeometry
    attacker_params: AgentParams
    defender_params: AgentParams
    attackers: list
    defenders: list              # list of AgentState
    scripts: list = field(default_factory=list)
    solver: str = "rs_miqcqp"    # miqcqp | rs_miqcqp | heuristic
    dt: float = 0.02
    duration: float = 300.0
    seed: int = 0
    w: float = 0.5
    lead_time: float = 5.0
    eps_tol: float = 0.1
    n_ac_max: int = 3
    string_length: float = 10.0
    spacing: float = 4.0
    standoff_margin: float | None = None
    herd_speed_frac: float = 0.5
    eps1: float = 1.0
    eps2: float = 0.5
    resource_table: dict | None = None
    collision_avoidance: bool = True
    cbf_gains: tuple = (14.0, 45.0)
    record_every: int = 1

    def __post_init__(self):
        if not (0.0 < self.dt <= 0.1):
            raise ValueError("dt must lie in (0, 0.1]")
        if self.solver not in ("miqcqp", "rs_miqcqp", "heuristic"):
            raise ValueError(f"unknown solver {self.solver!r}")
        if self.spacing > self.string_length:
            raise ValueError("slot spacing cannot exceed the string length")
        if len(self.attackers) > len(self.defenders):
            log.warning("attackers outnumber defenders (%d vs %d)",
                        len(self.attackers), len(self.defenders))


def config_from_dict(d: dict) -> ScenarioConfig:
    """Build a scenario from its JSON dict form (schema version "v1").

    Required keys: version, world {protected_radius, safe_areas,
    defense_annulus, [protected_center]}, attacker_params/defender_params
    (AgentParams fields), attackers [{pos, vel, behavior}], defenders
    [{pos, vel}].  Optional: scripts [{t, subgroups: [{members, offset}]}],
    solver, dt, duration, seed, tunables {w, lead_time, eps_tol, n_ac_max,
    string_length, spacing, standoff_margin, herd_speed_frac, eps1, eps2},
    resource_table, collision_avoidance, cbf_gains, record_every.
    """
    if d.get("version") != "v1":
        raise ValueError("scenario config must declare version 'v1'")
    w = d["world"]
    world = WorldGeometry(
        protected_center=w.get("protected_center", (0.0, 0.0)),
        protected_radius=w["protected_radius"],
        safe_areas=tuple((tuple(c), r) for c, r in w.get("safe_areas", [])),
        defense_annulus=tuple(w.get("defense_annulus", (60.0, 150.0))),
    )
    ap = AgentParams(**d["attacker_params"])
    dp = AgentParams(**d["defender_params"])
    attackers = [AttackerSpec(position=tuple(a["pos"]),
                              velocity=tuple(a.get("vel", (0.0, 0.0))),
                              behavior=a.get("behavior", "swarm"))
                 for a in d["attackers"]]
    defenders = [AgentState(np.asarray(s["pos"], dtype=float),
                            np.asarray(s.get("vel", (0.0, 0.0)), dtype=float))
                 for s in d["defenders"]]
    scripts = [SplitScript(time=s["t"],
                           subgroups=[(list(g["members"]), float(g["offset"]))
                                      for g in s["subgroups"]])
               for s in d.get("scripts", [])]
    tun = d.get("tunables", {})
    rt = d.get("resource_table")
    if rt is not None:
        rt = {int(k): int(v) for k, v in rt.items()}
    return ScenarioConfig(
        world=world, attacker_params=ap, defender_params=dp,
        attackers=attackers, defenders=defenders, scripts=scripts,
        solver=d.get("solver", "rs_miqcqp"), dt=d.get("dt", 0.02),
        duration=d.get("duration", 300.0), seed=d.get("seed", 0),
        w=tun.get("w", 0.5), lead_time=tun.get("lead_time", 5.0),
        eps_tol=tun.get("eps_tol", 0.1), n_ac_max=tun.get("n_ac_max", 3),
        string_length=tun.get("string_length", 10.0),
        spacing=tun.get("spacing", 4.0),
        standoff_margin=tun.get("standoff_margin"),
        herd_speed_frac=tun.get("herd_speed_frac", 0.5),
        eps1=tun.get("eps1", 1.0), eps2=tun.get("eps2", 0.5),
        resource_table=rt,
        collision_avoidance=d.get("collision_avoidance", True),
        cbf_gains=tuple(d.get("cbf_gains", (14.0, 45.0))),
        record_every=d.get("record_every", 1),
    )


def load_config(path) -> ScenarioConfig:
    with open(path) as fh:
        return config_from_dict(json.load(fh))


# ---------------------------------------------------------------------------
# Trace containers


@dataclass
class Event:
    t: float
    kind: str
    subject: str
    obj: str = ""
    detail: str = ""

    def row(self) -> str:
        return f"{self.t:.3f},{self.kind},{self.subject},{self.obj},{self.detail}"


@dataclass
class SimTrace:
    records: list = field(default_factory=list)
    events: list = field(default_factory=list)
    completed: bool = True

    def log(self, t, kind, subject, obj="", detail=""):
        self.events.append(Event(round(t, 6), kind, str(subject), str(obj), str(detail)))

    def event_kinds(self) -> list:
        return [e.kind for e in self.events]

    def events_of(self, kind: str) -> list:
        return [e for e in self.events if e.kind == kind]

    def event_signature(self) -> str:
        return "\n".join(e.row() for e in self.events)

    def write_trace_csv(self, path):
        with open(path, "w") as fh:
            fh.write("t,agent_id,class,x,y,vx,vy,phase,team\n")
            for r in self.records:
                fh.write("%.3f,%s,%s,%.6f,%.6f,%.6f,%.6f,%s,%s\n" % r)

    def write_events_csv(self, path):
        with open(path, "w") as fh:
            fh.write("t,event_type,subject,object,detail\n")
            for e in self.events:
                fh.write(e.row() + "\n")


# ---------------------------------------------------------------------------
# Controllers


def clamp_accel(a: np.ndarray, u_max: float) -> np.ndarray:
    n = float(np.linalg.norm(a))
    if n > u_max and n > 0.0:
        return a * (u_max / n)
    return a


def track_point(state: AgentState, target, target_vel, params: AgentParams,
                kp: float | None = None) -> np.ndarray:
    """Clamped PD toward a (possibly moving) target point.

    Gains scale with the acceleration bound; the derivative gain aims for
    critical damping of the closed loop including the plant drag, and a
    drag-compensation feedforward keeps station on moving targets.
    """
    if kp is None:
        kp = 2.0 * params.u_max
    kd = max(2.0 * math.sqrt(kp) - params.drag, 0.0)
    tv = np.asarray(target_vel, dtype=float)
    err = np.asarray(target, dtype=float) - state.position
    a = kp * err + kd * (tv - state.velocity) + params.drag * tv
    return clamp_accel(a, params.u_max)


def defender_phase_control(phase: str, states, slots, slot_vel, params: AgentParams):
    """Acceleration per team member for one formation-tracking phase."""
    if phase not in ("gather", "seek", "enclose", "herd"):
        raise ValueError(f"not a formation phase: {phase}")
    slots = np.asarray(slots, dtype=float).reshape(-1, 2)
    out = np.zeros((len(states), 2))
    for m, st in enumerate(states):
        out[m] = track_point(st, slots[m], slot_vel, params)
    return out


def pursuit_control(state: AgentState, aim_point, params: AgentParams) -> np.ndarray:
    rel = np.asarray(aim_point, dtype=float) - state.position
    d = float(np.linalg.norm(rel))
    if d < 1e-9:
        return np.zeros(2)
    return params.u_max * rel / d


def attacker_control(behavior: str, state: AgentState, sensed_defenders,
                     world: WorldGeometry, params: AgentParams,
                     swarm_com=None, script_target=None) -> np.ndarray:
    """Attacker acceleration: dash, flock, or scripted dispersal.

    Risk-takers burn straight for the protected area.  Swarm members blend
    goal seeking with bounded inverse-square repulsion from sensed defenders
    and cohesion toward the swarm center; a scripted dispersal target
    overrides the goal term until the resulting split is processed.
    """
    if behavior == "risk_taking":
        aim = world.nearest_boundary_point(state.position)
        rel = aim - state.position
        d = float(np.linalg.norm(rel))
        if d < 1e-9:
            return np.zeros(2)
        return params.u_max * rel / d
    if script_target is not None:
        kp = 0.8
        kd = 2.0 * math.sqrt(kp)
        a = kp * (np.asarray(script_target, dtype=float) - state.position) \
            - kd * state.velocity
        return clamp_accel(a, params.u_max)
    goal = world.protected_center - state.position
    gn = float(np.linalg.norm(goal))
    a = np.zeros(2) if gn < 1e-9 else 0.9 * params.u_max * goal / gn
    r_rep = 8.0
    for dpos in sensed_defenders:
        rel = state.position - np.asarray(dpos, dtype=float)
        d = float(np.linalg.norm(rel))
        if d < 1e-9 or d > params.sensing_radius:
            continue
        a = a + params.u_max * min(1.5, (r_rep / d) ** 2) * rel / d
    if swarm_com is not None:
        rel = np.asarray(swarm_com, dtype=float) - state.position
        d = float(np.linalg.norm(rel))
        if d > 1e-9:
            a = a + 0.15 * params.u_max * min(d / 10.0, 1.0) * rel / d
    return clamp_accel(a, params.u_max)


def collision_avoid(accel_nominal, state: AgentState, neighbors,
                    params: AgentParams, k1: float = 14.0, k2: float = 45.0) -> np.ndarray:
    """Minimal-deviation barrier filter against disc neighbors.

    Each neighbor (position, velocity, safe radius) defines the barrier
    h = |dr|^2 - r_safe^2; when h'' + k1 h' + k2 h >= 0 fails under the
    nominal command (neighbor assumed coasting), the command is projected
    onto the admissible half-space, sequentially over neighbors, then
    clamped to the acceleration bound.
    """
    a = np.asarray(accel_nominal, dtype=float).copy()
    for npos, nvel, r_safe in neighbors:
        dr = state.position - np.asarray(npos, dtype=float)
        dv = state.velocity - np.asarray(nvel, dtype=float)
        h = float(np.dot(dr, dr)) - r_safe ** 2
        hd = 2.0 * float(np.dot(dr, dv))
        # h'' = 2|dv|^2 - C_D h' + 2 dr . u  with the neighbor coasting
        needed = -2.0 * float(np.dot(dv, dv)) + params.drag * hd - k1 * hd - k2 * h
        lhs = 2.0 * float(np.dot(dr, a))
        if lhs >= needed:
            continue
        denom = 2.0 * float(np.dot(dr, dr))
        if denom < 1e-12:
            continue
        a = a + (needed - lhs) / denom * dr
    return clamp_accel(a, params.u_max)


# ---------------------------------------------------------------------------
# Team bookkeeping


@dataclass
class TeamState:
    id: int
    members: list                 # defender ids in net order
    cluster: list                 # attacker ids
    phase: str                    # gather | seek | enclose | herd
    slots: np.ndarray
    center: np.ndarray
    heading: float
    gather_center0: np.ndarray    # frozen reference for the risk-taking test
    line_radius: float            # blocking-line distance from the area center
    enclose_radius: float
    safe_target: tuple | None = None    # (center, radius)
    herd_vel: np.ndarray = field(default_factory=lambda: np.zeros(2))
    slot_vel: np.ndarray = field(default_factory=lambda: np.zeros(2))


def snapshot_presplit(member_states, partition, world, d_params, a_params,
                      attacker_pos, attacker_vel, defender_ids,
                      resources) -> asg.SplitSnapshot:
    """Freeze pre-split team data plus the re-clustered swarm layout.

    ``attacker_pos``/``attacker_vel`` are in the same local index space as
    the partition; caller remaps ids.
    """
    sizes = [len(c) for c in partition.clusters]
    caps = asg.allocate_capacities(sizes,
                                   len(member_states) - len(partition.unclustered),
                                   resources)
    uc = list(partition.unclustered)
    return asg.SplitSnapshot(
        defender_pos=np.array([s.position for s in member_states]),
        defender_vel=np.array([s.velocity for s in member_states]),
        cluster_centers=partition.centers.copy() if sizes else np.zeros((0, 2)),
        cluster_sizes=sizes,
        unclustered_pos=attacker_pos[uc] if uc else np.zeros((0, 2)),
        unclustered_vel=attacker_vel[uc] if uc else np.zeros((0, 2)),
        world=world, d_params=d_params, a_params=a_params,
        defender_ids=list(defender_ids), unclustered_ids=uc, capacities=caps)


def _ring_slots(center, radius: float, count: int, base_heading: float) -> np.ndarray:
    angles = base_heading + 0.5 * math.pi + 2.0 * math.pi * np.arange(count) / count
    return np.asarray(center, dtype=float)[None, :] + radius * np.stack(
        [np.cos(angles), np.sin(angles)], axis=1)


def _off_track_error(aim, attacker_pos, world: WorldGeometry) -> float:
    """Distance of an attacker from the dash line its aim point assumed."""
    aim = np.asarray(aim, dtype=float)
    a = np.asarray(attacker_pos, dtype=float)
    if world.in_protected(a):
        return 0.0
    target = world.nearest_boundary_point(a)
    line = target - aim
    ln = float(np.linalg.norm(line))
    rel = a - aim
    if ln < 1e-9:
        return float(np.linalg.norm(rel))
    return abs(float(rel[0] * line[1] - rel[1] * line[0])) / ln


# ---------------------------------------------------------------------------
# Simulator


class Simulator:
    def __init__(self, config: ScenarioConfig):
        self.cfg = config
        self.world = config.world
        self.ap = config.attacker_params
        self.dp = config.defender_params
        n_a, n_d = len(config.attackers), len(config.defenders)
        self.apos = np.array([a.position for a in config.attackers],
                             dtype=float).reshape(n_a, 2)
        self.avel = np.array([a.velocity for a in config.attackers],
                             dtype=float).reshape(n_a, 2)
        self.abehavior = [a.behavior for a in config.attackers]
        self.astatus = [ACTIVE] * n_a
        self.ateam = [-1] * n_a
        self.script_target = [None] * n_a
        self.dpos = np.array([d.position for d in config.defenders],
                             dtype=float).reshape(n_d, 2)
        self.dvel = np.array([d.velocity for d in config.defenders],
                             dtype=float).reshape(n_d, 2)
        self.drole = ["idle"] * n_d       # idle | team | intercept
        self.dteam = [-1] * n_d
        self.dtarget = [-1] * n_d
        self.daim = [None] * n_d
        self.teams: dict[int, TeamState] = {}
        self._next_team = 0
        self.trace = SimTrace()
        self.t = 0.0
        self.DT = config.dt
        self.resources = asg.ResourceTable(config.resource_table)
        self._scripts_pending = sorted(config.scripts, key=lambda s: s.time)
        self._retarget_needed = False
        try:
            self.cluster_params = clu.dbscan_params(max(n_a, 2), max(n_d, 3),
                                                    config.string_length)
        except ValueError:
            self.cluster_params = clu.ClusteringParams(eps=1.0, min_pts=3)

    # -- helpers -----------------------------------------------------------

    def _astate(self, i: int) -> AgentState:
        return AgentState(self.apos[i], self.avel[i])

    def _dstate(self, j: int) -> AgentState:
        return AgentState(self.dpos[j], self.dvel[j])

    def _new_team_id(self) -> int:
        self._next_team += 1
        return self._next_team - 1

    def _alive(self, ids) -> list:
        return [i for i in ids if self.astatus[i] in (ACTIVE, ENCLOSED)]

    def _enclose_radius(self, cluster_size: int, team_size: int) -> float:
        thr = clu.split_threshold(max(cluster_size, 2), max(len(self.apos), 2),
                                  self.cfg.string_length, self.resources)
        want = max(thr, 1.5 * self.cfg.spacing) + 2.0 * self.dp.body_radius
        # a ring of R members closes only while adjacent gaps fit the string:
        # cap the radius at the largest closable polygon (with margin), which
        # matters for under-strength teams covering larger swarms
        closable = 0.95 * 0.5 * self.cfg.string_length / math.sin(math.pi / max(team_size, 3))
        return min(want, closable)

    def _split_threshold(self, cluster_size: int) -> float:
        return clu.split_threshold(cluster_size, max(len(self.apos), 2),
                                   self.cfg.string_length, self.resources)

    def _set_intercept(self, j: int, target: int):
        self.drole[j] = "intercept"
        self.dteam[j] = -1
        self.dtarget[j] = target
        eng = asg.build_engagement(self._dstate(j), self._astate(target),
                                   self.world, self.dp, self.ap)
        self.daim[j] = eng.intercept_point

    def _spawn_team(self, members, cluster_ids, phase, slots, center, heading,
                    gather_center0, line_radius) -> TeamState:
        tid = self._new_team_id()
        team = TeamState(id=tid, members=list(members), cluster=list(cluster_ids),
                         phase=phase, slots=np.asarray(slots, dtype=float),
                         center=np.asarray(center, dtype=float), heading=heading,
                         gather_center0=np.asarray(gather_center0, dtype=float).copy(),
                         line_radius=line_radius,
                         enclose_radius=self._enclose_radius(len(cluster_ids), len(members)))
        self.teams[tid] = team
        for j in team.members:
            self.drole[j] = "team"
            self.dteam[j] = tid
            self.dtarget[j] = -1
        for i in cluster_ids:
            self.ateam[i] = tid
        return team

    def _disband_team(self, tid: int):
        team = self.teams.pop(tid)
        for j in team.members:
            if self.dteam[j] == tid:
                self.drole[j] = "idle"
                self.dteam[j] = -1
        for i in team.cluster:
            if self.ateam[i] == tid:
                self.ateam[i] = -1

    # -- t = 0 assignment ----------------------------------------------------

    def _initial_assignment(self):
        outer = self.world.defense_annulus[1]
        center = self.world.protected_center
        engaged = [i for i in range(len(self.apos))
                   if np.linalg.norm(self.apos[i] - center) <= outer]
        if not engaged:
            return
        part = clu.cluster(self.apos[engaged], self.cluster_params)
        clusters = [[engaged[i] for i in c] for c in part.clusters]
        unclustered = [engaged[i] for i in part.unclustered]
        self.trace.log(0.0, "partition", "world",
                       detail="sizes=" + "/".join(str(len(c)) for c in clusters)
                              + f";unclustered={len(unclustered)}")
        interceptors = []
        if unclustered:
            beta = self._assign_interceptors_flexible(
                list(range(len(self.dpos))), unclustered)
            for att in sorted(beta):
                j = beta[att]
                self.abehavior[att] = "risk_taking"
                self._set_intercept(j, att)
                interceptors.append(j)
                self.trace.log(0.0, "assign_intercept", f"D{j}", f"A{att}")
            if len(beta) < len(unclustered):
                self._retarget_needed = True
        herders = [j for j in range(len(self.dpos)) if j not in interceptors]
        if clusters and herders:
            plan = asg.plan_gathering_formations(
                [self._dstate(j) for j in herders],
                [self.apos[c] for c in clusters],
                self.world, self.dp, self.ap,
                lead_times=self.cfg.lead_time, eps_tol=self.cfg.eps_tol,
                spacing=self.cfg.spacing, standoff_margin=self.cfg.standoff_margin,
                resources=self.resources)
            for k, team_idx in enumerate(plan.teams):
                members = [herders[p] for p in team_idx]
                c = np.asarray(plan.centers[k])
                team = self._spawn_team(
                    members, clusters[k], "gather", plan.slots[k], c,
                    plan.headings[k], c, float(np.linalg.norm(c - center)))
                self.trace.log(0.0, "assign_herd", f"T{team.id}",
                               detail="members=" + "+".join(map(str, members)))

    def _assign_interceptors_flexible(self, free_defenders, attackers) -> dict:
        """Interception matching that tolerates a defender shortfall.

        With enough defenders this is the standard collision-aware matching.
        When attackers outnumber the free defenders, every defender takes
        exactly one target (surplus attackers wait unassigned), priced with
        the same interception and collision costs.
        Returns {attacker id -> defender id}.
        """
        defs = [self._dstate(j) for j in free_defenders]
        atts = [self._astate(i) for i in attackers]
        if len(defs) >= len(atts):
            beta = asg.assign_interceptors(defs, atts, self.cfg.w, self.world,
                                           self.dp, self.ap)
            return {attackers[i]: free_defenders[j] for i, j in beta.items()}
        n_d = len(defs)
        lin = np.array([[asg.interception_cost(d, a, self.world, self.dp, self.ap)
                         for d in defs] for a in atts])        # rows: attackers
        engs = [asg.build_engagement(d, a, self.world, self.dp, self.ap)
                for a in atts for d in defs]
        raw = asg._collision_matrix(engs, self.dp, layout=(len(atts), n_d))
        quad = {}
        for (u, v), cost in raw.items():
            iu, ju = divmod(u, n_d)
            iv, jv = divmod(v, n_d)
            if iu == iv or ju == jv:
                continue
            key = ((iu, ju), (iv, jv)) if (iu, ju) <= (iv, jv) else ((iv, jv), (iu, ju))
            quad[key] = 2.0 * self.cfg.w * cost
        assign = asg._matching_branch_bound((1.0 - self.cfg.w) * lin, quad)
        return {attackers[i]: free_defenders[j] for j, i in assign.items()}

    # -- attacker side -------------------------------------------------------

    def _activate_scripts(self):
        while self._scripts_pending and self._scripts_pending[0].time <= self.t:
            script = self._scripts_pending.pop(0)
            everyone = self._alive(
                [i for members, _ in script.subgroups for i in members])
            if not everyone:
                continue
            com = self.apos[everyone].mean(axis=0)
            g = self.world.protected_center - com
            g = g / max(float(np.linalg.norm(g)), 1e-9)
            trans = np.array([-g[1], g[0]])
            for members, offset in script.subgroups:
                alive = self._alive(members)
                if not alive:
                    continue
                sub_com = self.apos[alive].mean(axis=0)
                base = com + offset * trans
                for i in alive:
                    self.script_target[i] = base + (self.apos[i] - sub_com)
            self.trace.log(self.t, "script", "attackers",
                           detail=f"subgroups={len(script.subgroups)}")

    def _attacker_accels(self) -> np.ndarray:
        coms = {}
        for tid, team in self.teams.items():
            alive = self._alive(team.cluster)
            if alive:
                coms[tid] = self.apos[alive].mean(axis=0)
        acc = np.zeros_like(self.apos)
        for i in range(len(self.apos)):
            if self.astatus[i] not in (ACTIVE, ENCLOSED):
                continue
            tgt = self.script_target[i]
            if tgt is not None and (self.abehavior[i] == "risk_taking"
                                    or float(np.linalg.norm(tgt - self.apos[i])) < 2.0):
                self.script_target[i] = None  # dispersal leg finished
                tgt = None
            dists = np.linalg.norm(self.dpos - self.apos[i], axis=1)
            sensed = self.dpos[dists <= self.ap.sensing_radius]
            acc[i] = attacker_control(self.abehavior[i], self._astate(i), sensed,
                                      self.world, self.ap,
                                      swarm_com=coms.get(self.ateam[i]),
                                      script_target=tgt)
        return acc

    # -- defender side ---------------------------------------------------------

    def _team_slots(self, team: TeamState) -> np.ndarray:
        alive = self._alive(team.cluster)
        n = len(team.members)
        pc = self.world.protected_center
        if team.phase == "gather":
            team.slot_vel = np.zeros(2)
            return team.slots
        if team.phase == "seek":
            com = self.apos[alive].mean(axis=0) if alive else team.center
            radial = com - pc
            rn = float(np.linalg.norm(radial))
            if rn < 1e-9:
                return team.slots
            u = radial / rn
            r_line = min(team.line_radius, max(rn - 1.0,
                                               self.world.protected_radius + 2.0))
            team.center = pc + u * r_line
            team.heading = math.atan2(u[1], u[0])
            team.slot_vel = np.zeros(2)
            return line_slots(team.center, team.heading, n, self.cfg.spacing)
        if team.phase == "enclose":
            com = self.apos[alive].mean(axis=0) if alive else team.center
            team.center = com
            team.slot_vel = self.avel[alive].mean(axis=0) if alive else np.zeros(2)
            return _ring_slots(com, team.enclose_radius, n, team.heading)
        if team.phase == "herd":
            team.center = team.center + team.herd_vel * self.DT
            team.slot_vel = team.herd_vel
            return _ring_slots(team.center, team.enclose_radius, n, team.heading)
        raise RuntimeError(f"team {team.id} in unexpected phase {team.phase}")

    def _defender_accels(self) -> np.ndarray:
        acc = np.zeros_like(self.dpos)
        for tid in sorted(self.teams):
            team = self.teams[tid]
            slots = self._team_slots(team)
            states = [self._dstate(j) for j in team.members]
            a = defender_phase_control(team.phase, states, slots, team.slot_vel,
                                       self.dp)
            for m, j in enumerate(team.members):
                acc[j] = a[m]
            team.slots = slots
        for j in range(len(self.dpos)):
            if self.drole[j] == "intercept":
                tgt = self.dtarget[j]
                if tgt < 0 or self.astatus[tgt] != ACTIVE:
                    self.drole[j] = "idle"
                    self.dtarget[j] = -1
                    self._retarget_needed = True
                    continue
                if (self.daim[j] is None
                        or _off_track_error(self.daim[j], self.apos[tgt],
                                            self.world) > 2.0):
                    self._set_intercept(j, tgt)
                acc[j] = pursuit_control(self._dstate(j), self.daim[j], self.dp)
            elif self.drole[j] == "idle":
                acc[j] = clamp_accel(-2.0 * self.dvel[j], self.dp.u_max)
        if self.cfg.collision_avoidance:
            k1, k2 = self.cfg.cbf_gains
            nets = [(t.center, t.slot_vel,
                     t.enclose_radius + 2.0 * self.dp.body_radius + 1.0)
                    for t in self.teams.values() if t.phase in ("enclose", "herd")]
            pad = 2.0 * self.dp.body_radius + 1.0
            for j in range(len(self.dpos)):
                if self.drole[j] == "idle":
                    continue
                if self.drole[j] == "intercept":
                    neighbors = [(self.dpos[j2], self.dvel[j2], pad)
                                 for j2 in range(len(self.dpos)) if j2 != j]
                    neighbors += nets
                else:
                    # formation members: full pad against other teams, a slim
                    # one against teammates so slot-keeping stays untouched
                    # while morph transits cannot cross through each other
                    mates = set(self.teams[self.dteam[j]].members)
                    slim = 2.0 * self.dp.body_radius + 0.4
                    neighbors = [(self.dpos[j2], self.dvel[j2],
                                  slim if j2 in mates else pad)
                                 for j2 in range(len(self.dpos)) if j2 != j]
                acc[j] = collision_avoid(acc[j], self._dstate(j), neighbors,
                                         self.dp, k1, k2)
        return acc

    # -- events ------------------------------------------------------------------

    def _interceptions(self):
        for j in range(len(self.dpos)):
            if self.drole[j] != "intercept":
                continue
            tgt = self.dtarget[j]
            if tgt < 0 or self.astatus[tgt] != ACTIVE:
                continue
            d = float(np.linalg.norm(self.dpos[j] - self.apos[tgt]))
            if d <= self.dp.interception_radius:
                self.astatus[tgt] = CAPTURED
                self.drole[j] = "idle"
                self.dtarget[j] = -1
                self._retarget_needed = True
                self.trace.log(self.t, "interception", f"D{j}", f"A{tgt}",
                               detail=f"dist={d:.3f}")

    def _retarget_free_interceptors(self):
        self._retarget_needed = False
        targeted = {self.dtarget[j] for j in range(len(self.dpos))
                    if self.drole[j] == "intercept"}
        waiting = [i for i in range(len(self.apos))
                   if self.astatus[i] == ACTIVE
                   and self.abehavior[i] == "risk_taking"
                   and self.ateam[i] < 0 and i not in targeted]
        if not waiting:
            return
        free = [j for j in range(len(self.dpos)) if self.drole[j] == "idle"]
        if not free:
            self._retarget_needed = True  # try again after the next capture
            return
        beta = self._assign_interceptors_flexible(free, waiting)
        for att in sorted(beta):
            self._set_intercept(beta[att], att)
            self.trace.log(self.t, "assign_intercept", f"D{beta[att]}", f"A{att}")
        if len(beta) < len(waiting):
            self._retarget_needed = True

    def _area_events(self):
        for i in range(len(self.apos)):
            if self.astatus[i] != ACTIVE:
                continue
            p = self.apos[i]
            if self.world.in_protected(p):
                self.astatus[i] = BREACHED
                self.trace.log(self.t, "breach", f"A{i}")
                continue
            for c, r in self.world.safe_areas:
                if float(np.linalg.norm(p - c)) <= r:
                    self.astatus[i] = SAFE
                    self.trace.log(self.t, "attacker_safe", f"A{i}")
                    break

    def _cage_enclosed(self):
        for team in self.teams.values():
            if team.phase not in ("enclose", "herd"):
                continue
            cage = team.enclose_radius - self.dp.body_radius - self.ap.body_radius
            for i in self._alive(team.cluster):
                if self.astatus[i] != ENCLOSED:
                    continue
                rel = self.apos[i] - team.center
                d = float(np.linalg.norm(rel))
                if d > cage and d > 1e-9:
                    u = rel / d
                    self.apos[i] = team.center + u * cage
                    vr = float(np.dot(self.avel[i] - team.herd_vel, u))
                    if vr > 0.0:
                        self.avel[i] = self.avel[i] - vr * u

    # -- splits and mode switches ---------------------------------------------------

    def _check_splits(self):
        for tid in sorted(self.teams):
            if tid not in self.teams:
                continue
            team = self.teams[tid]
            if team.phase not in ("gather", "seek", "enclose"):
                continue
            alive = self._alive(team.cluster)
            if len(alive) < 2:
                continue
            radius = clu.swarm_radius(self.apos[alive])
            thr = self._split_threshold(len(alive))
            if radius > thr:
                self._handle_split(tid, alive, radius, thr)

    def _handle_split(self, tid: int, alive, radius: float, thr: float):
        team = self.teams[tid]
        self.trace.log(self.t, "split", f"T{tid}",
                       detail=f"radius={radius:.2f};threshold={thr:.2f};size={len(alive)}")
        part = clu.cluster(self.apos[alive], self.cluster_params)
        if not part.clusters:
            # the swarm fully dissolved; hunt every member down
            self._intercept_whole_team(tid, alive, reason="dissolved")
            return
        try:
            snap = snapshot_presplit(
                [self._dstate(j) for j in team.members], part,
                self.world, self.dp, self.ap,
                self.apos[alive], self.avel[alive], team.members, self.resources)
        except ValueError:
            self._intercept_whole_team(tid, alive, reason="capacity")
            return
        snap.unclustered_ids = [alive[i] for i in part.unclustered]
        solver = {"miqcqp": asg.solve_split_miqcqp,
                  "rs_miqcqp": asg.solve_split_rs_miqcqp,
                  "heuristic": asg.solve_split_hierarchical}[self.cfg.solver]
        result = solver(snap)
        problems = asg.check_split_assignment(snap, result.teams, result.interceptors)
        if problems:
            raise RuntimeError(f"invalid reassignment at t={self.t}: {problems}")
        new_clusters = [[alive[i] for i in c] for c in part.clusters]
        parent_members = list(team.members)
        parent_center0 = team.gather_center0
        parent_line_radius = team.line_radius
        self._disband_team(tid)
        for k, members_pos in enumerate(result.teams):
            members = [parent_members[p] for p in members_pos]
            cluster_ids = new_clusters[k]
            com = self.apos[self._alive(cluster_ids)].mean(axis=0)
            radial = com - self.world.protected_center
            heading = math.atan2(radial[1], radial[0])
            new_team = self._spawn_team(
                members, cluster_ids, "seek",
                np.array([self.dpos[j] for j in members]),
                np.mean([self.dpos[j] for j in members], axis=0), heading,
                parent_center0, parent_line_radius)
            self.trace.log(self.t, "reassign_herd", f"T{new_team.id}",
                           detail="members=" + "+".join(map(str, members)))
        for local_i in sorted(result.interceptors):
            att = snap.unclustered_ids[local_i]
            j = parent_members[result.interceptors[local_i]]
            self.abehavior[att] = "risk_taking"
            self._set_intercept(j, att)
            self.trace.log(self.t, "reassign_intercept", f"D{j}", f"A{att}")

    def _intercept_whole_team(self, tid: int, attacker_ids, reason: str):
        team = self.teams[tid]
        members = list(team.members)
        self.trace.log(self.t, "risk_switch", f"T{tid}",
                       detail=f"attackers={len(attacker_ids)};reason={reason}")
        self._disband_team(tid)
        beta = self._assign_interceptors_flexible(members, list(attacker_ids))
        for att in sorted(beta):
            self._set_intercept(beta[att], att)
            self.trace.log(self.t, "assign_intercept", f"D{beta[att]}", f"A{att}")
        if len(beta) < len(attacker_ids):
            self._retarget_needed = True
        for i in attacker_ids:
            self.script_target[i] = None

    def _check_risk_switch(self):
        for tid in sorted(self.teams):
            if tid not in self.teams:
                continue
            team = self.teams[tid]
            if team.phase not in ("gather", "seek"):
                continue
            alive = self._alive(team.cluster)
            if not alive:
                continue
            com = self.apos[alive].mean(axis=0)
            vcom = self.avel[alive].mean(axis=0)
            if asg.is_risk_taking_swarm(com, vcom, team.gather_center0, self.world):
                self._intercept_whole_team(tid, alive, reason="inbound")

    # -- phase machine ---------------------------------------------------------------

    def _team_transitions(self):
        for tid in sorted(self.teams):
            team = self.teams[tid]
            alive = self._alive(team.cluster)
            if not alive:
                self._disband_team(tid)
                continue
            errs = np.linalg.norm(self.dpos[team.members] - team.slots, axis=1)
            rel_speeds = np.linalg.norm(self.dvel[team.members] - team.slot_vel, axis=1)
            formed = bool(np.all(errs <= self.cfg.eps1))
            settled = bool(np.all(rel_speeds <= self.cfg.eps2))
            com = self.apos[alive].mean(axis=0)
            if team.phase == "gather":
                if formed and settled:
                    team.phase = "seek"
                    self.trace.log(self.t, "gather_complete", f"T{tid}")
            elif team.phase == "seek":
                if float(np.linalg.norm(com - team.center)) <= team.enclose_radius + 6.0:
                    team.phase = "enclose"
                    self.trace.log(self.t, "enclose_start", f"T{tid}")
            elif team.phase == "enclose":
                ring = team.slots
                gaps = np.linalg.norm(np.roll(ring, -1, axis=0) - ring, axis=1)
                if formed and bool(np.all(gaps <= self.cfg.string_length)):
                    team.phase = "herd"
                    self.trace.log(self.t, "enclosure", f"T{tid}",
                                   detail=f"attackers={len(alive)}")
                    for i in alive:
                        self.astatus[i] = ENCLOSED
                    safe_c, safe_r = self.world.nearest_safe_area(com)
                    team.safe_target = (safe_c, safe_r)
                    team.center = com.copy()
                    d = safe_c - com
                    dn = float(np.linalg.norm(d))
                    v = self.cfg.herd_speed_frac * speed_bound(self.ap)
                    team.herd_vel = v * d / dn if dn > 1e-9 else np.zeros(2)
            elif team.phase == "herd":
                safe_c, safe_r = team.safe_target
                tol = max(safe_r - team.enclose_radius, 1.0)
                if float(np.linalg.norm(team.center - safe_c)) <= tol:
                    self.trace.log(self.t, "herd_arrival", f"T{tid}",
                                   detail=f"attackers={len(alive)}")
                    for i in alive:
                        self.astatus[i] = SAFE
                    self._disband_team(tid)

    # -- recording ------------------------------------------------------------------

    def _record(self):
        for i in range(len(self.apos)):
            phase = self.astatus[i] if self.astatus[i] != ACTIVE else self.abehavior[i]
            self.trace.records.append(
                (self.t, f"A{i}", "attacker", self.apos[i][0], self.apos[i][1],
                 self.avel[i][0], self.avel[i][1], phase, self.ateam[i]))
        for j in range(len(self.dpos)):
            phase = self.drole[j]
            if phase == "team" and self.dteam[j] in self.teams:
                phase = self.teams[self.dteam[j]].phase
            self.trace.records.append(
                (self.t, f"D{j}", "defender", self.dpos[j][0], self.dpos[j][1],
                 self.dvel[j][0], self.dvel[j][1], phase, self.dteam[j]))

    # -- main loop --------------------------------------------------------------------

    def run(self) -> SimTrace:
        try:
            self._initial_assignment()
        except Exception as exc:
            log.exception("initial assignment failed")
            self.trace.log(0.0, "error", "sim", detail=str(exc))
            self.trace.completed = False
            return self.trace
        n_steps = int(round(self.cfg.duration / self.DT))
        self._record()
        for k in range(n_steps):
            self._activate_scripts()
            try:
                a_acc = self._attacker_accels()
                d_acc = self._defender_accels()
                for i in range(len(self.apos)):
                    if self.astatus[i] in (ACTIVE, ENCLOSED):
                        st = step(self._astate(i), a_acc[i], self.DT, self.ap)
                        self.apos[i], self.avel[i] = st.position, st.velocity
                for j in range(len(self.dpos)):
                    st = step(self._dstate(j), d_acc[j], self.DT, self.dp)
                    self.dpos[j], self.dvel[j] = st.position, st.velocity
                self.t = round(self.t + self.DT, 9)
                self._cage_enclosed()
                self._interceptions()
                self._area_events()
                self._check_splits()
                self._check_risk_switch()
                self._team_transitions()
                if self._retarget_needed:
                    self._retarget_free_interceptors()
            except Exception as exc:
                log.exception("simulation step failed")
                self.trace.log(self.t, "error", "sim", detail=str(exc))
                self.trace.completed = False
                return self.trace
            if (k + 1) % self.cfg.record_every == 0:
                self._record()
            if all(s not in (ACTIVE, ENCLOSED) for s in self.astatus):
                break
        return self.trace


def run(config: ScenarioConfig) -> SimTrace:
    """Run one scenario to completion (or duration) and return its trace."""
    return Simulator(config).run()
