"""Line formations, conical envelopes and net-ordering primitives.

A "net team" is an ordered list of defenders joined pairwise by extendable
barriers: open teams are path graphs, closed teams are rings.  Everything
here is plain geometry over that ordering.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


def unit_from_angle(theta: float) -> np.ndarray:
    return np.array([math.cos(theta), math.sin(theta)])


@dataclass
class NetTeam:
    """Ordered defender indices forming an open (path) or closed (ring) net."""

    members: list           # defender indices in net order
    kind: str = "open"      # "open" | "closed"

    def __post_init__(self):
        if self.kind not in ("open", "closed"):
            raise ValueError("kind must be 'open' or 'closed'")
        if len(set(self.members)) != len(self.members):
            raise ValueError("net members must be distinct")
        if self.kind == "open" and len(self.members) < 2:
            raise ValueError("an open net needs at least 2 members")
        if self.kind == "closed" and len(self.members) < 3:
            raise ValueError("a closed net needs at least 3 members")

    def __len__(self) -> int:
        return len(self.members)


@dataclass
class LineFormation:
    """Evenly spaced slots on a line, symmetric about the center."""

    center: np.ndarray
    heading: float          # direction the formation faces, rad
    spacing: float          # slot separation, m
    slot_positions: np.ndarray = field(init=False)

    def __post_init__(self):
        self.center = np.asarray(self.center, dtype=float).reshape(2)

    @classmethod
    def build(cls, center, heading: float, count: int, spacing: float) -> "LineFormation":
        f = cls(center=center, heading=heading, spacing=spacing)
        f.slot_positions = line_slots(center, heading, count, spacing)
        return f


def line_slots(center, heading: float, count: int, spacing: float) -> np.ndarray:
    """Slot positions along the line perpendicular to the heading.

    Slot l (1-based) sits at offset spacing * (count - 2l + 1) / 2 along the
    heading rotated +90 degrees; offsets sum to zero.
    """
    if count < 1:
        raise ValueError("count must be at least 1")
    if not (spacing > 0.0):
        raise ValueError("spacing must be positive")
    c = np.asarray(center, dtype=float).reshape(2)
    o = unit_from_angle(heading + 0.5 * math.pi)
    ls = np.arange(1, count + 1)
    offsets = spacing * (count - 2 * ls + 1) / 2.0
    return c[None, :] + offsets[:, None] * o[None, :]


def conical_envelope_contains(r0, psi: float, protected_center, point) -> bool:
    """Membership in the open double cone transverse to the protected area.

    The cone apex is at r0; its axis is perpendicular to the r0 -> center
    direction, with half-angle psi.  Evaluated in a rotated frame where the
    r0 -> center direction is -y, which avoids the slope singularities of the
    tangent form.
    """
    if not (0.0 < psi < 0.5 * math.pi):
        raise ValueError("psi must be in (0, pi/2)")
    r0 = np.asarray(r0, dtype=float).reshape(2)
    rp = np.asarray(protected_center, dtype=float).reshape(2)
    p = np.asarray(point, dtype=float).reshape(2)
    axis = rp - r0
    n = np.linalg.norm(axis)
    if n == 0.0:
        raise ValueError("cone apex coincides with the protected center")
    u = axis / n
    # Rotation taking u to (0, -1): columns express the new basis.
    rel = p - r0
    x = float(rel[0] * (-u[1]) + rel[1] * u[0])   # transverse component
    y = float(rel[0] * u[0] + rel[1] * u[1])      # radial component (toward center)
    if x == 0.0 and y == 0.0:
        return False  # the apex itself is excluded (open set)
    return abs(math.atan2(abs(y), abs(x))) < psi


def terminal_groups(team: NetTeam, n_uc: int):
    """Left/right terminal and central member index sets of an open net.

    Each terminal group nominally has n_uc members (one interceptor per
    unclustered attacker); when 2 * n_uc exceeds the team size the combined
    terminal pool is capped at the team size, left end filling up first.
    Returns (left, right, central) as lists of member indices in net order.
    """
    members = list(team.members)
    total = min(2 * n_uc, len(members))
    n_left = min(n_uc, total)
    n_left = max(n_left, total - n_uc)  # cap spillover when 2*n_uc > team
    n_right = total - n_left
    left = members[:n_left]
    right = members[len(members) - n_right:] if n_right else []
    central = members[n_left:len(members) - n_right] if n_right else members[n_left:]
    return left, right, central


def split_unclustered_groups(unclustered_pos, team_pos):
    """Split stragglers across the perpendicular bisector of the net ends.

    ``team_pos`` holds defender positions in net order.  Points on the
    bisector itself count as left.  Returns
    (left_attackers, right_attackers, left_defenders, right_defenders)
    as index lists; defender lists are leading/trailing runs in net order
    sized to match their attacker group.
    """
    team_pos = np.asarray(team_pos, dtype=float).reshape(-1, 2)
    if len(team_pos) < 2:
        raise ValueError("need an open net with at least 2 members")
    uc = np.asarray(unclustered_pos, dtype=float).reshape(-1, 2)
    first, last = team_pos[0], team_pos[-1]
    mid = 0.5 * (first + last)
    normal = first - last  # points toward the left end
    left_att, right_att = [], []
    for i, q in enumerate(uc):
        if float(np.dot(q - mid, normal)) >= 0.0:
            left_att.append(i)
        else:
            right_att.append(i)
    n = len(team_pos)
    left_def = list(range(len(left_att)))
    right_def = list(range(n - len(right_att), n))
    return left_att, right_att, left_def, right_def


def split_clusters_equal(centers, sizes, team_pos, capacities=None):
    """Divide clusters (and the net) into two halves of similar attacker count.

    Clusters are sorted by descending angle of (center - net midpoint)
    relative to the (last defender - net midpoint) direction; the shortest
    prefix holding at least half the attackers forms the left group.  The
    defender split point is the total capacity of the left clusters, taken
    as a prefix in net order.  Returns (left_clusters, left_defenders,
    right_clusters, right_defenders) index lists.
    """
    centers = np.asarray(centers, dtype=float).reshape(-1, 2)
    sizes = list(sizes)
    if len(centers) < 2:
        raise ValueError("need at least two clusters to split")
    if capacities is None:
        capacities = sizes
    capacities = list(capacities)
    team_pos = np.asarray(team_pos, dtype=float).reshape(-1, 2)
    mid = 0.5 * (team_pos[0] + team_pos[-1])
    ref = team_pos[-1] - mid
    angles = []
    for c in centers:
        v = c - mid
        ang = math.atan2(ref[0] * v[1] - ref[1] * v[0], float(np.dot(ref, v)))
        angles.append(ang)
    order = sorted(range(len(centers)), key=lambda k: -angles[k])  # stable on ties
    total = sum(sizes)
    target = math.ceil(total / 2)
    left_clusters, acc = [], 0
    for k in order:
        left_clusters.append(k)
        acc += sizes[k]
        if acc >= target:
            break
    right_clusters = [k for k in order if k not in left_clusters]
    n_left_def = sum(capacities[k] for k in left_clusters)
    left_def = list(range(n_left_def))
    right_def = list(range(n_left_def, len(team_pos)))
    return left_clusters, left_def, right_clusters, right_def
