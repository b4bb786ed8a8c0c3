import math

import numpy as np
import pytest

from swarmdefense.formations import (LineFormation, NetTeam,
                                     conical_envelope_contains, line_slots,
                                     split_clusters_equal, split_unclustered_groups,
                                     terminal_groups)


def test_line_formation_build_and_net_team_validation():
    f = LineFormation.build((2.0, 3.0), 0.5, 4, 1.5)
    assert f.slot_positions.shape == (4, 2)
    assert np.allclose(f.slot_positions,
                       line_slots((2.0, 3.0), 0.5, 4, 1.5))
    with pytest.raises(ValueError):
        NetTeam(members=[1, 1, 2])
    with pytest.raises(ValueError):
        NetTeam(members=[1], kind="open")
    with pytest.raises(ValueError):
        NetTeam(members=[1, 2], kind="closed")
    with pytest.raises(ValueError):
        NetTeam(members=[1, 2], kind="ring")
    assert len(NetTeam(members=[3, 1, 2], kind="closed")) == 3


def slope_form_contains(r0, psi, rp, point):
    """Literal tangent-slope membership test (non-degenerate inputs only)."""
    x0, y0 = r0
    xp, yp = rp
    x, y = point
    base = math.atan2(y0 - yp, x0 - xp)
    m1 = math.tan(base - math.pi / 2 - psi)
    m2 = math.tan(base - math.pi / 2 + psi)
    s1 = (y - y0 - m1 * (x - x0) > 0) and (y - y0 - m2 * (x - x0) < 0)
    s2 = (y - y0 - m1 * (x - x0) < 0) and (y - y0 - m2 * (x - x0) > 0)
    return s1 or s2


def test_line_slots_examples():
    slots = line_slots((0.0, 0.0), 0.0, 3, 2.0)
    assert np.allclose(slots, [[0.0, 2.0], [0.0, 0.0], [0.0, -2.0]])
    assert np.allclose(line_slots((5.0, 1.0), 0.3, 1, 2.0), [[5.0, 1.0]])
    slots4 = line_slots((0.0, 0.0), 0.0, 4, 1.0)
    assert np.allclose(slots4[:, 1], [1.5, 0.5, -0.5, -1.5])


def test_line_slots_invariants():
    rng = np.random.default_rng(4)
    for _ in range(20):
        center = rng.normal(0, 10, 2)
        heading = float(rng.uniform(-math.pi, math.pi))
        count = int(rng.integers(1, 9))
        spacing = float(rng.uniform(0.5, 5.0))
        slots = line_slots(center, heading, count, spacing)
        assert np.allclose(slots.mean(axis=0), center)  # offsets cancel
        d = np.diff(slots, axis=0)
        if count > 1:
            assert np.allclose(np.linalg.norm(d, axis=1), spacing)
        facing = np.array([math.cos(heading), math.sin(heading)])
        rel = slots - center
        assert np.allclose(rel @ facing, 0.0, atol=1e-9)


def test_conical_envelope_examples():
    r0, rp = (0.0, 10.0), (0.0, 0.0)
    psi = math.pi / 4
    assert conical_envelope_contains(r0, psi, rp, (1.0, 10.0))
    assert not conical_envelope_contains(r0, psi, rp, (0.0, 11.0))
    assert conical_envelope_contains(r0, psi, rp, (-1.0, 10.0))
    assert not conical_envelope_contains(r0, psi, rp, (0.0, 10.0))  # apex excluded


def test_conical_envelope_central_symmetry():
    rng = np.random.default_rng(8)
    r0 = np.array([3.0, 7.0])
    rp = np.array([0.5, -1.0])
    for _ in range(100):
        p = rng.normal(0, 12, 2)
        a = conical_envelope_contains(r0, math.pi / 4, rp, p)
        b = conical_envelope_contains(r0, math.pi / 4, rp, 2 * r0 - p)
        assert a == b


def test_conical_envelope_matches_slope_form():
    # The printed sign patterns pick a transverse wedge pair only while both
    # boundary-line angles stay within the principal tangent branch; compare
    # literally there, and against the wedge-corrected form everywhere else.
    rng = np.random.default_rng(15)
    checked_literal = 0
    for _ in range(400):
        r0 = rng.normal(0, 10, 2)
        rp = rng.normal(0, 10, 2)
        if np.linalg.norm(r0 - rp) < 1.0:
            continue
        psi = float(rng.uniform(0.2, 1.2))
        p = rng.normal(0, 15, 2)
        got = conical_envelope_contains(r0, psi, rp, p)
        beta = math.atan2(r0[1] - rp[1], r0[0] - rp[0]) - math.pi / 2
        if math.cos(beta - psi) > 0.05 and math.cos(beta + psi) > 0.05:
            want = slope_form_contains(tuple(r0), psi, tuple(rp), tuple(p))
            assert got == want
            checked_literal += 1
        else:
            # wedge-corrected oracle: same boundary lines, but membership is
            # sharing the sign pattern with one of the transverse directions
            trans = np.array([math.cos(beta), math.sin(beta)])
            ref_in = tuple(np.asarray(r0) + trans)
            ref_out = tuple(np.asarray(r0) - trans)
            want = (_same_side_pattern(r0, psi, rp, p, ref_in)
                    or _same_side_pattern(r0, psi, rp, p, ref_out))
            assert got == want
    assert checked_literal > 50


def _line_signs(r0, psi, rp, point):
    x0, y0 = r0
    xp, yp = rp
    x, y = point
    base = math.atan2(y0 - yp, x0 - xp)
    m1 = math.tan(base - math.pi / 2 - psi)
    m2 = math.tan(base - math.pi / 2 + psi)
    v1 = y - y0 - m1 * (x - x0)
    v2 = y - y0 - m2 * (x - x0)
    return v1, v2


def _same_side_pattern(r0, psi, rp, point, reference) -> bool:
    v1, v2 = _line_signs(tuple(r0), psi, tuple(rp), tuple(point))
    w1, w2 = _line_signs(tuple(r0), psi, tuple(rp), tuple(reference))
    if v1 == 0.0 or v2 == 0.0:
        return False
    return (v1 > 0) == (w1 > 0) and (v2 > 0) == (w2 > 0)


def test_terminal_groups():
    team = NetTeam(members=list(range(1, 14)))  # 13 members, ids 1..13
    left, right, central = terminal_groups(team, 3)
    assert left == [1, 2, 3]
    assert right == [11, 12, 13]
    assert central == [4, 5, 6, 7, 8, 9, 10]
    l0, r0, c0 = terminal_groups(team, 0)
    assert l0 == [] and r0 == [] and c0 == list(range(1, 14))
    small = NetTeam(members=[7, 3, 9, 1])
    l2, r2, c2 = terminal_groups(small, 2)
    assert l2 == [7, 3] and r2 == [9, 1] and c2 == []
    # saturated: terminal pool capped at the team size, left end first
    l3, r3, c3 = terminal_groups(small, 3)
    assert len(l3) + len(r3) == 4 and c3 == []
    assert l3 + r3 == [7, 3, 9, 1]


def test_terminal_groups_preserve_order():
    team = NetTeam(members=[5, 2, 8, 0, 4, 6])
    left, right, central = terminal_groups(team, 2)
    assert left + central + right == team.members


def test_split_unclustered_groups():
    team_pos = np.array([[0.0, 10.0], [0.0, 5.0], [0.0, 0.0], [0.0, -5.0], [0.0, -10.0]])
    uc = np.array([[3.0, 8.0], [-2.0, 7.0], [1.0, -9.0]])
    la, ra, ld, rd = split_unclustered_groups(uc, team_pos)
    assert la == [0, 1] and ra == [2]
    assert ld == [0, 1] and rd == [4]
    # point exactly on the bisector goes left
    la2, ra2, _, _ = split_unclustered_groups(np.array([[7.5, 0.0]]), team_pos)
    assert la2 == [0] and ra2 == []
    # everything strictly left leaves the right group empty
    la3, ra3, ld3, rd3 = split_unclustered_groups(
        np.array([[0.0, 6.0], [2.0, 9.0]]), team_pos)
    assert ra3 == [] and rd3 == []
    assert ld3 == [0, 1]


def test_split_clusters_equal_balance():
    team_pos = np.array([[0.0, 12.0], [0.0, 4.0], [0.0, -4.0], [0.0, -12.0]])
    centers = np.array([[10.0, 8.0], [10.0, -8.0]])
    lc, ld, rc, rd = split_clusters_equal(centers, [4, 4], team_pos)
    assert lc == [0] and rc == [1]
    assert ld == [0, 1, 2, 3] and rd == []  # capacities default to sizes


def test_split_clusters_equal_prefix_rule():
    # sizes (6, 2, 2): the first cluster alone reaches ceil(10/2) = 5
    team_pos = np.vstack([np.zeros(10), np.linspace(10, -10, 10)]).T
    centers = np.array([[10.0, 9.0], [10.0, 0.0], [10.0, -9.0]])
    lc, ld, rc, rd = split_clusters_equal(centers, [6, 2, 2], team_pos)
    assert lc == [0]
    assert rc == [1, 2]
    assert len(ld) == 6


def test_split_clusters_equal_capacities_and_ties():
    team_pos = np.vstack([np.zeros(10), np.linspace(12, -12, 10)]).T
    centers = np.array([[15.0, 6.0], [15.0, 6.0], [15.0, -6.0]])  # tie on angle
    sizes = [3, 4, 3]
    caps = [3, 4, 3]
    lc, ld, rc, rd = split_clusters_equal(centers, sizes, team_pos, caps)
    # stable sort keeps input order for the tied pair
    assert lc[0] == 0
    assert sum(caps[k] for k in lc) == len(ld)
    assert len(ld) + len(rd) == 10
    assert ld == list(range(len(ld)))
