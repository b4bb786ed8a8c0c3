import numpy as np
import pytest

from swarmdefense.binprog import (BinaryProgram, Constraint, SolveBudgetExceeded,
                                  brute_force, dump_program, objective_value, solve)


def ones_row(idx, rhs):
    return Constraint(rhs=float(rhs), lin_idx=np.array(idx, dtype=np.int64),
                      lin_coef=np.ones(len(idx)))


def random_program(rng, shape: str) -> BinaryProgram:
    """Seeded random instance of one of the four assignment-program shapes.

    "interception": one-to-one matching with quadratic pair costs
    "gathering":    pure min-sum one-to-one matching
    "split_full":   herd/intercept tasks with capacities + chain contiguity
    "split_reduced": same, interception limited to the chain ends
    """
    if shape == "interception":
        n_d = int(rng.integers(2, 5))
        n_a = int(rng.integers(1, min(n_d, 4) + 1))
        n = n_d * n_a
        lin = rng.uniform(0.5, 20.0, n)
        eqs = [ones_row([j * n_a + i for j in range(n_d)], 1) for i in range(n_a)]
        ges = []
        for j in range(n_d):
            idx = [j * n_a + i for i in range(n_a)]
            if n_d == n_a:
                eqs.append(ones_row(idx, 1))
            else:
                ges.append(Constraint(rhs=-1.0, lin_idx=np.array(idx, dtype=np.int64),
                                      lin_coef=-np.ones(n_a)))
        qp, qc = [], []
        for _ in range(int(rng.integers(0, 4))):
            a, b = rng.choice(n, 2, replace=False)
            qp.append((min(a, b), max(a, b)))
            qc.append(float(rng.uniform(0.0, 8.0)))
        return BinaryProgram(n_vars=n, linear_cost=lin,
                             quad_pairs=np.array(qp, dtype=np.int64).reshape(-1, 2),
                             quad_coef=np.array(qc), eq_constraints=eqs,
                             ge_constraints=ges)
    if shape == "gathering":
        m = int(rng.integers(2, 5))
        lin = rng.uniform(0.0, 30.0, m * m)
        eqs = [ones_row([j * m + s for s in range(m)], 1) for j in range(m)]
        eqs += [ones_row([j * m + s for j in range(m)], 1) for s in range(m)]
        return BinaryProgram(n_vars=m * m, linear_cost=lin, eq_constraints=eqs)
    # split shapes: n_d defenders on a chain, n_c clusters, n_u stragglers
    n_c = int(rng.integers(1, 3))
    n_u = int(rng.integers(0, 3))
    caps = [int(rng.integers(1, 4)) for _ in range(n_c)]
    n_d = sum(caps) + n_u
    if n_d * (n_c + n_u) > 20:
        return random_program(rng, "gathering")
    reduced = shape == "split_reduced"
    if reduced and n_u > 0:
        terminals = sorted(set(range(min(n_u, n_d)))
                           | set(range(max(n_d - n_u, 0), n_d)))
    else:
        terminals = list(range(n_d))
    herd = lambda j, k: j * n_c + k
    int_vars = [(j, i) for j in terminals for i in range(n_u)]
    int_index = {p: n_d * n_c + x for x, p in enumerate(int_vars)}
    n = n_d * n_c + len(int_vars)
    lin = np.concatenate([rng.uniform(1.0, 40.0, n_d * n_c),
                          rng.uniform(1.0, 30.0, len(int_vars))])
    eqs, ges = [], []
    for j in range(n_d):
        idx = [herd(j, k) for k in range(n_c)]
        if j in terminals:
            idx += [int_index[(j, i)] for i in range(n_u)]
        eqs.append(ones_row(idx, 1))
    for k in range(n_c):
        eqs.append(ones_row([herd(j, k) for j in range(n_d)], caps[k]))
    for i in range(n_u):
        eqs.append(ones_row([int_index[(j, i)] for j in terminals], 1))
    for k in range(n_c):
        if caps[k] <= 1 or n_d < 2:
            continue
        pairs = [(herd(l, k), herd(l + 1, k)) for l in range(n_d - 1)]
        ges.append(Constraint(rhs=float(caps[k] - 1),
                              quad_pairs=np.array(pairs, dtype=np.int64),
                              quad_coef=np.ones(len(pairs))))
    qp, qc = [], []
    if len(int_vars) >= 2:
        for _ in range(int(rng.integers(0, 3))):
            x, y = rng.choice(len(int_vars), 2, replace=False)
            u, v = n_d * n_c + min(x, y), n_d * n_c + max(x, y)
            qp.append((u, v))
            qc.append(float(rng.uniform(0.0, 10.0)))
    return BinaryProgram(n_vars=n, linear_cost=lin,
                         quad_pairs=np.array(qp, dtype=np.int64).reshape(-1, 2),
                         quad_coef=np.array(qc), eq_constraints=eqs,
                         ge_constraints=ges)


SHAPES = ("interception", "gathering", "split_full", "split_reduced")


def test_forced_single_variable():
    prog = BinaryProgram(n_vars=1, linear_cost=[5.0],
                         eq_constraints=[ones_row([0], 1)])
    sol = solve(prog)
    assert sol.status == "optimal"
    assert sol.assignment.tolist() == [1]
    assert sol.objective == 5.0


def test_contradictory_equalities_infeasible():
    prog = BinaryProgram(n_vars=3, linear_cost=[1.0, 1.0, 1.0],
                         eq_constraints=[ones_row([0, 1, 2], 1),
                                         ones_row([0, 1, 2], 0)])
    assert solve(prog).status == "infeasible"
    assert brute_force(prog).status == "infeasible"


def test_brute_force_unconstrained_negative():
    prog = BinaryProgram(n_vars=4, linear_cost=[-1.0, -2.0, -0.5, -4.0])
    sol = brute_force(prog)
    assert sol.assignment.tolist() == [1, 1, 1, 1]
    assert sol.objective == pytest.approx(-7.5)


def test_zero_variables():
    prog = BinaryProgram(n_vars=0, linear_cost=[])
    assert brute_force(prog).objective == 0.0
    assert solve(prog).objective == 0.0


def test_brute_force_guard():
    prog = BinaryProgram(n_vars=25, linear_cost=np.zeros(25))
    with pytest.raises(ValueError):
        brute_force(prog)


def test_brute_force_lexicographic_tie():
    # two symmetric optima; enumeration order prefers the lex-smaller vector
    prog = BinaryProgram(n_vars=2, linear_cost=[1.0, 1.0],
                         eq_constraints=[ones_row([0, 1], 1)])
    sol = brute_force(prog)
    assert sol.assignment.tolist() == [0, 1]


def test_solve_matches_brute_force_random():
    rng = np.random.default_rng(100)
    for trial in range(120):
        shape = SHAPES[trial % len(SHAPES)]
        prog = random_program(rng, shape)
        got = solve(prog)
        want = brute_force(prog)
        assert got.status == want.status, f"trial {trial} ({shape})"
        if got.status == "optimal":
            assert got.objective == want.objective, \
                f"trial {trial} ({shape}): {got.objective} vs {want.objective}"


def test_restriction_monotonicity():
    rng = np.random.default_rng(200)
    for trial in range(30):
        prog = random_program(rng, SHAPES[trial % len(SHAPES)])
        base = solve(prog)
        if base.status != "optimal":
            continue
        # pin one variable to its optimal value: optimum must not decrease
        pin = int(rng.integers(0, prog.n_vars))
        pinned = BinaryProgram(
            n_vars=prog.n_vars, linear_cost=prog.linear_cost,
            quad_pairs=prog.quad_pairs, quad_coef=prog.quad_coef,
            eq_constraints=list(prog.eq_constraints)
            + [ones_row([pin], int(base.assignment[pin]))],
            ge_constraints=list(prog.ge_constraints))
        again = solve(pinned)
        assert again.status == "optimal"
        assert again.objective >= base.objective - 1e-12
        # pinning to the opposite value must not do better either
        flipped = BinaryProgram(
            n_vars=prog.n_vars, linear_cost=prog.linear_cost,
            quad_pairs=prog.quad_pairs, quad_coef=prog.quad_coef,
            eq_constraints=list(prog.eq_constraints)
            + [ones_row([pin], 1 - int(base.assignment[pin]))],
            ge_constraints=list(prog.ge_constraints))
        other = solve(flipped)
        if other.status == "optimal":
            assert other.objective >= base.objective - 1e-12


def test_determinism():
    rng = np.random.default_rng(300)
    prog = random_program(rng, "split_full")
    a = solve(prog)
    b = solve(prog)
    assert a.assignment.tolist() == b.assignment.tolist()
    assert a.objective == b.objective
    assert a.node_count == b.node_count


def test_solution_certificate():
    rng = np.random.default_rng(400)
    prog = random_program(rng, "interception")
    sol = solve(prog)
    assert sol.status == "optimal"
    assert sol.objective == objective_value(prog, sol.assignment)


def test_node_budget_raises():
    rng = np.random.default_rng(500)
    prog = random_program(rng, "gathering")
    with pytest.raises(SolveBudgetExceeded):
        solve(prog, node_limit=1)


def test_dump_format():
    prog = BinaryProgram(n_vars=2, linear_cost=[1.5, 0.0],
                         quad_pairs=np.array([[0, 1]]), quad_coef=np.array([2.0]),
                         eq_constraints=[ones_row([0, 1], 1)],
                         var_meta=[("int", 0, 0), ("int", 0, 1)])
    text = dump_program(prog)
    lines = text.strip().split("\n")
    assert lines[0] == "binprog v1 2"
    assert any(line.startswith("lin 0 ") for line in lines)
    assert any(line.startswith("quad 0 1 ") for line in lines)
    assert any(line.startswith("eq 1.0 | lin 0") for line in lines)
    assert any(line.startswith("meta 1 ") for line in lines)
