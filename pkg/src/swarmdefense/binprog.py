"""Exact solver for small binary programs with quadratic terms.

Handles minimization of a linear + quadratic 0/1 objective subject to
linear and quadratic equality/inequality rows, via depth-first branch and
bound with constraint propagation.  Products of binaries are bounded
directly (both-fixed pairs evaluate, anything else contributes its
optimistic bound), so no linearization is needed at these sizes.

A chunked exhaustive enumerator (`brute_force`) doubles as the test oracle
for programs up to 24 variables.
"""

from __future__ import annotations

import math
import sys
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment as _lap

#: Feasibility tolerance for constraint rows (coefficients are small integers).
ROW_TOL = 1e-6

#: Cost assigned to interceptions outside the winning region; dominates any
#: realistic engagement time without overflowing sums.
LARGE_COST = 1e6


class SolveBudgetExceeded(RuntimeError):
    """Raised when solve() runs out of its node or time budget."""

    def __init__(self, nodes: int, elapsed: float):
        super().__init__(f"budget exhausted after {nodes} nodes / {elapsed:.3f} s")
        self.nodes = nodes
        self.elapsed = elapsed


@dataclass
class Constraint:
    """One row: sum(lin) + sum(quad products) (== | >=) rhs."""

    rhs: float
    lin_idx: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    lin_coef: np.ndarray = field(default_factory=lambda: np.zeros(0))
    quad_pairs: np.ndarray = field(default_factory=lambda: np.zeros((0, 2), dtype=np.int64))
    quad_coef: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        self.lin_idx = np.asarray(self.lin_idx, dtype=np.int64).reshape(-1)
        self.lin_coef = np.asarray(self.lin_coef, dtype=float).reshape(-1)
        self.quad_pairs = np.asarray(self.quad_pairs, dtype=np.int64).reshape(-1, 2)
        self.quad_coef = np.asarray(self.quad_coef, dtype=float).reshape(-1)
        if len(self.lin_idx) != len(self.lin_coef):
            raise ValueError("linear index/coefficient length mismatch")
        if len(self.quad_pairs) != len(self.quad_coef):
            raise ValueError("quadratic pair/coefficient length mismatch")


@dataclass
class BinaryProgram:
    n_vars: int
    linear_cost: np.ndarray
    quad_pairs: np.ndarray = field(default_factory=lambda: np.zeros((0, 2), dtype=np.int64))
    quad_coef: np.ndarray = field(default_factory=lambda: np.zeros(0))
    eq_constraints: list = field(default_factory=list)
    ge_constraints: list = field(default_factory=list)
    var_meta: list | None = None

    def __post_init__(self):
        self.linear_cost = np.asarray(self.linear_cost, dtype=float).reshape(-1)
        self.quad_pairs = np.asarray(self.quad_pairs, dtype=np.int64).reshape(-1, 2)
        self.quad_coef = np.asarray(self.quad_coef, dtype=float).reshape(-1)
        if len(self.linear_cost) != self.n_vars:
            raise ValueError("linear_cost length must equal n_vars")
        if not np.all(np.isfinite(self.linear_cost)):
            raise ValueError("non-finite linear cost")
        if len(self.quad_pairs) != len(self.quad_coef):
            raise ValueError("quadratic pair/coefficient length mismatch")
        for con in list(self.eq_constraints) + list(self.ge_constraints):
            for idx in (con.lin_idx, con.quad_pairs.reshape(-1)):
                if len(idx) and (idx.min() < 0 or idx.max() >= self.n_vars):
                    raise ValueError("constraint references an unknown variable")
        if len(self.quad_pairs):
            if self.quad_pairs.min() < 0 or self.quad_pairs.max() >= self.n_vars:
                raise ValueError("objective quadratic references an unknown variable")
            if np.any(self.quad_pairs[:, 0] == self.quad_pairs[:, 1]):
                raise ValueError("diagonal quadratic terms belong in the linear cost")

    def quad_matrix(self) -> np.ndarray:
        """Dense symmetric matrix view of the quadratic objective."""
        q = np.zeros((self.n_vars, self.n_vars))
        for (a, b), w in zip(self.quad_pairs, self.quad_coef):
            q[a, b] += 0.5 * w
            q[b, a] += 0.5 * w
        return q


@dataclass
class Solution:
    assignment: np.ndarray
    objective: float
    status: str                 # "optimal" | "infeasible"
    node_count: int = 0
    wall_time: float = 0.0


def objective_value(prog: BinaryProgram, x) -> float:
    """Canonical objective evaluation (fixed summation order)."""
    x = np.asarray(x, dtype=float).reshape(-1)
    val = float(np.dot(prog.linear_cost, x))
    if len(prog.quad_coef):
        val += float(np.dot(prog.quad_coef,
                            x[prog.quad_pairs[:, 0]] * x[prog.quad_pairs[:, 1]]))
    return val


def constraints_satisfied(prog: BinaryProgram, x, tol: float = 1e-9) -> bool:
    x = np.asarray(x, dtype=float).reshape(-1)
    for con in prog.eq_constraints:
        if abs(_row_value(con, x) - con.rhs) > tol:
            return False
    for con in prog.ge_constraints:
        if _row_value(con, x) < con.rhs - tol:
            return False
    return True


def _row_value(con: Constraint, x: np.ndarray) -> float:
    v = float(np.dot(con.lin_coef, x[con.lin_idx])) if len(con.lin_idx) else 0.0
    if len(con.quad_coef):
        v += float(np.dot(con.quad_coef,
                          x[con.quad_pairs[:, 0]] * x[con.quad_pairs[:, 1]]))
    return v


def dump_program(prog: BinaryProgram) -> str:
    """Plain-text dump, one line per term, for external cross-checks.

    Format: header `binprog v1 <n_vars>`, then `lin <var> <cost>` for nonzero
    costs, `quad <a> <b> <coef>`, and per constraint one line
    `<eq|ge> <rhs> | lin <i> <c> ... | quad <a> <b> <c> ...`.
    """
    lines = [f"binprog v1 {prog.n_vars}"]
    for j, c in enumerate(prog.linear_cost):
        if c != 0.0:
            lines.append(f"lin {j} {c!r}")
    for (a, b), w in zip(prog.quad_pairs, prog.quad_coef):
        lines.append(f"quad {a} {b} {w!r}")
    for sense, cons in (("eq", prog.eq_constraints), ("ge", prog.ge_constraints)):
        for con in cons:
            parts = [f"{sense} {con.rhs!r}"]
            parts += [f"lin {i} {c!r}" for i, c in zip(con.lin_idx, con.lin_coef)]
            parts += [f"quad {a} {b} {c!r}"
                      for (a, b), c in zip(con.quad_pairs, con.quad_coef)]
            lines.append(" | ".join(parts))
    if prog.var_meta is not None:
        for j, meta in enumerate(prog.var_meta):
            lines.append(f"meta {j} {meta}")
    return "\n".join(lines) + "\n"


class _Search:
    """DFS branch-and-bound state over one program.

    Structure detection at load time makes the generic search practical on
    assignment-shaped programs: disjoint one-choice equality rows become
    branching groups and the rows of a transportation relaxation whose
    optimum (a small rectangular matching, solved per node) lower-bounds the
    linear cost; chain-shaped quadratic rows that share their variables with
    a capacity row get run-counting propagation, which prunes broken blocks
    as soon as they can no longer reconnect.
    """

    def __init__(self, prog: BinaryProgram, node_limit, time_limit):
        self.prog = prog
        n = prog.n_vars
        self.node_limit = node_limit
        self.time_limit = time_limit
        self.t0 = time.perf_counter()
        self.nodes = 0
        self.best = math.inf
        self.best_x = None
        self.state = np.full(n, -1, dtype=np.int8)
        self.trail: list[int] = []

        rows = list(prog.eq_constraints) + list(prog.ge_constraints)
        self.rows = rows
        self.n_eq = len(prog.eq_constraints)
        self.amat = np.zeros((len(rows), n))
        for r, con in enumerate(rows):
            np.add.at(self.amat[r], con.lin_idx, con.lin_coef)
        self.apos = np.clip(self.amat, 0.0, None)
        self.aneg = np.clip(self.amat, None, 0.0)
        self.rhs = np.array([con.rhs for con in rows])
        self.quad_rows = [r for r, con in enumerate(rows) if len(con.quad_coef)]

        # Branching groups: disjoint unit-coefficient equality rows with
        # rhs 1 ("pick exactly one of these"), greedy in construction order.
        covered = np.zeros(n, dtype=bool)
        self.groups = []
        self.var_group = np.full(n, -1, dtype=np.int64)
        for r in range(self.n_eq):
            con = rows[r]
            if len(con.quad_coef) or len(con.lin_idx) == 0:
                continue
            if not np.all(con.lin_coef == 1.0) or con.rhs != 1.0:
                continue
            if np.any(covered[con.lin_idx]):
                continue
            covered[con.lin_idx] = True
            self.var_group[con.lin_idx] = len(self.groups)
            self.groups.append(np.array(sorted(con.lin_idx), dtype=np.int64))
        self.covered = covered
        self.uncovered_neg = np.where(~covered, np.minimum(prog.linear_cost, 0.0), 0.0)
        # flattened group layout for vectorized per-node group minima
        if self.groups:
            self.gvars = np.concatenate(self.groups)
            self.gbounds = np.concatenate(
                [[0], np.cumsum([len(g) for g in self.groups])[:-1]]).astype(np.int64)
        else:
            self.gvars = np.zeros(0, dtype=np.int64)
            self.gbounds = np.zeros(0, dtype=np.int64)

        # Capacity slots for the transportation bound: disjoint unit rows
        # not used as groups.  Equality rows give exact capacities; all-(-1)
        # >= rows encode "at most cap" and work the same for a lower bound.
        slotted = np.zeros(n, dtype=bool)
        self.slots = []          # (var index array, capacity)
        self.var_slot = np.full(n, -1, dtype=np.int64)
        candidates = []
        for r, con in enumerate(rows):
            if len(con.quad_coef) or len(con.lin_idx) == 0:
                continue
            if r < self.n_eq and np.all(con.lin_coef == 1.0):
                candidates.append((len(con.lin_idx), r, con.lin_idx, con.rhs))
            elif r >= self.n_eq and np.all(con.lin_coef == -1.0):
                candidates.append((len(con.lin_idx), r, con.lin_idx, -con.rhs))
        group_rows = {tuple(g) for g in self.groups}
        for size, r, idx, cap in sorted(candidates, key=lambda c: (c[0], c[1])):
            if tuple(sorted(idx)) in group_rows:
                continue
            if np.any(slotted[idx]) or cap < 0:
                continue
            slotted[idx] = True
            self.var_slot[idx] = len(self.slots)
            self.slots.append((np.asarray(idx, dtype=np.int64), int(round(cap))))
        self.use_transport = len(self.groups) > 0

        # Chain-shaped quadratic >= rows over one capacity slot: run-count
        # propagation (contiguity pruning) and block-window bounding.
        self.chain_rows = {}
        for r in self.quad_rows:
            con = rows[r]
            if r < self.n_eq or len(con.lin_idx):
                continue
            pairs = con.quad_pairs
            if not np.all(con.quad_coef == 1.0):
                continue
            chain = list(pairs[:, 0]) + [pairs[-1, 1]]
            if list(pairs[:, 1]) != chain[1:]:
                continue
            slots_of_chain = set(self.var_slot[chain])
            if len(slots_of_chain) == 1 and -1 not in slots_of_chain:
                self.chain_rows[r] = (np.array(chain, dtype=np.int64),
                                      slots_of_chain.pop())
        # Slots eligible for the structural bound: exact-capacity (equality)
        # slot rows, split between chain-covered and plain ones.
        self.chain_slots = {slot: chain for chain, slot in self.chain_rows.values()}
        self.eq_slot = np.zeros(len(self.slots), dtype=bool)
        eq_sets = {tuple(sorted(con.lin_idx)) for con in prog.eq_constraints
                   if len(con.lin_idx) and not len(con.quad_coef)
                   and np.all(con.lin_coef == 1.0)}
        for s, (idx, cap) in enumerate(self.slots):
            self.eq_slot[s] = tuple(sorted(idx)) in eq_sets

    # -- propagation ------------------------------------------------------

    def _chain_max_pairs(self, chain: np.ndarray, slot: int) -> float:
        """Tight upper bound on adjacent same-block pairs along a chain.

        The chain's variables share one capacity slot, so any completion
        holds exactly ``cap`` ones; adjacent pairs then equal cap minus the
        number of runs.  Runs split by fixed zeros can never merge; runs
        split by free-only gaps merge by spending capacity on the gap.
        """
        states = self.state[chain]
        cap = self.slots[slot][1]
        ones = int(np.sum(states == 1))
        budget = cap - ones
        if budget < 0:
            return -1.0  # capacity already violated; row infeasible
        runs = []       # (start, end) of fixed-1 runs
        i = 0
        n = len(states)
        while i < n:
            if states[i] == 1:
                j = i
                while j + 1 < n and states[j + 1] == 1:
                    j += 1
                runs.append((i, j))
                i = j + 1
            else:
                i += 1
        if not runs:
            return float(cap - 1) if cap > 0 else 0.0
        min_runs = len(runs)
        gaps = []
        for (s1, e1), (s2, e2) in zip(runs, runs[1:]):
            between = states[e1 + 1:s2]
            if np.all(between == -1):
                gaps.append(len(between))
        for g in sorted(gaps):
            if g <= budget:
                budget -= g
                min_runs -= 1
        return float(cap - min_runs)

    def _row_bounds(self, lo, hi):
        rmin = self.apos @ lo + self.aneg @ hi
        rmax = self.apos @ hi + self.aneg @ lo
        for r in self.quad_rows:
            con = self.rows[r]
            a, b = con.quad_pairs[:, 0], con.quad_pairs[:, 1]
            pmin = lo[a] * lo[b]
            pos = con.quad_coef > 0
            rmin[r] += float(np.dot(con.quad_coef[pos], pmin[pos]))
            if r in self.chain_rows:
                chain, slot = self.chain_rows[r]
                rmax[r] += self._chain_max_pairs(chain, slot)
                pmax = hi[a] * hi[b]
                rmin[r] += float(np.dot(con.quad_coef[~pos], pmax[~pos]))
                continue
            pmax = hi[a] * hi[b]
            rmin[r] += float(np.dot(con.quad_coef[~pos], pmax[~pos]))
            rmax[r] += float(np.dot(con.quad_coef[pos], pmax[pos])
                             + np.dot(con.quad_coef[~pos], pmin[~pos]))
        return rmin, rmax

    def _fix(self, var: int, value: int) -> bool:
        cur = self.state[var]
        if cur != -1:
            return cur == value
        self.state[var] = value
        self.trail.append(var)
        return True

    def propagate(self) -> bool:
        """Fix forced variables until fixpoint; False on infeasibility."""
        while True:
            lo = (self.state == 1).astype(float)
            hi = (self.state != 0).astype(float)
            rmin, rmax = self._row_bounds(lo, hi)
            eq = slice(0, self.n_eq)
            if np.any(rmin[eq] > self.rhs[eq] + ROW_TOL):
                return False
            if np.any(rmax < self.rhs - ROW_TOL):
                return False
            changed = False
            force_max = np.flatnonzero(np.abs(rmax - self.rhs) <= ROW_TOL)
            force_min = np.flatnonzero(np.abs(rmin[eq] - self.rhs[eq]) <= ROW_TOL)
            for r in force_max:
                con = self.rows[r]
                for i, c in zip(con.lin_idx, con.lin_coef):
                    if self.state[i] == -1:
                        if not self._fix(int(i), 1 if c > 0 else 0):
                            return False
                        changed = True
                if r in self.chain_rows:
                    continue  # run-count bound is not a per-pair sum
                for (a, b), c in zip(con.quad_pairs, con.quad_coef):
                    if c > 0 and self.state[a] != 0 and self.state[b] != 0:
                        for v in (int(a), int(b)):
                            if self.state[v] == -1:
                                if not self._fix(v, 1):
                                    return False
                                changed = True
            for r in force_min:
                con = self.rows[r]
                for i, c in zip(con.lin_idx, con.lin_coef):
                    if self.state[i] == -1:
                        if not self._fix(int(i), 0 if c > 0 else 1):
                            return False
                        changed = True
                for (a, b), c in zip(con.quad_pairs, con.quad_coef):
                    # product must stay at its current minimum (zero): if one
                    # side is already 1 the other is forced off.
                    if c > 0 and not (self.state[a] == 1 and self.state[b] == 1):
                        if self.state[a] == 1 and self.state[b] == -1:
                            if not self._fix(int(b), 0):
                                return False
                            changed = True
                        elif self.state[b] == 1 and self.state[a] == -1:
                            if not self._fix(int(a), 0):
                                return False
                            changed = True
            if not changed:
                return True

    # -- bounding ---------------------------------------------------------

    _BIG = 1e15

    def lower_bound(self) -> float:
        """Fixed cost plus a transportation relaxation of the free part.

        Every unfilled branching group must still pick one variable; picks
        sharing a capacity slot compete for its remaining budget.  The
        relaxation is a small rectangular matching: group rows against slot
        columns (expanded per remaining capacity) plus free columns for
        unslotted variables, with the cheapest free variable of each
        (group, slot) cell as the edge cost.
        """
        cost = self.prog.linear_cost
        state = self.state
        fixed1 = state == 1
        lb = float(cost[fixed1].sum())
        free_unc = (~self.covered) & (state == -1)
        if np.any(free_unc):
            lb += float(self.uncovered_neg[free_unc].sum())
        qp, qc = self.prog.quad_pairs, self.prog.quad_coef
        if len(qc):
            sa, sb = state[qp[:, 0]], state[qp[:, 1]]
            both1 = (sa == 1) & (sb == 1)
            dead = (sa == 0) | (sb == 0)
            lb += float(qc[both1].sum())
            open_neg = ~both1 & ~dead & (qc < 0)
            lb += float(qc[open_neg].sum())
        if not self.use_transport:
            return lb

        sub_state = state[self.gvars]
        masked = np.where(sub_state == -1, cost[self.gvars], math.inf)
        mins = np.minimum.reduceat(masked, self.gbounds)
        picked = np.logical_or.reduceat(sub_state == 1, self.gbounds)
        open_mask = ~picked
        if np.any(open_mask & ~np.isfinite(mins)):
            return math.inf  # a group ran out of candidates
        if not np.any(open_mask):
            return lb
        # cheap semi-assignment bound first; the transportation matching is
        # only priced when this does not already prune the node
        if lb + float(mins[open_mask].sum()) >= self.best - 1e-12:
            return lb + float(mins[open_mask].sum())
        open_groups = np.flatnonzero(open_mask)
        n_slots = len(self.slots)
        slot_left = np.array([cap - int(np.sum(state[idx] == 1))
                              for idx, cap in self.slots], dtype=np.int64)
        n_rows = len(open_groups)
        cell = np.full((n_rows, n_slots + 1), self._BIG)
        rowmap = np.full(len(self.groups), -1, dtype=np.int64)
        rowmap[open_groups] = np.arange(n_rows)
        free_v = np.flatnonzero(state == -1)
        g = self.var_group[free_v]
        ok = g >= 0
        free_v, g = free_v[ok], g[ok]
        rr = rowmap[g]
        ok = rr >= 0
        free_v, rr = free_v[ok], rr[ok]
        s = self.var_slot[free_v]
        col = np.where(s >= 0, s, n_slots)
        if n_slots:
            open_slot = (s < 0) | (slot_left[np.clip(s, 0, None)] > 0)
            free_v, rr, col = free_v[open_slot], rr[open_slot], col[open_slot]
        np.minimum.at(cell, (rr, col), cost[free_v])
        cols, col_costs = [], []
        for s in range(n_slots):
            reps = min(max(slot_left[s], 0), n_rows)
            for _ in range(reps):
                cols.append(s)
        for _ in range(n_rows):
            cols.append(n_slots)
        matrix = cell[:, cols]
        row_ind, col_ind = _lap(matrix)
        val = float(matrix[row_ind, col_ind].sum())
        if val >= self._BIG / 2:
            return math.inf
        struct = self._structural_bound()
        if struct is None:
            return math.inf
        return lb + max(val, struct)

    def _structural_bound(self):
        """Contiguity-aware bound on the free cost mass, or None if dead.

        Chain slots contribute their cheapest feasible contiguous window of
        exactly the capacity; other exact-capacity slots contribute their
        remaining-count smallest free costs.  Slot variable sets are
        disjoint and bound disjoint objective terms, so the sum is valid.
        """
        cost = self.prog.linear_cost
        state = self.state
        total = 0.0
        for s, (idx, cap) in enumerate(self.slots):
            if not self.eq_slot[s]:
                continue
            chain = self.chain_slots.get(s)
            if chain is None:
                sub = state[idx]
                need = cap - int(np.sum(sub == 1))
                if need <= 0:
                    continue
                free_costs = cost[idx][sub == -1]
                if len(free_costs) < need:
                    return None
                if need == 1:
                    total += float(free_costs.min())
                else:
                    total += float(np.sort(free_costs)[:need].sum())
                continue
            sub = state[chain]
            arr = np.where(sub == 1, 0.0,
                           np.where(sub == -1, cost[chain], math.inf))
            n = len(arr)
            if cap > n:
                return None
            ones = np.flatnonzero(sub == 1)
            lo_req = 0 if len(ones) == 0 else max(int(ones[-1]) - cap + 1, 0)
            hi_req = n - cap if len(ones) == 0 else min(int(ones[0]), n - cap)
            if lo_req > hi_req:
                return None
            finite = np.isfinite(arr)
            vals = np.where(finite, arr, 0.0)
            csum = np.concatenate([[0.0], np.cumsum(vals)])
            bad = np.concatenate([[0], np.cumsum(~finite)])
            sums = csum[cap:] - csum[:-cap]          # window sum per start
            blocked = (bad[cap:] - bad[:-cap]) > 0   # window holds a dead slot
            sums = np.where(blocked, math.inf, sums)
            window = sums[lo_req:hi_req + 1]
            best = float(window.min()) if len(window) else math.inf
            if not math.isfinite(best):
                return None
            total += best
        return total

    # -- search -----------------------------------------------------------

    def _check_budget(self):
        if self.node_limit is not None and self.nodes > self.node_limit:
            raise SolveBudgetExceeded(self.nodes, time.perf_counter() - self.t0)
        if self.time_limit is not None and self.nodes % 64 == 0:
            if time.perf_counter() - self.t0 > self.time_limit:
                raise SolveBudgetExceeded(self.nodes, time.perf_counter() - self.t0)

    def dfs(self):
        self.nodes += 1
        self._check_budget()
        mark = len(self.trail)
        if not self.propagate():
            self._undo(mark)
            return
        free = np.flatnonzero(self.state == -1)
        if len(free) == 0:
            x = self.state.astype(float)
            if constraints_satisfied(self.prog, x, tol=ROW_TOL):
                val = objective_value(self.prog, x)
                if val < self.best - 1e-12:
                    self.best = val
                    self.best_x = self.state.copy().astype(np.uint8)
            self._undo(mark)
            return
        if self.lower_bound() >= self.best - 1e-12:
            self._undo(mark)
            return
        var, first = self._pick_branch(free)
        for value in (first, 1 - first):
            self.state[var] = value
            self.trail.append(var)
            self.dfs()
            self._undo(len(self.trail) - 1)
        self._undo(mark)

    def _pick_branch(self, free):
        """Branch variable and first child value.

        Grouped programs dive group by group (first group with a free
        variable, in variable order), trying that group's cheapest pick
        first; this walks assignment chains in construction order, which
        keeps contiguity rows decisive early.  Ungrouped variables fall
        back to largest-|cost|-first with the cheap side explored first.
        """
        first_free = int(free[0])
        g = self.var_group[first_free]
        if g >= 0:
            idx = self.groups[g]
            sub = self.state[idx]
            open_vars = idx[sub == -1]
            costs = self.prog.linear_cost[open_vars]
            var = int(open_vars[int(np.argmin(costs))])
            return var, 1
        best_var, best_mag = first_free, -1.0
        for j in free:
            mag = abs(self.prog.linear_cost[j])
            if mag > best_mag:
                best_var, best_mag = int(j), mag
        return best_var, 0 if self.prog.linear_cost[best_var] >= 0 else 1

    def _undo(self, mark: int):
        while len(self.trail) > mark:
            self.state[self.trail.pop()] = -1


def solve(prog: BinaryProgram, node_limit: int | None = None,
          time_limit: float | None = None) -> Solution:
    """Certified global minimum of a binary program via branch and bound.

    Raises SolveBudgetExceeded when a budget runs out (distinct from an
    infeasible program, which returns status="infeasible").
    """
    t0 = time.perf_counter()
    if prog.n_vars == 0:
        return Solution(np.zeros(0, dtype=np.uint8), 0.0, "optimal", 1,
                        time.perf_counter() - t0)
    search = _Search(prog, node_limit, time_limit)
    old_limit = sys.getrecursionlimit()
    sys.setrecursionlimit(max(old_limit, prog.n_vars * 4 + 100))
    try:
        search.dfs()
    finally:
        sys.setrecursionlimit(old_limit)
    wall = time.perf_counter() - t0
    if search.best_x is None:
        return Solution(np.zeros(prog.n_vars, dtype=np.uint8), math.inf,
                        "infeasible", search.nodes, wall)
    x = search.best_x
    obj = objective_value(prog, x)
    assert constraints_satisfied(prog, x, tol=1e-9 * max(1.0, abs(obj)) + ROW_TOL)
    return Solution(x, obj, "optimal", search.nodes, wall)


def brute_force(prog: BinaryProgram, max_vars: int = 24) -> Solution:
    """Exhaustive oracle: enumerate all assignments, keep the feasible minimum.

    Enumeration order makes variable 0 the most significant bit, so the
    first minimum found is the lexicographically smallest bit-vector.
    """
    t0 = time.perf_counter()
    n = prog.n_vars
    if n > max_vars:
        raise ValueError(f"brute force capped at {max_vars} variables, got {n}")
    if n == 0:
        return Solution(np.zeros(0, dtype=np.uint8), 0.0, "optimal", 1,
                        time.perf_counter() - t0)
    shifts = np.arange(n - 1, -1, -1, dtype=np.uint64)
    rows = list(prog.eq_constraints) + list(prog.ge_constraints)
    amat = np.zeros((len(rows), n))
    for r, con in enumerate(rows):
        np.add.at(amat[r], con.lin_idx, con.lin_coef)
    rhs = np.array([con.rhs for con in rows])
    n_eq = len(prog.eq_constraints)

    best_val, best_m = math.inf, -1
    total = 1 << n
    chunk = 1 << min(n, 18)
    for start in range(0, total, chunk):
        ms = np.arange(start, min(start + chunk, total), dtype=np.uint64)
        bits = ((ms[:, None] >> shifts[None, :]) & 1).astype(np.float64)
        feasible = np.ones(len(ms), dtype=bool)
        if len(rows):
            vals = bits @ amat.T
            for r, con in enumerate(rows):
                if len(con.quad_coef):
                    prod = bits[:, con.quad_pairs[:, 0]] * bits[:, con.quad_pairs[:, 1]]
                    vals[:, r] += prod @ con.quad_coef
            feasible &= np.all(np.abs(vals[:, :n_eq] - rhs[:n_eq]) <= 1e-9, axis=1)
            feasible &= np.all(vals[:, n_eq:] >= rhs[n_eq:] - 1e-9, axis=1)
        if not np.any(feasible):
            continue
        obj = bits @ prog.linear_cost
        if len(prog.quad_coef):
            obj += (bits[:, prog.quad_pairs[:, 0]]
                    * bits[:, prog.quad_pairs[:, 1]]) @ prog.quad_coef
        obj = np.where(feasible, obj, math.inf)
        k = int(np.argmin(obj))
        if obj[k] < best_val:
            best_val = float(obj[k])
            best_m = int(ms[k])
    wall = time.perf_counter() - t0
    if best_m < 0:
        return Solution(np.zeros(n, dtype=np.uint8), math.inf, "infeasible",
                        total, wall)
    x = ((best_m >> shifts.astype(np.int64)) & 1).astype(np.uint8)
    return Solution(x, objective_value(prog, x), "optimal", total, wall)
