"""Exact search: branch-and-prune over position assignments, plus a
brute-force enumerator for small instances.

The search assigns a position to one index at a time, always branching on
the index with the fewest remaining positions (first fail) and trying
positions in ascending order. Propagation keeps position bounds consistent
with precedence pairs, adjacency blocks, and the permutation requirement
(Hall intervals on bounds). A node is also pruned when the partial
objective plus an admissible completion bound cannot beat the incumbent.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Sequence

from .analyze import ConstraintSet, build_constraint_set
from .evaluate import StepEvaluator, evaluate, tables
from .model import Instance

__all__ = [
    "SearchLimits",
    "SearchStats",
    "SearchOutcome",
    "propagate",
    "solve_exact",
    "brute_force",
]

FAIL = None
BRUTE_FORCE_CAP = 10


@dataclass(frozen=True)
class SearchLimits:
    max_nodes: int | None = None
    max_seconds: float | None = None

    def __post_init__(self):
        if self.max_nodes is not None and self.max_nodes <= 0:
            raise ValueError("max_nodes must be positive")
        if self.max_seconds is not None and self.max_seconds <= 0:
            raise ValueError("max_seconds must be positive")


@dataclass
class SearchStats:
    nodes: int = 0
    pruned_by_bound: int = 0
    pruned_by_propagation: int = 0
    optimum_count: int = 0
    restarts: int = 0
    proofs: int = 0
    moves: int = 0
    incumbent_timeline: list[tuple[float, float]] = field(default_factory=list)
    trajectory: list[tuple[int, float, float]] = field(default_factory=list)

    def to_doc(self, include_timeline: bool = False) -> dict:
        doc = {
            "nodes": self.nodes,
            "pruned_by_bound": self.pruned_by_bound,
            "pruned_by_propagation": self.pruned_by_propagation,
            "optimum_count": self.optimum_count,
            "restarts": self.restarts,
            "proofs": self.proofs,
            "moves": self.moves,
        }
        if include_timeline:
            doc["incumbent_timeline"] = [[t, o] for t, o in self.incumbent_timeline]
        return doc


@dataclass
class SearchOutcome:
    best: list[int] | None
    objective: float
    proven: bool
    stats: SearchStats

    def to_doc(self, include_timeline: bool = False) -> dict:
        return {
            "order": self.best,
            "objective": self.objective,
            "proven": self.proven,
            "stats": self.stats.to_doc(include_timeline=include_timeline),
        }


# ---------------------------------------------------------------------------
# Propagation
# ---------------------------------------------------------------------------


def propagate(
    domains: Sequence[tuple[int, int]], constraints: ConstraintSet
) -> list[tuple[int, int]] | None:
    """Bounds-consistency fixpoint over position domains; None on failure.

    Rules: precedence (a before b shifts bounds by one), adjacency blocks
    (members stay within a window of the block size), and Hall-interval
    pruning so the domains stay consistent with a permutation.
    """
    n = len(domains)
    lo = [d[0] for d in domains]
    hi = [d[1] for d in domains]
    pairs = sorted(constraints.precedence_pairs)
    blocks = [sorted(b) for b in constraints.adjacency_blocks]
    for i, pos in constraints.fixed_positions.items():
        lo[i] = max(lo[i], pos)
        hi[i] = min(hi[i], pos)

    for _ in range(n * n + 2):
        changed = False
        for a, b in pairs:
            if lo[b] < lo[a] + 1:
                lo[b] = lo[a] + 1
                changed = True
            if hi[a] > hi[b] - 1:
                hi[a] = hi[b] - 1
                changed = True
        for members in blocks:
            width = len(members) - 1
            top = max(lo[m] for m in members) - width
            bottom = min(hi[m] for m in members) + width
            for m in members:
                if lo[m] < top:
                    lo[m] = top
                    changed = True
                if hi[m] > bottom:
                    hi[m] = bottom
                    changed = True
        for i in range(n):
            if lo[i] > hi[i] or hi[i] < 0 or lo[i] > n - 1:
                return FAIL
        # Hall intervals over bound values
        lows = sorted(set(lo))
        highs = sorted(set(hi))
        for a in lows:
            for b in highs:
                if b < a:
                    continue
                inside = [i for i in range(n) if lo[i] >= a and hi[i] <= b]
                size = b - a + 1
                if len(inside) > size:
                    return FAIL
                if len(inside) == size:
                    inside_set = set(inside)
                    for i in range(n):
                        if i in inside_set:
                            continue
                        if a <= lo[i] <= b:
                            lo[i] = b + 1
                            changed = True
                        if a <= hi[i] <= b:
                            hi[i] = a - 1
                            changed = True
        if not changed:
            break
    for i in range(n):
        if lo[i] > hi[i]:
            return FAIL
    return list(zip(lo, hi))


# ---------------------------------------------------------------------------
# Branch and prune
# ---------------------------------------------------------------------------


def solve_exact(
    instance: Instance,
    constraints: ConstraintSet | None = None,
    limits: SearchLimits | None = None,
    initial: Sequence[int] | None = None,
) -> SearchOutcome:
    """Depth-first branch and prune; proven=True when the tree was
    exhausted within the limits.

    `initial` seeds the incumbent (typically the greedy solution). The
    returned order is always feasible for the instance; the constraint set
    only steers and prunes the search.
    """
    tbl = tables(instance)
    n = tbl.n
    if constraints is None:
        constraints = build_constraint_set(instance)
    if not constraints.is_acyclic():
        raise ValueError("constraint set contains a precedence cycle")
    limits = limits or SearchLimits()
    stats = SearchStats()
    started = time.monotonic()

    best_order: list[int] | None = None
    best_obj = float("inf")
    if initial is not None:
        best_order = list(initial)
        best_obj = evaluate(instance, best_order).objective
        stats.incumbent_timeline.append((0.0, best_obj))

    root = propagate(constraints.position_domains, constraints)
    if root is FAIL:
        return SearchOutcome(best_order, best_obj, True, stats)

    ev = StepEvaluator(instance)
    pos_index: list[int] = [-1] * n  # position -> index
    assigned: list[int] = [-1] * n  # index -> position
    min_cost_left = sum(tbl.min_cost)
    final_runtime = tbl.final_runtime
    blocks = [sorted(b) for b in constraints.adjacency_blocks]
    block_of: dict[int, list[int]] = {}
    for blk in blocks:
        for m in blk:
            block_of[m] = blk

    limit_hit = False

    def out_of_budget() -> bool:
        nonlocal limit_hit
        if limits.max_nodes is not None and stats.nodes >= limits.max_nodes:
            limit_hit = True
        if limits.max_seconds is not None and time.monotonic() - started > limits.max_seconds:
            limit_hit = True
        return limit_hit

    def local_prune(idx: int, pos: int) -> bool:
        """Cheap checks for one trial assignment before full propagation."""
        for j in _iter_bits(tbl.pred_mask[idx]):
            if assigned[j] != -1 and assigned[j] > pos:
                return True
        for j in _iter_bits(tbl.succ_mask[idx]):
            if assigned[j] != -1 and assigned[j] < pos:
                return True
        blk = block_of.get(idx)
        if blk is not None:
            for m in blk:
                if m != idx and assigned[m] != -1 and abs(assigned[m] - pos) > len(blk) - 1:
                    return True
        return False

    def rec(domains: list[tuple[int, int]], depth: int) -> None:
        nonlocal best_order, best_obj
        if limit_hit:
            return
        if depth == n:
            base = ev.depth
            while ev.depth < n:
                ev.push(pos_index[ev.depth])
            obj = ev.partial
            if obj < best_obj - 1e-12:
                best_obj = obj
                best_order = [pos_index[p] for p in range(n)]
                stats.incumbent_timeline.append((time.monotonic() - started, obj))
            ev.pop_to(base)
            return

        # first fail: smallest remaining effective domain, ties by id
        used = {p for p in range(n) if pos_index[p] != -1}
        var = -1
        var_choices: list[int] = []
        best_size = n + 1
        for i in range(n):
            if assigned[i] != -1:
                continue
            lo, hi = domains[i]
            choices = [p for p in range(lo, hi + 1) if p not in used]
            if not choices:
                stats.pruned_by_propagation += 1
                return
            if len(choices) < best_size:
                best_size = len(choices)
                var = i
                var_choices = choices

        for pos in var_choices:
            if out_of_budget():
                return
            stats.nodes += 1
            if local_prune(var, pos):
                stats.pruned_by_propagation += 1
                continue
            trial = list(domains)
            trial[var] = (pos, pos)
            reduced = propagate(trial, constraints)
            if reduced is FAIL:
                stats.pruned_by_propagation += 1
                continue
            assigned[var] = pos
            pos_index[pos] = var
            saved_depth = ev.depth
            while ev.depth < n and pos_index[ev.depth] != -1:
                ev.push(pos_index[ev.depth])
            remaining = min_cost_left - sum(tbl.min_cost[pos_index[p]] for p in range(ev.depth))
            bound = ev.partial + final_runtime * remaining
            if bound >= best_obj - 1e-12:
                stats.pruned_by_bound += 1
            else:
                rec(reduced, depth + 1)
            ev.pop_to(saved_depth)
            assigned[var] = -1
            pos_index[pos] = -1

    rec(root, 0)
    proven = not limit_hit
    if proven:
        stats.proofs = 1
    return SearchOutcome(best_order, best_obj, proven, stats)


def _iter_bits(mask: int):
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def brute_force(instance: Instance, limits: SearchLimits | None = None) -> SearchOutcome:
    """Enumerate every precedence-feasible permutation (|I| <= 10).

    stats.nodes counts evaluated permutations; stats.optimum_count the
    number of permutations tying the optimum within relative 1e-9.
    """
    tbl = tables(instance)
    n = tbl.n
    if n > BRUTE_FORCE_CAP:
        raise ValueError(f"instance too large for brute force ({n} > {BRUTE_FORCE_CAP})")
    stats = SearchStats()
    ev = StepEvaluator(instance)
    best_obj = float("inf")
    best_order: list[int] | None = None
    order: list[int] = []
    started = time.monotonic()

    def rec(built_mask: int) -> None:
        nonlocal best_obj, best_order
        if len(order) == n:
            stats.nodes += 1
            obj = ev.partial
            if best_order is None or obj < best_obj - 1e-9 * max(1.0, abs(best_obj)):
                best_obj = obj
                best_order = list(order)
                stats.optimum_count = 1
                stats.incumbent_timeline.append((time.monotonic() - started, obj))
            elif abs(obj - best_obj) <= 1e-9 * max(1.0, abs(best_obj)):
                stats.optimum_count += 1
            return
        for i in range(n):
            if built_mask >> i & 1:
                continue
            if tbl.pred_mask[i] & ~built_mask:
                continue
            ev.push(i)
            order.append(i)
            rec(built_mask | (1 << i))
            order.pop()
            ev.pop()

    rec(0)
    return SearchOutcome(best_order, best_obj, True, stats)
