"""Objective evaluation for deployment orders.

The objective of a deployment order is the area under the improvement
curve: the sum over build steps of (total query runtime before the step)
times (cost of the step's index build). A query plan counts only once all
of its indexes are built; each query uses its fastest available plan; an
index build uses the single best available build interaction.

Three evaluation paths share these semantics:

* ``evaluate`` computes a full order with complete traces,
* ``PrefixState`` is a persistent (copy-on-extend) incremental state,
* ``StepEvaluator`` is a mutable push/pop engine for search inner loops.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Iterable, Sequence

from .model import Instance

__all__ = [
    "Tables",
    "tables",
    "build_cost",
    "runtime_after",
    "evaluate",
    "EvalResult",
    "PrefixState",
    "extend",
    "swap_delta",
    "StepEvaluator",
    "is_feasible_order",
]

CURVE_COLUMNS = [
    "step",
    "index_id",
    "start_time_s",
    "build_cost_s",
    "runtime_after_s",
    "cumulative_objective",
]


class Tables:
    """Compiled lookup tables for one instance (bitmask based)."""

    def __init__(self, instance: Instance):
        self.instance = instance
        self.n = len(instance.indexes)
        self.n_queries = len(instance.queries)
        self.n_plans = len(instance.plans)
        self.ctime = [0.0] * self.n
        for ix in instance.indexes:
            self.ctime[ix.id] = ix.ctime
        self.qtime = [0.0] * self.n_queries
        for q in instance.queries:
            self.qtime[q.id] = q.qtime
        self.base_runtime = sum(self.qtime)

        self.plan_query = [0] * self.n_plans
        self.plan_mask = [0] * self.n_plans
        self.plan_speedup = [0.0] * self.n_plans
        self.plan_size = [0] * self.n_plans
        self.plans_with: list[list[int]] = [[] for _ in range(self.n)]
        self.query_plans: list[list[int]] = [[] for _ in range(self.n_queries)]
        for p in instance.plans:
            mask = 0
            for i in p.indexes:
                mask |= 1 << i
                self.plans_with[i].append(p.id)
            self.plan_query[p.id] = p.query
            self.plan_mask[p.id] = mask
            self.plan_speedup[p.id] = p.qspdup
            self.plan_size[p.id] = len(p.indexes)
            self.query_plans[p.query].append(p.id)

        # helpers[i]: (helper, cspdup) pairs that can cut i's build cost
        self.helpers: list[list[tuple[int, float]]] = [[] for _ in range(self.n)]
        self.targets: list[list[tuple[int, float]]] = [[] for _ in range(self.n)]
        for b in instance.build_interactions:
            self.helpers[b.target].append((b.helper, b.cspdup))
            self.targets[b.helper].append((b.target, b.cspdup))
        self.min_cost = [
            self.ctime[i] - max((s for _, s in self.helpers[i]), default=0.0)
            for i in range(self.n)
        ]

        # instance precedence closure (hard constraints only)
        self.pred_mask = [0] * self.n
        self.succ_mask = [0] * self.n
        for pr in instance.precedences:
            self.succ_mask[pr.before] |= 1 << pr.after
        changed = True
        while changed:
            changed = False
            for i in range(self.n):
                acc = self.succ_mask[i]
                scan = acc
                while scan:
                    low = scan & -scan
                    acc |= self.succ_mask[low.bit_length() - 1]
                    scan ^= low
                if acc != self.succ_mask[i]:
                    self.succ_mask[i] = acc
                    changed = True
        for i in range(self.n):
            scan = self.succ_mask[i]
            while scan:
                low = scan & -scan
                self.pred_mask[low.bit_length() - 1] |= 1 << i
                scan ^= low

        self.full_mask = (1 << self.n) - 1
        self.final_runtime = self._runtime_for_mask(self.full_mask)

    def _runtime_for_mask(self, built_mask: int) -> float:
        total = 0.0
        for q in range(self.n_queries):
            best = 0.0
            for pid in self.query_plans[q]:
                if self.plan_mask[pid] & ~built_mask == 0:
                    s = self.plan_speedup[pid]
                    if s > best:
                        best = s
            total += self.qtime[q] - best
        return total

    def mask_of(self, ids: Iterable[int]) -> int:
        mask = 0
        for i in ids:
            if not 0 <= i < self.n:
                raise ValueError(f"unknown index id {i}")
            mask |= 1 << i
        return mask


def tables(instance: Instance) -> Tables:
    """Compiled tables for the instance, cached on the instance object."""
    cached = instance.__dict__.get("_tables")
    if cached is None:
        cached = Tables(instance)
        instance.__dict__["_tables"] = cached
    return cached


def build_cost(instance: Instance, index: int, built: Iterable[int]) -> float:
    """Cost to build `index` given the set of already built indexes.

    The best available build interaction is subtracted; with no built
    helper the base creation cost applies.
    """
    tbl = tables(instance)
    if not 0 <= index < tbl.n:
        raise ValueError(f"unknown index id {index}")
    built_mask = tbl.mask_of(built)
    if built_mask >> index & 1:
        raise ValueError(f"index {index} is already built")
    best = 0.0
    for helper, s in tbl.helpers[index]:
        if built_mask >> helper & 1 and s > best:
            best = s
    return tbl.ctime[index] - best


def runtime_after(instance: Instance, built: Iterable[int]) -> float:
    """Total query runtime once the given set of indexes is built."""
    tbl = tables(instance)
    return tbl._runtime_for_mask(tbl.mask_of(built))


def is_feasible_order(instance: Instance, order: Sequence[int]) -> bool:
    """True when `order` is a permutation honoring instance precedences."""
    tbl = tables(instance)
    if sorted(order) != list(range(tbl.n)):
        return False
    built = 0
    for i in order:
        if tbl.pred_mask[i] & ~built:
            return False
        built |= 1 << i
    return True


@dataclass
class EvalResult:
    """Objective plus per-step traces for one complete deployment order."""

    order: list[int]
    objective: float
    step_runtime: list[float]  # length n+1, step_runtime[0] is the base runtime
    step_cost: list[float]  # length n
    query_speedup: list[list[float]]  # [query][step 0..n]
    plan_first_step: list[int]  # step at which the plan becomes available, n+1 if never

    def plan_available(self, plan: int, step: int) -> bool:
        return self.plan_first_step[plan] <= step

    def write_curve(self, fileobj) -> None:
        """Emit the per-step improvement-curve trace as CSV."""
        writer = csv.writer(fileobj)
        writer.writerow(CURVE_COLUMNS)
        start = 0.0
        cumulative = 0.0
        for k, idx in enumerate(self.order):
            cost = self.step_cost[k]
            cumulative += self.step_runtime[k] * cost
            writer.writerow(
                [k, idx, repr(start), repr(cost), repr(self.step_runtime[k + 1]), repr(cumulative)]
            )
            start += cost


def evaluate(instance: Instance, order: Sequence[int]) -> EvalResult:
    """Evaluate a complete deployment order, producing full traces."""
    tbl = tables(instance)
    if sorted(order) != list(range(tbl.n)):
        raise ValueError("order must be a permutation of all index ids")

    runtime = tbl.base_runtime
    best = [0.0] * tbl.n_queries
    missing = list(tbl.plan_size)
    step_runtime = [runtime]
    step_cost: list[float] = []
    query_speedup = [[0.0] for _ in range(tbl.n_queries)]
    plan_first_step = [tbl.n + 1] * tbl.n_plans
    built_mask = 0
    objective = 0.0

    for k, idx in enumerate(order):
        cost = tbl.ctime[idx]
        best_help = 0.0
        for helper, s in tbl.helpers[idx]:
            if built_mask >> helper & 1 and s > best_help:
                best_help = s
        cost -= best_help
        objective += runtime * cost
        built_mask |= 1 << idx
        for pid in tbl.plans_with[idx]:
            missing[pid] -= 1
            if missing[pid] == 0:
                plan_first_step[pid] = k + 1
                q = tbl.plan_query[pid]
                s = tbl.plan_speedup[pid]
                if s > best[q]:
                    runtime -= s - best[q]
                    best[q] = s
        step_cost.append(cost)
        step_runtime.append(runtime)
        for q in range(tbl.n_queries):
            query_speedup[q].append(best[q])

    return EvalResult(
        order=list(order),
        objective=objective,
        step_runtime=step_runtime,
        step_cost=step_cost,
        query_speedup=query_speedup,
        plan_first_step=plan_first_step,
    )


@dataclass(frozen=True)
class PrefixState:
    """Incremental evaluation state for a deployment prefix (persistent)."""

    instance: Instance
    built_mask: int
    partial_objective: float
    runtime: float
    best_speedup: tuple[float, ...]
    plan_missing: tuple[int, ...]

    @staticmethod
    def empty(instance: Instance) -> "PrefixState":
        tbl = tables(instance)
        return PrefixState(
            instance=instance,
            built_mask=0,
            partial_objective=0.0,
            runtime=tbl.base_runtime,
            best_speedup=(0.0,) * tbl.n_queries,
            plan_missing=tuple(tbl.plan_size),
        )

    @property
    def built(self) -> frozenset[int]:
        out = []
        scan = self.built_mask
        while scan:
            low = scan & -scan
            out.append(low.bit_length() - 1)
            scan ^= low
        return frozenset(out)


def extend(state: PrefixState, index: int) -> PrefixState:
    """Return the state after building one more index."""
    tbl = tables(state.instance)
    if not 0 <= index < tbl.n:
        raise ValueError(f"unknown index id {index}")
    if state.built_mask >> index & 1:
        raise ValueError(f"index {index} is already built")

    best_help = 0.0
    for helper, s in tbl.helpers[index]:
        if state.built_mask >> helper & 1 and s > best_help:
            best_help = s
    cost = tbl.ctime[index] - best_help

    partial = state.partial_objective + state.runtime * cost
    runtime = state.runtime
    best = list(state.best_speedup)
    missing = list(state.plan_missing)
    for pid in tbl.plans_with[index]:
        missing[pid] -= 1
        if missing[pid] == 0:
            q = tbl.plan_query[pid]
            s = tbl.plan_speedup[pid]
            if s > best[q]:
                runtime -= s - best[q]
                best[q] = s
    return PrefixState(
        instance=state.instance,
        built_mask=state.built_mask | (1 << index),
        partial_objective=partial,
        runtime=runtime,
        best_speedup=tuple(best),
        plan_missing=tuple(missing),
    )


class StepEvaluator:
    """Mutable push/pop evaluator used by the search engines.

    Semantically identical to folding `extend`, with an undo trail so a
    depth-first search can backtrack in O(plans touched).
    """

    __slots__ = ("tbl", "built_mask", "partial", "runtime", "best", "missing", "_trail")

    def __init__(self, instance: Instance):
        self.tbl = tables(instance)
        self.built_mask = 0
        self.partial = 0.0
        self.runtime = self.tbl.base_runtime
        self.best = [0.0] * self.tbl.n_queries
        self.missing = list(self.tbl.plan_size)
        self._trail: list[tuple] = []

    def push(self, index: int) -> float:
        """Build `index`; returns the step cost."""
        tbl = self.tbl
        built = self.built_mask
        best_help = 0.0
        for helper, s in tbl.helpers[index]:
            if built >> helper & 1 and s > best_help:
                best_help = s
        cost = tbl.ctime[index] - best_help
        runtime = self.runtime
        changed_best: list[tuple[int, float]] = []
        self._trail.append((index, self.partial, runtime, changed_best))
        self.partial += runtime * cost
        self.built_mask = built | (1 << index)
        missing = self.missing
        best = self.best
        plan_query = tbl.plan_query
        plan_speedup = tbl.plan_speedup
        for pid in tbl.plans_with[index]:
            m = missing[pid] - 1
            missing[pid] = m
            if m == 0:
                q = plan_query[pid]
                s = plan_speedup[pid]
                if s > best[q]:
                    changed_best.append((q, best[q]))
                    runtime -= s - best[q]
                    best[q] = s
        self.runtime = runtime
        return cost

    def pop(self) -> None:
        index, old_partial, old_runtime, changed_best = self._trail.pop()
        best = self.best
        for q, old in reversed(changed_best):
            best[q] = old
        missing = self.missing
        for pid in self.tbl.plans_with[index]:
            missing[pid] += 1
        self.built_mask &= ~(1 << index)
        self.partial = old_partial
        self.runtime = old_runtime

    @property
    def depth(self) -> int:
        return len(self._trail)

    def pop_to(self, depth: int) -> None:
        while len(self._trail) > depth:
            self.pop()


def _window_sum(ev: StepEvaluator, seq: Sequence[int]) -> float:
    """Objective contribution of building `seq` on top of `ev`, then undo."""
    depth = ev.depth
    start = ev.partial
    for i in seq:
        ev.push(i)
    total = ev.partial - start
    ev.pop_to(depth)
    return total


def swap_delta(instance: Instance, order: Sequence[int], pos_a: int, pos_b: int) -> float:
    """Objective change if the indexes at positions pos_a < pos_b are swapped.

    Only the steps in [pos_a, pos_b] are re-evaluated: the prefix before
    pos_a is shared and every step after pos_b sees the same built set and
    therefore identical runtime and cost either way.
    """
    n = len(order)
    if not (0 <= pos_a < pos_b < n):
        raise ValueError(f"positions out of range: {pos_a}, {pos_b}")
    if sorted(order) != list(range(tables(instance).n)):
        raise ValueError("order must be a permutation of all index ids")
    ev = StepEvaluator(instance)
    for k in range(pos_a):
        ev.push(order[k])
    window = list(order[pos_a : pos_b + 1])
    original = _window_sum(ev, window)
    window[0], window[-1] = window[-1], window[0]
    swapped = _window_sum(ev, window)
    return swapped - original
