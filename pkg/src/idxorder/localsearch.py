"""Improvement metaheuristics over deployment orders.

* Tabu search with best-swap or first-swap neighborhoods,
* large neighborhood search (LNS): free a random subset of positions and
  re-optimize them exactly while everything else stays fixed,
* variable neighborhood search (VNS): LNS whose relaxation size and
  failure limit adapt to the proof rate of recent relaxations.

All four return the best deployment ever visited together with search
statistics; incumbent objective timelines are non-increasing and runs are
deterministic for a fixed seed.
"""

from __future__ import annotations

import math
import random
import time
from dataclasses import dataclass

from .analyze import ConstraintSet, _closure, build_constraint_set
from .evaluate import StepEvaluator, _window_sum, evaluate, tables
from .exact import SearchStats
from .model import Instance

__all__ = [
    "TabuParams",
    "LnsParams",
    "VnsParams",
    "tabu_bswap",
    "tabu_fswap",
    "lns",
    "vns",
    "adapt_neighborhood",
]

_TOL = 1e-12


@dataclass(frozen=True)
class TabuParams:
    tabu_length: int | None = None  # default 7 + n/10, resolved at run time
    deadline: float = 10.0
    seed: int = 0

    def __post_init__(self):
        if self.tabu_length is not None and self.tabu_length < 0:
            raise ValueError("tabu_length must be >= 0")


@dataclass(frozen=True)
class LnsParams:
    relax_fraction: float = 0.05
    failure_limit: int = 500
    deadline: float = 10.0
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.relax_fraction <= 1:
            raise ValueError("relax_fraction must be in (0, 1]")
        if self.failure_limit <= 0:
            raise ValueError("failure_limit must be positive")


@dataclass(frozen=True)
class VnsParams(LnsParams):
    batch_size: int = 20
    proof_threshold: float = 0.75
    relax_increment: float = 0.01
    fail_limit_growth: float = 0.20

    def __post_init__(self):
        super().__post_init__()
        if not 0 < self.proof_threshold < 1:
            raise ValueError("proof_threshold must be in (0, 1)")
        if self.batch_size <= 0:
            raise ValueError("batch_size must be positive")


def adapt_neighborhood(
    relax_fraction: float, failure_limit: float, proofs: int, params: VnsParams
) -> tuple[float, float]:
    """One adaptation step after a batch: grow the neighborhood when most
    relaxations were proofs, otherwise allow more exploration."""
    if proofs / params.batch_size > params.proof_threshold:
        return min(1.0, relax_fraction + params.relax_increment), failure_limit
    return relax_fraction, failure_limit * (1.0 + params.fail_limit_growth)


# ---------------------------------------------------------------------------
# Tabu search
# ---------------------------------------------------------------------------


def _swap_feasible(tbl, a: int, b: int, between_mask: int) -> bool:
    """May a (earlier) and b (later) trade places across `between_mask`?"""
    if tbl.succ_mask[a] & (between_mask | (1 << b)):
        return False
    if tbl.pred_mask[b] & (between_mask | (1 << a)):
        return False
    return True


def _tabu(instance: Instance, start, params: TabuParams, best_swap: bool):
    tbl = tables(instance)
    n = tbl.n
    tabu_len = params.tabu_length if params.tabu_length is not None else 7 + n // 10
    rng = random.Random(params.seed)
    stats = SearchStats()

    cur = list(start)
    cur_obj = evaluate(instance, cur).objective
    best = list(cur)
    best_obj = cur_obj
    started = time.monotonic()
    deadline_at = started + params.deadline
    stats.incumbent_timeline.append((0.0, best_obj))
    if params.deadline <= 0:
        return best, stats

    tabu_until: dict[int, int] = {}
    iteration = 0
    while time.monotonic() < deadline_at:
        iteration += 1
        chosen: tuple[int, int, float] | None = None

        if best_swap:
            ev = StepEvaluator(instance)
            for pa in range(n - 1):
                a = cur[pa]
                between = 0
                for pb in range(pa + 1, n):
                    b = cur[pb]
                    if _swap_feasible(tbl, a, b, between):
                        window = cur[pa : pb + 1]
                        orig = _window_sum(ev, window)
                        window[0], window[-1] = window[-1], window[0]
                        delta = _window_sum(ev, window) - orig
                        tabu = (
                            tabu_until.get(a, 0) >= iteration
                            or tabu_until.get(b, 0) >= iteration
                        )
                        aspirates = cur_obj + delta < best_obj - _TOL
                        if (not tabu or aspirates) and (
                            chosen is None or delta < chosen[2] - _TOL
                        ):
                            chosen = (pa, pb, delta)
                    between |= 1 << b
                ev.push(a)
        else:
            pairs = [(pa, pb) for pa in range(n - 1) for pb in range(pa + 1, n)]
            rng.shuffle(pairs)
            for pa, pb in pairs:
                a, b = cur[pa], cur[pb]
                between = 0
                for p in range(pa + 1, pb):
                    between |= 1 << cur[p]
                if not _swap_feasible(tbl, a, b, between):
                    continue
                ev = StepEvaluator(instance)
                for k in range(pa):
                    ev.push(cur[k])
                window = cur[pa : pb + 1]
                orig = _window_sum(ev, window)
                window[0], window[-1] = window[-1], window[0]
                delta = _window_sum(ev, window) - orig
                if delta >= -_TOL:
                    continue
                tabu = (
                    tabu_until.get(a, 0) >= iteration
                    or tabu_until.get(b, 0) >= iteration
                )
                if tabu and not cur_obj + delta < best_obj - _TOL:
                    continue
                chosen = (pa, pb, delta)
                break

        if chosen is None:
            break
        pa, pb, delta = chosen
        a, b = cur[pa], cur[pb]
        cur[pa], cur[pb] = b, a
        cur_obj += delta
        stats.moves += 1
        tabu_until[a] = iteration + tabu_len
        tabu_until[b] = iteration + tabu_len
        if cur_obj < best_obj - _TOL:
            best = list(cur)
            best_obj = cur_obj
            stats.incumbent_timeline.append((time.monotonic() - started, best_obj))

    return best, stats


def tabu_bswap(instance: Instance, start, params: TabuParams | None = None):
    """Tabu search applying the best feasible non-tabu swap each iteration
    (tabu moves are allowed when they beat the global best)."""
    return _tabu(instance, start, params or TabuParams(), best_swap=True)


def tabu_fswap(instance: Instance, start, params: TabuParams | None = None):
    """Tabu search applying the first improving swap in a seeded random
    scan order; stops when no improving swap exists."""
    return _tabu(instance, start, params or TabuParams(), best_swap=False)


# ---------------------------------------------------------------------------
# LNS / VNS
# ---------------------------------------------------------------------------


class _RelaxEngine:
    """Exact re-optimization of a freed subset of positions.

    Freed indexes may only permute among the freed positions; every other
    index keeps its absolute position, so the objective after the last
    freed position is a constant of the relaxation.
    """

    def __init__(self, instance: Instance, constraints: ConstraintSet):
        self.instance = instance
        self.tbl = tables(instance)
        self.n = self.tbl.n
        closure = _closure(self.n, constraints.precedence_pairs)
        if closure is None:
            raise ValueError("constraint set contains a precedence cycle")
        self.anc, self.desc = closure
        self.domains = constraints.position_domains
        self.fixed = constraints.fixed_positions
        self.blocks = [sorted(b) for b in constraints.adjacency_blocks]
        self.block_of: dict[int, list[int]] = {}
        for blk in self.blocks:
            for m in blk:
                self.block_of[m] = blk

    def search(self, order: list[int], total_obj: float, freed: list[int], failure_limit: float):
        """Returns (improved order or None, proof flag, nodes, failures)."""
        tbl = self.tbl
        pos_of = {idx: p for p, idx in enumerate(order)}
        slots = sorted(pos_of[i] for i in freed)
        freed_set = set(freed)
        first, last = slots[0], slots[-1]

        ev = StepEvaluator(self.instance)
        for p in range(first):
            ev.push(order[p])

        current_window = _window_sum(ev, order[first : last + 1])
        suffix_const = total_obj - ev.partial - current_window

        # Admissible completion bound pieces. The runtime before any window
        # step is at least the runtime with every freed index plus all fixed
        # steps so far built, so each remaining fixed step p contributes at
        # least rmin[p] * min_cost and each unplaced freed index at least
        # rmin_floor * min_cost.
        slot_set = set(slots)
        probe = StepEvaluator(self.instance)
        for p in range(first):
            probe.push(order[p])
        for i in freed:
            probe.push(i)
        rmin = [0.0] * (last + 2)
        for p in range(first, last + 1):
            rmin[p] = probe.runtime
            if p not in slot_set:
                probe.push(order[p])
        rmin_floor = probe.runtime
        bound_tail = [0.0] * (last + 2)
        for p in range(last, first - 1, -1):
            bound_tail[p] = bound_tail[p + 1] + (
                0.0 if p in slot_set else rmin[p] * tbl.min_cost[order[p]]
            )
        freed_min_total = sum(tbl.min_cost[i] for i in freed)

        # precedence window against non-freed indexes (their positions hold)
        min_slot_ok: dict[int, int] = {}
        max_slot_ok: dict[int, int] = {}
        for i in freed:
            lo = self.domains[i][0]
            hi = self.domains[i][1]
            for p in _iter_bits(self.anc[i]):
                if p not in freed_set:
                    lo = max(lo, pos_of[p] + 1)
            for p in _iter_bits(self.desc[i]):
                if p not in freed_set:
                    hi = min(hi, pos_of[p] - 1)
            if i in self.fixed:
                lo = max(lo, self.fixed[i])
                hi = min(hi, self.fixed[i])
            min_slot_ok[i] = lo
            max_slot_ok[i] = hi

        assignment: dict[int, int] = {}  # slot -> freed index
        placed_pos: dict[int, int] = {}  # freed index -> slot
        best_obj = total_obj
        best_assign: dict[int, int] | None = None
        nodes = 0
        failures = 0
        aborted = False
        final_runtime = tbl.final_runtime

        def block_ok(idx: int, pos: int) -> bool:
            blk = self.block_of.get(idx)
            if blk is None:
                return True
            width = len(blk) - 1
            for m in blk:
                if m == idx:
                    continue
                if m in freed_set:
                    mp = placed_pos.get(m)
                    if mp is not None and abs(mp - pos) > width:
                        return False
                elif abs(pos_of[m] - pos) > width:
                    return False
            return True

        unplaced_mask = _mask_of(freed)

        def push_segment(stop: int, rem_min: float) -> bool:
            """Push fixed steps up to `stop`, abandoning as soon as the
            completion bound cannot beat the best known objective."""
            while ev.depth < stop:
                p = ev.depth
                ev.push(order[p])
                if (
                    ev.partial
                    + bound_tail[p + 1]
                    + rmin_floor * rem_min
                    + suffix_const
                    >= best_obj - _TOL
                ):
                    return False
            return True

        def rec(k: int, unassigned_min: float) -> None:
            nonlocal best_obj, best_assign, nodes, failures, aborted, unplaced_mask
            if aborted:
                return
            slot = slots[k]
            for cand in freed:
                if aborted:
                    return
                if not unplaced_mask >> cand & 1:
                    continue
                if not min_slot_ok[cand] <= slot <= max_slot_ok[cand]:
                    continue
                if self.anc[cand] & unplaced_mask & ~(1 << cand):
                    continue  # an unplaced freed predecessor would land later
                if not block_ok(cand, slot):
                    continue
                nodes += 1
                depth = ev.depth
                ev.push(cand)
                assignment[slot] = cand
                placed_pos[cand] = slot
                unplaced_mask &= ~(1 << cand)
                rem_min = unassigned_min - tbl.min_cost[cand]
                if k + 1 == len(slots):
                    if push_segment(last + 1, 0.0):
                        obj = ev.partial + suffix_const
                        if obj < best_obj - _TOL:
                            best_obj = obj
                            best_assign = dict(assignment)
                        else:
                            failures += 1
                    else:
                        failures += 1
                    if failures > failure_limit:
                        aborted = True
                else:
                    bound_ok = (
                        ev.partial
                        + final_runtime * (seg_min[ev.depth] + rem_min)
                        + suffix_const
                        < best_obj - _TOL
                    )
                    if bound_ok and push_segment(slots[k + 1], rem_min):
                        rec(k + 1, rem_min)
                    else:
                        failures += 1
                        if failures > failure_limit:
                            aborted = True
                ev.pop_to(depth)
                del assignment[slot]
                del placed_pos[cand]
                unplaced_mask |= 1 << cand

        rec(0, freed_min_total)
        proof = not aborted
        if best_assign is None:
            return None, proof, nodes, failures
        new_order = list(order)
        for slot, idx in best_assign.items():
            new_order[slot] = idx
        return new_order, proof, nodes, failures


def _mask_of(ids) -> int:
    mask = 0
    for i in ids:
        mask |= 1 << i
    return mask


def _iter_bits(mask: int):
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def _lns_loop(
    instance: Instance,
    constraints: ConstraintSet | None,
    start,
    params: LnsParams,
    adaptive: bool,
):
    tbl = tables(instance)
    n = tbl.n
    if constraints is None:
        constraints = build_constraint_set(instance)
    engine = _RelaxEngine(instance, constraints)
    rng = random.Random(params.seed)
    stats = SearchStats()

    cur = list(start)
    cur_obj = evaluate(instance, cur).objective
    started = time.monotonic()
    deadline_at = started + params.deadline
    stats.incumbent_timeline.append((0.0, cur_obj))
    if params.deadline <= 0:
        return cur, stats

    relax_fraction = params.relax_fraction
    failure_limit: float = params.failure_limit
    batch_proofs = 0
    batch_count = 0
    batch_no = 0

    while time.monotonic() < deadline_at:
        size = min(n, max(2, math.ceil(relax_fraction * n)))
        freed = sorted(rng.sample(range(n), size))
        improved, proof, nodes, failures = engine.search(cur, cur_obj, freed, failure_limit)
        stats.restarts += 1
        stats.nodes += nodes
        if proof:
            stats.proofs += 1
        if improved is not None:
            cur = improved
            cur_obj = evaluate(instance, cur).objective
            stats.incumbent_timeline.append((time.monotonic() - started, cur_obj))
        if size >= n and proof:
            break  # the full relaxation was exhausted: nothing better exists

        if adaptive:
            batch_count += 1
            batch_proofs += proof
            if batch_count == params.batch_size:
                batch_no += 1
                relax_fraction, failure_limit = adapt_neighborhood(
                    relax_fraction, failure_limit, batch_proofs, params
                )
                stats.trajectory.append((batch_no, relax_fraction, failure_limit))
                batch_count = 0
                batch_proofs = 0

    return cur, stats


def lns(instance: Instance, constraints, start, params: LnsParams | None = None):
    """Large neighborhood search with fixed relaxation size and failure
    limit; stops at the deadline or after a proof of the full relaxation."""
    return _lns_loop(instance, constraints, start, params or LnsParams(), adaptive=False)


def vns(instance: Instance, constraints, start, params: VnsParams | None = None):
    """LNS with neighborhood adaptation per batch of relaxations; the
    parameter trajectory is recorded in the returned stats."""
    return _lns_loop(instance, constraints, start, params or VnsParams(), adaptive=True)
