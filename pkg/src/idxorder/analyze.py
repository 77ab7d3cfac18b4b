"""Structure analysis: derive sound ordering constraints from an instance.

Five detectors each exploit one structural property of the problem:

* alliances: indexes that appear in exactly the same plans and have no
  external build interactions can be built consecutively,
* colonized indexes: an index whose every plan contains another index (and
  that helps no other build) goes after that index,
* dominated indexes: an index whose benefit is always below and whose cost
  is always above another's goes after it,
* disjoint order: when two indexes behave as non-interacting over every
  possible in-between segment, the denser one goes first,
* tail analysis: enumerate feasible endings, keep only the best ordering
  per ending set (its champion), and emit whatever holds in every champion.

The detectors run in a fixpoint loop; a tail fix removes the fixed index
from the working problem so the remaining detectors see a smaller instance.
Every emitted constraint preserves at least one optimal solution, so exact
search over the constrained space still finds the true optimum.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

from .evaluate import tables
from .model import Instance

__all__ = [
    "ConstraintSet",
    "AnalysisReport",
    "build_constraint_set",
    "constraint_set_from_sidecar",
    "detect_alliances",
    "detect_colonized",
    "detect_dominated",
    "detect_disjoint_order",
    "tail_analysis",
    "analyze",
]

_TOL = 1e-9
DEFAULT_TAIL_BUDGET = 50000
DEFAULT_TIME_BUDGET = 60.0


def _bits(mask: int):
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


@dataclass
class ConstraintSet:
    """Derived ordering knowledge consumed by the search engines.

    Positions are 0-based. `position_domains[i]` is the inclusive interval
    of positions index i may take; `fixed_positions` pins indexes (tail
    fixes); `adjacency_blocks` are sets that must occupy consecutive
    positions in some order.
    """

    n: int
    precedence_pairs: set[tuple[int, int]] = field(default_factory=set)
    adjacency_blocks: list[frozenset[int]] = field(default_factory=list)
    fixed_positions: dict[int, int] = field(default_factory=dict)
    position_domains: list[tuple[int, int]] = field(default_factory=list)

    def __post_init__(self):
        if not self.position_domains:
            self.position_domains = [(0, self.n - 1)] * self.n

    def is_acyclic(self) -> bool:
        return _closure(self.n, self.precedence_pairs) is not None


def _closure(n: int, pairs) -> tuple[list[int], list[int]] | None:
    """Transitive closure as (ancestor, descendant) bitmasks, None if cyclic."""
    desc = [0] * n
    for a, b in pairs:
        desc[a] |= 1 << b
    changed = True
    guard = 0
    while changed:
        changed = False
        guard += 1
        if guard > n + 2:
            break
        for i in range(n):
            acc = desc[i]
            for j in _bits(desc[i]):
                acc |= desc[j]
            if acc != desc[i]:
                desc[i] = acc
                changed = True
    anc = [0] * n
    for i in range(n):
        if desc[i] >> i & 1:
            return None
        for j in _bits(desc[i]):
            anc[j] |= 1 << i
    return anc, desc


def build_constraint_set(
    instance: Instance,
    pairs=(),
    blocks=(),
    fixed_positions: dict[int, int] | None = None,
) -> ConstraintSet:
    """Assemble a ConstraintSet (seeded with instance precedences) and
    compute position domains from the precedence DAG."""
    n = len(instance.indexes)
    all_pairs = {(p.before, p.after) for p in instance.precedences}
    all_pairs.update((a, b) for a, b in pairs)
    closure = _closure(n, all_pairs)
    if closure is None:
        raise ValueError("precedence pairs contain a cycle")
    anc, desc = closure
    fixed = dict(fixed_positions or {})
    domains = []
    for i in range(n):
        if i in fixed:
            domains.append((fixed[i], fixed[i]))
        else:
            domains.append((anc[i].bit_count(), n - 1 - desc[i].bit_count()))
    return ConstraintSet(
        n=n,
        precedence_pairs=all_pairs,
        adjacency_blocks=[frozenset(b) for b in blocks],
        fixed_positions=fixed,
        position_domains=domains,
    )


@dataclass
class AnalysisReport:
    alliances: list[list[int]] = field(default_factory=list)
    colonized: list[tuple[int, int]] = field(default_factory=list)
    dominated: list[tuple[int, int]] = field(default_factory=list)
    disjoint_order: list[tuple[int, int]] = field(default_factory=list)
    tail_fixes: list[tuple[int, int]] = field(default_factory=list)  # (index, from_end)
    precedence_pairs: list[tuple[int, int]] = field(default_factory=list)
    iterations: int = 0
    elapsed: float = 0.0

    def to_doc(self) -> dict:
        return {
            "alliances": [sorted(a) for a in self.alliances],
            "colonized": [list(p) for p in self.colonized],
            "dominated": [list(p) for p in self.dominated],
            "disjoint_order": [list(p) for p in self.disjoint_order],
            "tail_fixes": [list(p) for p in self.tail_fixes],
            "precedence_pairs": sorted([a, b] for a, b in self.precedence_pairs),
            "iterations": self.iterations,
        }


def constraint_set_from_sidecar(instance: Instance, doc: dict) -> ConstraintSet:
    n = len(instance.indexes)
    fixed = {int(i): n - int(from_end) for i, from_end in doc.get("tail_fixes", [])}
    return build_constraint_set(
        instance,
        pairs=[(int(a), int(b)) for a, b in doc.get("precedence_pairs", [])],
        blocks=[frozenset(int(i) for i in blk) for blk in doc.get("alliances", [])],
        fixed_positions=fixed,
    )


# ---------------------------------------------------------------------------
# Workspace
# ---------------------------------------------------------------------------


class _Workspace:
    """Mutable working copy of the problem during analysis."""

    def __init__(self, instance: Instance, constraints: ConstraintSet | None = None):
        tbl = tables(instance)
        self.instance = instance
        self.tbl = tbl
        self.n = tbl.n
        self.active_mask = tbl.full_mask
        self.plan_active = [True] * tbl.n_plans
        self.pairs: set[tuple[int, int]] = set()
        self.blocks: list[frozenset[int]] = []
        self.fixed: dict[int, int] = {}
        self.tail_stack: list[int] = []
        self.report = AnalysisReport()

        self.anc = [0] * self.n
        self.desc = [0] * self.n
        seed_pairs = [(p.before, p.after) for p in instance.precedences]
        if constraints is not None:
            seed_pairs.extend(constraints.precedence_pairs)
        for a, b in seed_pairs:
            self.add_pair(a, b)
        if constraints is not None:
            for blk in constraints.adjacency_blocks:
                self._register_block(frozenset(blk))

    # -- precedence closure ------------------------------------------------

    def add_pair(self, before: int, after: int) -> bool:
        """Record before < after; returns False when known or cycle-forming."""
        if before == after:
            return False
        if self.desc[before] >> after & 1:
            return False
        if self.desc[after] >> before & 1:
            return False  # would create a cycle; never emitted
        self.pairs.add((before, after))
        above = self.anc[before] | (1 << before)
        below = self.desc[after] | (1 << after)
        for x in _bits(above):
            self.desc[x] |= below
        for y in _bits(below):
            self.anc[y] |= above
        return True

    def forced(self, a: int, b: int) -> bool:
        return bool(self.desc[a] >> b & 1)

    # -- active problem ----------------------------------------------------

    @property
    def m(self) -> int:
        return self.active_mask.bit_count()

    def active_ids(self) -> list[int]:
        return list(_bits(self.active_mask))

    def active_plans_of(self, i: int) -> list[int]:
        return [pid for pid in self.tbl.plans_with[i] if self.plan_active[pid]]

    def lo(self, i: int) -> int:
        return (self.anc[i] & self.active_mask).bit_count()

    def hi(self, i: int) -> int:
        return self.m - 1 - (self.desc[i] & self.active_mask).bit_count()

    def fix_last(self, x: int) -> None:
        """Pin x at the last open position and shrink the working problem."""
        pos = self.m - 1  # active indexes occupy the first m positions
        self.fixed[x] = pos
        self.tail_stack.append(x)
        self.report.tail_fixes.append((x, self.n - pos))
        self.active_mask &= ~(1 << x)
        for pid in self.tbl.plans_with[x]:
            self.plan_active[pid] = False
        self.blocks = [b - {x} for b in self.blocks]
        self.blocks = [b for b in self.blocks if len(b) >= 2]

    def _register_block(self, members: frozenset[int]) -> bool:
        covered: list[int] = []
        for k, blk in enumerate(self.blocks):
            if blk == members:
                return False
            inter = blk & members
            if inter:
                if blk <= members:
                    covered.append(k)
                else:
                    return False  # partial overlap: keep the existing block
        for k in reversed(covered):
            del self.blocks[k]
        self.blocks.append(members)
        return True

    # -- marginal speedup / cost under a determined context -----------------

    def queries_of(self, members) -> set[int]:
        qs: set[int] = set()
        for i in members:
            for pid in self.active_plans_of(i):
                qs.add(self.tbl.plan_query[pid])
        return qs

    def marginal_speedup(self, unit_mask: int, context_mask: int) -> float:
        tbl = self.tbl
        total = 0.0
        with_mask = context_mask | unit_mask
        for q in self.queries_of(_bits(unit_mask)):
            best_with = 0.0
            best_without = 0.0
            for pid in tbl.query_plans[q]:
                if not self.plan_active[pid]:
                    continue
                pm = tbl.plan_mask[pid]
                s = tbl.plan_speedup[pid]
                if pm & ~with_mask == 0 and s > best_with:
                    best_with = s
                if pm & ~context_mask == 0 and s > best_without:
                    best_without = s
            total += best_with - best_without
        return total

    def single_cost(self, i: int, context_mask: int) -> float:
        best = 0.0
        for helper, s in self.tbl.helpers[i]:
            if context_mask >> helper & 1 and s > best:
                best = s
        return self.tbl.ctime[i] - best


def _constraint_set(ws: _Workspace) -> ConstraintSet:
    domains: list[tuple[int, int]] = [(0, 0)] * ws.n
    for i in ws.active_ids():
        domains[i] = (ws.lo(i), ws.hi(i))
    for x, pos in ws.fixed.items():
        domains[x] = (pos, pos)
    return ConstraintSet(
        n=ws.n,
        precedence_pairs=set(ws.pairs),
        adjacency_blocks=[frozenset(b) for b in ws.blocks],
        fixed_positions=dict(ws.fixed),
        position_domains=domains,
    )


# ---------------------------------------------------------------------------
# Detectors
# ---------------------------------------------------------------------------


def _alliances_pass(ws: _Workspace) -> bool:
    """Indexes sharing their exact plan set with no external build ties."""
    tbl = ws.tbl
    groups: dict[frozenset[int], list[int]] = {}
    for i in ws.active_ids():
        pset = frozenset(ws.active_plans_of(i))
        if pset:
            groups.setdefault(pset, []).append(i)

    changed = False
    for pset in sorted(groups, key=lambda s: min(groups[s])):
        members = groups[pset]
        if len(members) < 2:
            continue
        mset = frozenset(members)
        mmask = 0
        for i in members:
            mmask |= 1 << i
        external = False
        for i in members:
            for t, _ in tbl.targets[i]:
                if ws.active_mask >> t & 1 and not mmask >> t & 1:
                    external = True
            for h, _ in tbl.helpers[i]:
                if ws.active_mask >> h & 1 and not mmask >> h & 1:
                    external = True
        if external:
            continue
        # Outsiders must relate to all members uniformly, else forcing the
        # block consecutive could exclude every optimum.
        safe = True
        for c in _bits(ws.active_mask & ~mmask):
            above = ws.desc[c] & mmask  # members forced after c
            below = ws.anc[c] & mmask  # members forced before c
            if (above and above != mmask) or (below and below != mmask):
                safe = False
                break
        if not safe:
            continue
        if ws._register_block(mset):
            ws.report.alliances.append(sorted(mset))
            changed = True
    return changed


def _colonized_pass(ws: _Workspace) -> bool:
    """Index i goes after j when every plan of i contains j, not vice versa,
    and i speeds up no other build."""
    tbl = ws.tbl
    changed = False
    for i in ws.active_ids():
        pids = ws.active_plans_of(i)
        if not pids:
            continue
        if any(ws.active_mask >> t & 1 for t, _ in tbl.targets[i]):
            continue
        common = ws.active_mask
        for pid in pids:
            common &= tbl.plan_mask[pid]
        for j in _bits(common & ~(1 << i)):
            mutual = all(
                tbl.plan_mask[pid] >> i & 1 for pid in ws.active_plans_of(j)
            )
            if mutual:
                continue  # mutual containment is alliance territory
            if ws.forced(j, i):
                continue
            if ws.forced(i, j):
                continue
            # Moving i rightward past the in-between segment must stay
            # feasible: nothing potentially between may be forced after i.
            pb = ws.anc[i] & ws.anc[j]
            pa = ws.desc[i] & ws.desc[j]
            between = ws.active_mask & ~pb & ~pa & ~(1 << i) & ~(1 << j)
            if between & ws.desc[i]:
                continue
            if ws.add_pair(j, i):
                ws.report.colonized.append((i, j))
                changed = True
    return changed


def _dominance_units(ws: _Workspace) -> list[tuple[frozenset[int], int]]:
    """Comparison units: adjacency blocks as a whole plus loose indexes."""
    units: list[tuple[frozenset[int], int]] = []
    in_block = 0
    for blk in ws.blocks:
        mask = 0
        for i in blk:
            mask |= 1 << i
        if mask & ws.active_mask == mask:
            units.append((blk, mask))
            in_block |= mask
    for i in ws.active_ids():
        if not in_block >> i & 1:
            units.append((frozenset([i]), 1 << i))
    units.sort(key=lambda u: min(u[0]))
    return units


def _unit_bounds(ws: _Workspace, members: frozenset[int], mask: int):
    """(max benefit, min benefit, min cost, max cost) over all orderings
    consistent with the current constraints."""
    tbl = ws.tbl
    common_anc = ws.active_mask
    for a in members:
        common_anc &= ws.anc[a]

    max_benefit = 0.0
    min_benefit = 0.0
    for q in ws.queries_of(members):
        best_touch = 0.0
        guaranteed = 0.0
        base_forced = 0.0
        best_other = 0.0
        for pid in tbl.query_plans[q]:
            if not ws.plan_active[pid]:
                continue
            pm = tbl.plan_mask[pid]
            s = tbl.plan_speedup[pid]
            if pm & mask:
                if s > best_touch:
                    best_touch = s
                if pm & ~mask & ~common_anc == 0 and s > guaranteed:
                    guaranteed = s
            else:
                if s > best_other:
                    best_other = s
                if pm & ~common_anc == 0 and s > base_forced:
                    base_forced = s
        max_benefit += max(0.0, best_touch - base_forced)
        min_benefit += max(0.0, guaranteed - best_other)

    min_cost = 0.0
    max_cost = 0.0
    for a in members:
        best_any = 0.0
        best_forced = 0.0
        for helper, s in tbl.helpers[a]:
            if not ws.active_mask >> helper & 1:
                continue
            if s > best_any:
                best_any = s
            if ws.anc[a] >> helper & 1 and s > best_forced:
                best_forced = s
        min_cost += tbl.ctime[a] - best_any
        max_cost += tbl.ctime[a] - best_forced
    return max_benefit, min_benefit, min_cost, max_cost


def _dominated_pass(ws: _Workspace) -> bool:
    """Emit dominator-before-dominated when the candidate's best possible
    benefit trails the dominator's guaranteed benefit and the cost and
    side-effect conditions hold."""
    tbl = ws.tbl
    units = _dominance_units(ws)
    bounds = {mask: _unit_bounds(ws, members, mask) for members, mask in units}
    changed = False
    for a_members, a_mask in units:  # dominated candidate
        for b_members, b_mask in units:  # dominator candidate
            if a_mask == b_mask:
                continue
            if all(ws.forced(b, a) for a in a_members for b in b_members):
                continue
            if any(ws.forced(a, b) for a in a_members for b in b_members):
                continue
            max_b_a, _, min_c_a, _ = bounds[a_mask]
            _, min_b_b, _, max_c_b = bounds[b_mask]
            if not (max_b_a + _TOL < min_b_b and min_c_a >= max_c_b - _TOL):
                continue
            before_all = ws.active_mask
            after_all = ws.active_mask
            for x in a_members | b_members:
                before_all &= ws.anc[x]
                after_all &= ws.desc[x]
            between = ws.active_mask & ~a_mask & ~b_mask & ~before_all & ~after_all
            # Swapping the two units across any in-between segment must stay
            # feasible and must not change that segment's costs or benefits.
            desc_a = 0
            anc_b = 0
            for a in a_members:
                desc_a |= ws.desc[a]
            for b in b_members:
                anc_b |= ws.anc[b]
            if between & desc_a or between & anc_b:
                continue
            if any(
                between >> t & 1 for a in a_members for t, _ in tbl.targets[a]
            ):
                continue  # the candidate could cheapen an in-between build
            if any(
                (between | a_mask) >> h & 1 for b in b_members for h, _ in tbl.helpers[b]
            ):
                continue  # the dominator may not get cheaper from in-betweens
                # or from the dominated candidate itself
            added = False
            for b in sorted(b_members):
                for a in sorted(a_members):
                    if ws.add_pair(b, a):
                        added = True
            if added:
                for a in sorted(a_members):
                    for b in sorted(b_members):
                        ws.report.dominated.append((a, b))
                changed = True
    return changed


def _interaction_masks(ws: _Workspace) -> list[int]:
    """Indexes sharing a query (any plans) or a build interaction."""
    tbl = ws.tbl
    query_members: dict[int, int] = {}
    for pid in range(tbl.n_plans):
        if not ws.plan_active[pid]:
            continue
        q = tbl.plan_query[pid]
        query_members[q] = query_members.get(q, 0) | (tbl.plan_mask[pid] & ws.active_mask)
    inter = [0] * ws.n
    for q, mask in query_members.items():
        for i in _bits(mask):
            inter[i] |= mask
    for i in ws.active_ids():
        for h, _ in tbl.helpers[i]:
            if ws.active_mask >> h & 1:
                inter[i] |= 1 << h
                inter[h] |= 1 << i
        for t, _ in tbl.targets[i]:
            if ws.active_mask >> t & 1:
                inter[i] |= 1 << t
                inter[t] |= 1 << i
    for i in range(ws.n):
        inter[i] &= ~(1 << i)
    return inter


def _disjoint_pass(ws: _Workspace) -> bool:
    """Order pairs whose interactions are all pinned outside the window:
    the denser endpoint goes first."""
    inter = _interaction_masks(ws)
    active = ws.active_ids()
    changed = False
    density: dict[tuple[int, int], float] = {}
    for i in active:  # candidate earlier index
        for k in active:  # candidate later index
            if i == k or ws.forced(i, k) or ws.forced(k, i):
                continue
            if inter[i] >> k & 1:
                continue
            others = (inter[i] | inter[k]) & ws.active_mask & ~(1 << i) & ~(1 << k)
            # every interacting index must succeed i or precede k
            if others & ~(ws.desc[i] | ws.anc[k]):
                continue
            # displacing i/k across potentially-between indexes must be legal
            pb = ws.anc[i] & ws.anc[k]
            pa = ws.desc[i] & ws.desc[k]
            between = ws.active_mask & ~pb & ~pa & ~(1 << i) & ~(1 << k)
            if between & ws.desc[k] or between & ws.anc[i]:
                continue
            ctx_i = inter[i] & ws.anc[k]
            ctx_k = inter[k] & ws.anc[k]
            key_i = (i, ctx_i)
            if key_i not in density:
                cost = ws.single_cost(i, ctx_i)
                density[key_i] = ws.marginal_speedup(1 << i, ctx_i) / cost
            key_k = (k, ctx_k)
            if key_k not in density:
                cost = ws.single_cost(k, ctx_k)
                density[key_k] = ws.marginal_speedup(1 << k, ctx_k) / cost
            if density[key_i] > density[key_k] + _TOL:
                if ws.add_pair(i, k):
                    ws.report.disjoint_order.append((i, k))
                    changed = True
    return changed


# ---------------------------------------------------------------------------
# Tail analysis
# ---------------------------------------------------------------------------


def _tail_patterns(ws: _Workspace, length: int, budget: int):
    """All feasible ordered endings of the working problem, or None when
    the enumeration would exceed the budget."""
    m = ws.m
    first_slot = m - length
    cands = [i for i in ws.active_ids() if ws.hi(i) >= first_slot]
    must = [i for i in ws.active_ids() if ws.lo(i) >= first_slot]
    patterns: list[tuple[int, ...]] = []
    chosen: list[int] = []
    blocks = [(blk, sum(1 << i for i in blk)) for blk in ws.blocks]

    def feasible_complete() -> bool:
        cset = set(chosen)
        for x in must:
            if x not in cset:
                return False
        for x in chosen:
            rest = ws.desc[x] & ws.active_mask
            for y in _bits(rest):
                if y not in cset:
                    return False
        for blk, _ in blocks:
            inside = [slot for slot, x in enumerate(chosen) if x in blk]
            if not inside:
                continue
            if len(inside) == len(blk):
                if max(inside) - min(inside) != len(blk) - 1:
                    return False
            else:
                # straddling fragment must sit at the very start of the tail
                if sorted(inside) != list(range(len(inside))):
                    return False
        return True

    def rec(slot: int) -> bool:
        if slot == length:
            if feasible_complete():
                patterns.append(tuple(chosen))
                if len(patterns) > budget:
                    return False
            return True
        pos = first_slot + slot
        used = set(chosen)
        for x in cands:
            if x in used or ws.lo(x) > pos or ws.hi(x) < pos:
                continue
            if any(ws.desc[x] >> y & 1 for y in chosen):
                continue  # a forced successor of x is already placed earlier
            chosen.append(x)
            ok = rec(slot + 1)
            chosen.pop()
            if not ok:
                return False
        return True

    if not rec(0):
        return None
    return patterns


def _tail_objective(ws: _Workspace, base_mask: int, pattern: tuple[int, ...]) -> float:
    tbl = ws.tbl
    best: dict[int, float] = {}
    runtime = 0.0
    for q in range(tbl.n_queries):
        b = 0.0
        for pid in tbl.query_plans[q]:
            if not ws.plan_active[pid]:
                continue
            if tbl.plan_mask[pid] & ~base_mask == 0 and tbl.plan_speedup[pid] > b:
                b = tbl.plan_speedup[pid]
        best[q] = b
        runtime += tbl.qtime[q] - b
    built = base_mask
    obj = 0.0
    for x in pattern:
        cost = ws.single_cost(x, built)
        obj += runtime * cost
        built |= 1 << x
        for pid in ws.active_plans_of(x):
            pm = tbl.plan_mask[pid]
            if pm & ~built == 0:
                q = tbl.plan_query[pid]
                s = tbl.plan_speedup[pid]
                if s > best[q]:
                    runtime -= s - best[q]
                    best[q] = s
    return obj


def _tail_pass(ws: _Workspace, budget: int, deadline: float) -> tuple[bool, int | None]:
    """Champion analysis for growing tail lengths. Returns (changed,
    index fixed at the last position or None)."""
    changed = False
    m = ws.m
    length = 3
    while length < m:
        if time.monotonic() > deadline:
            break
        patterns = _tail_patterns(ws, length, budget)
        if patterns is None or not patterns:
            break
        groups: dict[frozenset[int], list[tuple[int, ...]]] = {}
        for pat in patterns:
            groups.setdefault(frozenset(pat), []).append(pat)
        champions: list[tuple[int, ...]] = []
        for tail_set in sorted(groups, key=lambda s: tuple(sorted(s))):
            pats = groups[tail_set]
            base_mask = ws.active_mask
            for x in tail_set:
                base_mask &= ~(1 << x)
            objs = [(_tail_objective(ws, base_mask, p), p) for p in pats]
            best_obj = min(o for o, _ in objs)
            champions.extend(p for o, p in objs if o <= best_obj + _TOL)

        last = {pat[-1] for pat in champions}
        fixed_last = last.pop() if len(last) == 1 else None

        # pairwise rules holding in every champion
        actives = ws.active_ids()
        rule_pairs: set[tuple[int, int]] | None = None
        for pat in champions:
            tail_set = set(pat)
            pos = {x: k for k, x in enumerate(pat)}
            pairs = set()
            for b in pat:
                for a in actives:
                    if a == b:
                        continue
                    if a not in tail_set or pos[a] < pos[b]:
                        pairs.add((a, b))
            rule_pairs = pairs if rule_pairs is None else rule_pairs & pairs
        if rule_pairs:
            for a, b in sorted(rule_pairs):
                if ws.add_pair(a, b):
                    changed = True
        if fixed_last is not None:
            return True, fixed_last
        length += 1
    return changed, None


# ---------------------------------------------------------------------------
# Public detector wrappers and the fixpoint driver
# ---------------------------------------------------------------------------


def _fresh_ws(instance: Instance, constraints: ConstraintSet | None) -> _Workspace:
    return _Workspace(instance, constraints)


def detect_alliances(instance: Instance, constraints: ConstraintSet | None = None):
    ws = _fresh_ws(instance, constraints)
    _alliances_pass(ws)
    return [frozenset(a) for a in ws.report.alliances]


def detect_colonized(instance: Instance, constraints: ConstraintSet | None = None):
    ws = _fresh_ws(instance, constraints)
    _colonized_pass(ws)
    return list(ws.report.colonized)


def detect_dominated(instance: Instance, constraints: ConstraintSet | None = None):
    ws = _fresh_ws(instance, constraints)
    if constraints is None:
        _alliances_pass(ws)
    _dominated_pass(ws)
    return list(ws.report.dominated)


def detect_disjoint_order(instance: Instance, constraints: ConstraintSet | None = None):
    ws = _fresh_ws(instance, constraints)
    _disjoint_pass(ws)
    return list(ws.report.disjoint_order)


def tail_analysis(
    instance: Instance,
    constraints: ConstraintSet | None = None,
    budget: int = DEFAULT_TAIL_BUDGET,
):
    """One champion-analysis pass; returns (tail fixes, precedence pairs)."""
    ws = _fresh_ws(instance, constraints)
    before = set(ws.pairs)
    _, fixed_last = _tail_pass(ws, budget, time.monotonic() + DEFAULT_TIME_BUDGET)
    fixes = []
    if fixed_last is not None:
        fixes.append((fixed_last, 1))
    return fixes, sorted(ws.pairs - before)


def analyze(
    instance: Instance,
    time_budget: float = DEFAULT_TIME_BUDGET,
    tail_budget: int = DEFAULT_TAIL_BUDGET,
) -> tuple[ConstraintSet, AnalysisReport]:
    """Run all detectors to fixpoint (alliances, colonized, dominated,
    disjoint, tail); a tail fix shrinks the working problem and the loop
    recurses on the remainder. Returns sound partial results if the time
    budget runs out."""
    start = time.monotonic()
    deadline = start + time_budget
    ws = _Workspace(instance)
    iterations = 0
    max_iterations = ws.n * ws.n + 4
    while iterations < max_iterations:
        iterations += 1
        changed = False
        for det in (_alliances_pass, _colonized_pass, _dominated_pass, _disjoint_pass):
            if time.monotonic() > deadline:
                break
            changed |= det(ws)
        if time.monotonic() > deadline:
            break
        if ws.m > 3:
            tail_changed, fixed_last = _tail_pass(ws, tail_budget, deadline)
            changed |= tail_changed
            if fixed_last is not None:
                ws.fix_last(fixed_last)
                continue
        if not changed:
            break
    ws.report.precedence_pairs = sorted(ws.pairs)
    ws.report.iterations = iterations
    ws.report.elapsed = time.monotonic() - start
    return _constraint_set(ws), ws.report
