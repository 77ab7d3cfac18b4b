"""Constructive baselines: interaction-guided greedy and a dynamic
programming scheduler that clusters indexes by global min-cut and merges
the sub-schedules by immediate benefit.
"""

from __future__ import annotations

import networkx as nx

from .evaluate import tables
from .model import Instance

__all__ = ["greedy", "edge_weights", "dp_schedule", "min_cut_split"]


def greedy(instance: Instance) -> list[int]:
    """Append the eligible index with the best benefit density at each step.

    The benefit of a candidate is its direct runtime reduction plus, for
    every plan it appears in that would still beat the query's runtime, the
    plan's residual speedup split equally over the plan's missing indexes
    (the candidate included). Density divides by the candidate's build cost
    given what is already built. Ties go to the lowest index id; candidates
    with unbuilt predecessors are skipped.
    """
    tbl = tables(instance)
    n = tbl.n
    built_mask = 0
    missing = list(tbl.plan_size)
    best = [0.0] * tbl.n_queries
    order: list[int] = []
    remaining = set(range(n))

    for _ in range(n):
        chosen = -1
        chosen_density = -1.0
        for i in sorted(remaining):
            if tbl.pred_mask[i] & ~built_mask:
                continue
            newly: dict[int, float] = {}
            for pid in tbl.plans_with[i]:
                if missing[pid] == 1:
                    q = tbl.plan_query[pid]
                    s = tbl.plan_speedup[pid]
                    if s > newly.get(q, best[q]):
                        newly[q] = s
            benefit = sum(s - best[q] for q, s in newly.items())
            for pid in tbl.plans_with[i]:
                q = tbl.plan_query[pid]
                interaction = tbl.plan_speedup[pid] - newly.get(q, best[q])
                if interaction > 0 and missing[pid] > 0:
                    benefit += interaction / missing[pid]
            best_help = 0.0
            for helper, s in tbl.helpers[i]:
                if built_mask >> helper & 1 and s > best_help:
                    best_help = s
            density = benefit / (tbl.ctime[i] - best_help)
            if chosen == -1 or density > chosen_density:
                chosen = i
                chosen_density = density
        if chosen == -1:  # no eligible candidate; cannot happen on acyclic input
            chosen = min(remaining)
        remaining.discard(chosen)
        order.append(chosen)
        built_mask |= 1 << chosen
        for pid in tbl.plans_with[chosen]:
            missing[pid] -= 1
            if missing[pid] == 0:
                q = tbl.plan_query[pid]
                s = tbl.plan_speedup[pid]
                if s > best[q]:
                    best[q] = s
    return order


def edge_weights(instance: Instance) -> dict[tuple[int, int], float]:
    """Symmetric pair weights from query and competing interactions.

    Per query, a plan with speedup s over k indexes contributes s/k to
    every pair inside it; two indexes appearing only in different plans of
    the same query get the smaller of their per-plan contributions. The
    per-query weights are summed over all queries. Keys are (i, j), i < j.
    """
    tbl = tables(instance)
    weights: dict[tuple[int, int], float] = {}
    for q in range(tbl.n_queries):
        joint: dict[tuple[int, int], float] = {}
        solo: dict[int, float] = {}
        for pid in tbl.query_plans[q]:
            members = sorted(
                i for i in range(tbl.n) if tbl.plan_mask[pid] >> i & 1
            )
            share = tbl.plan_speedup[pid] / len(members)
            for a in range(len(members)):
                i = members[a]
                if share > solo.get(i, 0.0):
                    solo[i] = share
                for b in range(a + 1, len(members)):
                    key = (i, members[b])
                    joint[key] = joint.get(key, 0.0) + share
        indexes = sorted(solo)
        for a in range(len(indexes)):
            for b in range(a + 1, len(indexes)):
                key = (indexes[a], indexes[b])
                if key in joint:
                    w = joint[key]
                else:
                    w = min(solo[key[0]], solo[key[1]])
                if w > 0:
                    weights[key] = weights.get(key, 0.0) + w
    return weights


def min_cut_split(
    nodes: list[int], weights: dict[tuple[int, int], float]
) -> tuple[list[int], list[int]]:
    """Split nodes by a global minimum cut of the weighted pair graph.

    Disconnected graphs split along a zero-weight component boundary; a
    graph with no edges at all splits into id-ordered halves.
    """
    nodes = sorted(nodes)
    if len(nodes) < 2:
        raise ValueError("need at least two nodes to split")
    graph = nx.Graph()
    graph.add_nodes_from(nodes)
    node_set = set(nodes)
    for (a, b), w in sorted(weights.items()):
        if a in node_set and b in node_set and w > 0:
            graph.add_edge(a, b, weight=w)
    if graph.number_of_edges() == 0:
        half = len(nodes) // 2
        return nodes[:half], nodes[half:]
    components = sorted(nx.connected_components(graph), key=min)
    if len(components) > 1:
        side = sorted(components[0])
        rest = sorted(node_set - set(side))
        return side, rest
    _, (part_a, part_b) = nx.stoer_wagner(graph)
    part_a, part_b = sorted(part_a), sorted(part_b)
    if min(part_b) < min(part_a):
        part_a, part_b = part_b, part_a
    return part_a, part_b


def dp_schedule(instance: Instance) -> list[int]:
    """Recursive min-cut clustering, then merge by immediate benefit.

    Build costs are deliberately ignored (edge weights come from query
    interactions only); the merge repeatedly takes whichever side's front
    element adds the larger runtime reduction, lowest id on ties. A final
    stable repair pass restores precedence feasibility if needed.
    """
    tbl = tables(instance)
    n = tbl.n
    weights = edge_weights(instance)

    def marginal(front: int, missing: list[int], best: list[float]) -> float:
        gain = 0.0
        improved: dict[int, float] = {}
        for pid in tbl.plans_with[front]:
            if missing[pid] == 1:
                q = tbl.plan_query[pid]
                s = tbl.plan_speedup[pid]
                if s > improved.get(q, best[q]):
                    improved[q] = s
        for q, s in improved.items():
            gain += s - best[q]
        return gain

    def schedule(group: list[int]) -> list[int]:
        if len(group) <= 1:
            return list(group)
        part_a, part_b = min_cut_split(group, weights)
        seq_a = schedule(part_a)
        seq_b = schedule(part_b)
        union_mask = 0
        for i in group:
            union_mask |= 1 << i
        merged: list[int] = []
        built_mask = 0
        missing = list(tbl.plan_size)
        best = [0.0] * tbl.n_queries

        def consume(i: int) -> None:
            nonlocal built_mask
            built_mask |= 1 << i
            for pid in tbl.plans_with[i]:
                missing[pid] -= 1
                if missing[pid] == 0:
                    q = tbl.plan_query[pid]
                    s = tbl.plan_speedup[pid]
                    if s > best[q]:
                        best[q] = s

        ia = ib = 0
        while ia < len(seq_a) and ib < len(seq_b):
            fa, fb = seq_a[ia], seq_b[ib]
            # a front with an unmerged predecessor inside this group waits
            ok_a = not (tbl.pred_mask[fa] & ~built_mask & union_mask)
            ok_b = not (tbl.pred_mask[fb] & ~built_mask & union_mask)
            if ok_a != ok_b:
                pick_a = ok_a
            else:
                ga = marginal(fa, missing, best)
                gb = marginal(fb, missing, best)
                if ga > gb:
                    pick_a = True
                elif gb > ga:
                    pick_a = False
                else:
                    pick_a = fa < fb
            if pick_a:
                merged.append(fa)
                consume(fa)
                ia += 1
            else:
                merged.append(fb)
                consume(fb)
                ib += 1
        for i in seq_a[ia:]:
            merged.append(i)
        for i in seq_b[ib:]:
            merged.append(i)
        return merged

    raw = schedule(list(range(n)))
    # stable repair: earliest eligible element first
    order: list[int] = []
    built_mask = 0
    pending = list(raw)
    while pending:
        for k, i in enumerate(pending):
            if not tbl.pred_mask[i] & ~built_mask:
                order.append(i)
                built_mask |= 1 << i
                del pending[k]
                break
        else:  # cyclic precedences never reach here on validated instances
            order.extend(pending)
            break
    return order
