"""Seeded synthetic instance generation.

`generate` produces instances whose aggregate counts (queries, indexes,
plans, largest plan, interaction counts) hit a profile exactly, with
table-locality bias: indexes are grouped into pseudo-tables and plans
prefer indexes from one group. The `low`/`mid` density variants then thin
plans and build interactions the way reduced benchmark workloads do.

`generate_property_fixture` builds small instances guaranteed to contain
one detectable occurrence of a named structural property.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass

from .model import Instance, canonicalize, make_instance, validate

__all__ = [
    "GenProfile",
    "GenerationError",
    "tpch_like",
    "tpcds_like",
    "generate",
    "generate_property_fixture",
    "FIXTURE_KINDS",
]

DENSITIES = ("low", "mid", "full")
FIXTURE_KINDS = ("alliance", "colony", "dominated", "disjoint", "tail")


class GenerationError(ValueError):
    """Raised for unsatisfiable generation profiles."""


@dataclass(frozen=True)
class GenProfile:
    name: str
    queries: int
    indexes: int
    plans: int
    max_plan_size: int
    build_interactions: int
    query_interactions: int  # number of multi-index plans
    density: str = "full"
    seed: int = 0

    def __post_init__(self):
        for fld in ("queries", "indexes", "plans", "max_plan_size"):
            if getattr(self, fld) <= 0:
                raise GenerationError(f"{fld} must be positive")
        if self.build_interactions < 0 or self.query_interactions < 0:
            raise GenerationError("interaction counts must be non-negative")
        if self.max_plan_size > self.indexes:
            raise GenerationError("max_plan_size exceeds index count")
        if self.plans < self.queries:
            raise GenerationError("need at least one plan per query")
        if self.query_interactions > self.plans:
            raise GenerationError("more multi-index plans than plans")
        if self.query_interactions == 0 and self.max_plan_size > 1:
            raise GenerationError("max_plan_size > 1 needs query interactions")
        if self.build_interactions > self.indexes * (self.indexes - 1):
            raise GenerationError("too many build interactions")
        if self.density not in DENSITIES:
            raise GenerationError(f"density must be one of {DENSITIES}")


def tpch_like(seed: int = 0, density: str = "full") -> GenProfile:
    return GenProfile("tpch-like", 22, 31, 221, 5, 31, 80, density, seed)


def tpcds_like(seed: int = 0, density: str = "full") -> GenProfile:
    return GenProfile("tpcds-like", 102, 148, 3386, 13, 243, 1363, density, seed)


def _log_uniform(rng: random.Random, lo: float, hi: float) -> float:
    return math.exp(rng.uniform(math.log(lo), math.log(hi)))


def generate(profile: GenProfile) -> Instance:
    """Deterministically generate a valid canonical instance for a profile."""
    rng = random.Random(profile.seed)
    nq, ni, np_ = profile.queries, profile.indexes, profile.plans

    groups = max(1, ni // 4)
    group_members: list[list[int]] = [[] for _ in range(groups)]
    for i in range(ni):
        group_members[i * groups // ni].append(i)

    ctime = [_log_uniform(rng, 10.0, 3600.0) for _ in range(ni)]
    qtime = [_log_uniform(rng, 1.0, 1000.0) for _ in range(nq)]
    query_home = [rng.randrange(groups) for _ in range(nq)]

    plan_query = [slot % nq for slot in range(np_)]
    multi_slots = sorted(rng.sample(range(np_), profile.query_interactions))
    sizes = {}
    for k, slot in enumerate(multi_slots):
        sizes[slot] = profile.max_plan_size if k == 0 else rng.randint(2, profile.max_plan_size)

    def draw_set(q: int, size: int, attempt: int) -> frozenset[int]:
        home = group_members[query_home[q]]
        if attempt >= 8:  # bias decays so retries can escape a small group
            return frozenset(rng.sample(range(ni), size))
        want_home = max(1, round(0.8 * size))
        picked = set(rng.sample(home, min(want_home, len(home), size)))
        pool = [i for i in range(ni) if i not in picked]
        while len(picked) < size:
            picked.add(pool.pop(rng.randrange(len(pool))))
        return frozenset(picked)

    used_sets: dict[int, set[frozenset[int]]] = {q: set() for q in range(nq)}
    plan_rows: list[tuple[int, int, frozenset[int], float]] = []
    for slot in range(np_):
        q = plan_query[slot]
        size = sizes.get(slot, 1)
        for attempt in range(200):
            xs = draw_set(q, size, attempt)
            if xs not in used_sets[q]:
                break
        else:
            raise GenerationError(
                f"cannot place {len(used_sets[q]) + 1} distinct plans of size {size} for one query"
            )
        used_sets[q].add(xs)
        frac = rng.betavariate(2.0, 5.0) * (1.0 + 0.15 * (size - 1))
        speedup = qtime[q] * min(0.95, frac)
        plan_rows.append((slot, q, xs, speedup))

    pairs: set[tuple[int, int]] = set()
    attempts = 0
    while len(pairs) < profile.build_interactions:
        attempts += 1
        if attempts > 200 * profile.build_interactions + 200:
            raise GenerationError("cannot draw enough distinct build interactions")
        target = rng.randrange(ni)
        home = group_members[target * groups // ni]
        if rng.random() < 0.7 and len(home) > 1:
            helper = rng.choice([i for i in home if i != target])
        else:
            helper = rng.randrange(ni)
        if helper == target:
            continue
        pairs.add((target, helper))
    interactions = [
        (t, h, ctime[t] * rng.uniform(0.10, 0.80)) for t, h in sorted(pairs)
    ]

    if profile.density != "full":
        keep = 2 if profile.density == "mid" else 1
        by_query: dict[int, list[tuple[int, int, frozenset[int], float]]] = {}
        for row in plan_rows:
            by_query.setdefault(row[1], []).append(row)
        plan_rows = []
        for q in sorted(by_query):
            ranked = sorted(
                by_query[q], key=lambda r: (-r[3], tuple(sorted(r[2])))
            )
            plan_rows.extend(ranked[:keep])
        if profile.density == "low":
            interactions = []
        else:
            interactions = [
                (t, h, s) for t, h, s in interactions if s >= 0.15 * ctime[t]
            ]

    instance = canonicalize(
        make_instance(
            name=f"{profile.name}-{profile.density}-seed{profile.seed}",
            indexes=[(i, ctime[i]) for i in range(ni)],
            queries=[(q, qtime[q]) for q in range(nq)],
            plans=[(k, q, xs, s) for k, (slot, q, xs, s) in enumerate(plan_rows)],
            build_interactions=interactions,
        )
    )
    problems = validate(instance)
    if problems:
        raise GenerationError(f"generated instance failed validation: {problems[:3]}")
    return instance


# ---------------------------------------------------------------------------
# Property fixtures
# ---------------------------------------------------------------------------


def generate_property_fixture(kind: str, seed: int = 0) -> Instance:
    """Small instance guaranteed to contain the named structural property."""
    rng = random.Random(seed)
    jitter = lambda base, spread=0.2: base * (1.0 + rng.uniform(-spread, spread))

    if kind == "alliance":
        big = jitter(50.0)
        instance = make_instance(
            name=f"fixture-alliance-{seed}",
            indexes=[(i, jitter(10.0)) for i in range(5)],
            queries=[(q, 100.0) for q in range(4)],
            plans=[
                (0, 0, [0, 1], big),
                (1, 1, [2], jitter(20.0)),
                (2, 2, [3], jitter(12.0)),
                (3, 3, [4], jitter(6.0)),
            ],
        )
    elif kind == "colony":
        instance = make_instance(
            name=f"fixture-colony-{seed}",
            indexes=[(i, jitter(10.0)) for i in range(4)],
            queries=[(q, 100.0) for q in range(3)],
            plans=[
                (0, 0, [0, 1], jitter(30.0)),
                (1, 1, [1], jitter(10.0)),
                (2, 2, [2], jitter(15.0)),
                (3, 2, [3], jitter(5.0)),
            ],
        )
    elif kind == "dominated":
        shared = jitter(10.0)
        instance = make_instance(
            name=f"fixture-dominated-{seed}",
            indexes=[(0, shared), (1, shared), (2, jitter(10.0)), (3, jitter(10.0)), (4, jitter(10.0))],
            queries=[(q, 100.0) for q in range(5)],
            plans=[
                (0, 0, [0], 1.0),
                (1, 1, [0, 2], 3.0),
                (2, 2, [1], jitter(40.0, 0.1)),
                (3, 3, [3], jitter(20.0)),
                (4, 4, [4], jitter(8.0)),
            ],
        )
    elif kind == "disjoint":
        speeds = sorted((jitter(s) for s in (40.0, 25.0, 12.0, 5.0)), reverse=True)
        instance = make_instance(
            name=f"fixture-disjoint-{seed}",
            indexes=[(i, 10.0) for i in range(4)],
            queries=[(q, 100.0) for q in range(4)],
            plans=[(k, k, [k], speeds[k]) for k in range(4)],
        )
    elif kind == "tail":
        s0, s1, s2 = jitter(20.0), jitter(15.0), jitter(10.0)
        instance = make_instance(
            name=f"fixture-tail-{seed}",
            indexes=[(0, 10.0), (1, 10.0), (2, 10.0), (3, 10.0), (4, 9.0)],
            queries=[(0, 100.0), (1, 100.0), (2, 100.0), (3, 100.0)],
            plans=[
                (0, 0, [0], s0),
                (1, 1, [1], s1),
                (2, 2, [2], s2),
                (3, 3, [3], 50.0),
                (4, 3, [4], 1.0),
            ],
            precedences=[(i, j) for i in (0, 1, 2) for j in (3, 4)],
        )
    else:
        raise ValueError(f"unknown fixture kind {kind!r}; expected one of {FIXTURE_KINDS}")

    instance = canonicalize(instance)
    problems = validate(instance)
    if problems:
        raise GenerationError(f"fixture failed validation: {problems[:3]}")
    return instance
