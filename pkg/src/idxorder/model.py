"""Problem data model and the JSON instance format shared by all solvers.

An instance describes a set of database indexes to deploy, the queries they
serve, the query plans (index sets) with their runtime speedups, pairwise
build interactions (an already-built index cutting another index's creation
cost), and hard precedence edges between indexes.

Instances are immutable after construction and safe to share read-only
across concurrent searches. Identifiers are dense integers starting at 0;
`canonicalize` enforces that along with deterministic ordering and
duplicate merging.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

__all__ = [
    "IndexDef",
    "QueryDef",
    "PlanDef",
    "BuildInteraction",
    "Precedence",
    "Instance",
    "Violation",
    "InstanceFormatError",
    "InvalidInstanceError",
    "validate",
    "canonicalize",
    "load",
    "store",
    "instance_to_doc",
    "instance_from_doc",
]

# Violation codes (machine readable). Violations are data, not exceptions.
NONPOSITIVE_CTIME = "NONPOSITIVE_CTIME"
NEGATIVE_QTIME = "NEGATIVE_QTIME"
EMPTY_PLAN = "EMPTY_PLAN"
NEGATIVE_QSPDUP = "NEGATIVE_QSPDUP"
QSPDUP_GT_QTIME = "QSPDUP_GT_QTIME"
SELF_BUILD_INTERACTION = "SELF_BUILD_INTERACTION"
NONPOSITIVE_CSPDUP = "NONPOSITIVE_CSPDUP"
CSPDUP_GE_CTIME = "CSPDUP_GE_CTIME"
PRECEDENCE_CYCLE = "PRECEDENCE_CYCLE"
UNKNOWN_INDEX = "UNKNOWN_INDEX"
UNKNOWN_QUERY = "UNKNOWN_QUERY"
DUPLICATE_ID = "DUPLICATE_ID"
DUPLICATE_PLAN = "DUPLICATE_PLAN"
DUPLICATE_BUILD_INTERACTION = "DUPLICATE_BUILD_INTERACTION"
ID_NOT_DENSE = "ID_NOT_DENSE"


class InstanceFormatError(ValueError):
    """Raised when an instance file cannot be parsed against the schema."""


class InvalidInstanceError(ValueError):
    """Raised when an instance fails validation on load."""

    def __init__(self, violations: list["Violation"]):
        self.violations = violations
        lines = ", ".join(f"{v.code}@{v.subject}" for v in violations[:8])
        more = "" if len(violations) <= 8 else f" (+{len(violations) - 8} more)"
        super().__init__(f"invalid instance: {lines}{more}")


@dataclass(frozen=True)
class IndexDef:
    id: int
    ctime: float  # base creation cost in seconds, > 0


@dataclass(frozen=True)
class QueryDef:
    id: int
    qtime: float  # original runtime in seconds, >= 0


@dataclass(frozen=True)
class PlanDef:
    id: int
    query: int
    indexes: frozenset[int]  # non-empty; plan usable only when all are built
    qspdup: float  # runtime reduction vs. the query's original runtime


@dataclass(frozen=True)
class BuildInteraction:
    target: int  # index whose build gets cheaper
    helper: int  # index that must already exist
    cspdup: float  # build cost reduction, 0 < cspdup < ctime(target)


@dataclass(frozen=True)
class Precedence:
    before: int
    after: int


@dataclass(frozen=True)
class Instance:
    name: str
    indexes: tuple[IndexDef, ...]
    queries: tuple[QueryDef, ...]
    plans: tuple[PlanDef, ...]
    build_interactions: tuple[BuildInteraction, ...]
    precedences: tuple[Precedence, ...]

    @property
    def n_indexes(self) -> int:
        return len(self.indexes)

    def index_ids(self) -> list[int]:
        return [ix.id for ix in self.indexes]


@dataclass(frozen=True)
class Violation:
    code: str
    subject: int | str  # offending identifier
    detail: str = ""

    def to_doc(self) -> dict:
        return {"code": self.code, "subject": self.subject, "detail": self.detail}


def make_instance(
    name: str = "",
    indexes: Iterable[tuple[int, float]] = (),
    queries: Iterable[tuple[int, float]] = (),
    plans: Iterable[tuple[int, int, Iterable[int], float]] = (),
    build_interactions: Iterable[tuple[int, int, float]] = (),
    precedences: Iterable[tuple[int, int]] = (),
) -> Instance:
    """Convenience constructor from plain tuples (used heavily in tests)."""
    return Instance(
        name=name,
        indexes=tuple(IndexDef(i, float(c)) for i, c in indexes),
        queries=tuple(QueryDef(q, float(t)) for q, t in queries),
        plans=tuple(
            PlanDef(p, q, frozenset(int(x) for x in xs), float(s))
            for p, q, xs, s in plans
        ),
        build_interactions=tuple(
            BuildInteraction(t, h, float(s)) for t, h, s in build_interactions
        ),
        precedences=tuple(Precedence(b, a) for b, a in precedences),
    )


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------


def _reference_violations(instance: Instance) -> list[Violation]:
    """Cross-reference failures only; used by validate and by canonicalize."""
    out: list[Violation] = []
    idx_ids = {ix.id for ix in instance.indexes}
    qry_ids = {q.id for q in instance.queries}
    for p in instance.plans:
        if p.query not in qry_ids:
            out.append(Violation(UNKNOWN_QUERY, p.query, f"plan {p.id} references unknown query"))
        for i in sorted(p.indexes):
            if i not in idx_ids:
                out.append(Violation(UNKNOWN_INDEX, i, f"plan {p.id} references unknown index"))
    for b in instance.build_interactions:
        for i in (b.target, b.helper):
            if i not in idx_ids:
                out.append(Violation(UNKNOWN_INDEX, i, "build interaction references unknown index"))
    for pr in instance.precedences:
        for i in (pr.before, pr.after):
            if i not in idx_ids:
                out.append(Violation(UNKNOWN_INDEX, i, "precedence references unknown index"))
    return out


def _cycle_violation(instance: Instance) -> Violation | None:
    """Kahn's algorithm over resolvable precedence edges."""
    idx_ids = {ix.id for ix in instance.indexes}
    succ: dict[int, set[int]] = {i: set() for i in idx_ids}
    indeg: dict[int, int] = {i: 0 for i in idx_ids}
    for pr in instance.precedences:
        if pr.before in idx_ids and pr.after in idx_ids:
            if pr.after not in succ[pr.before]:
                succ[pr.before].add(pr.after)
                indeg[pr.after] += 1
    queue = sorted(i for i in idx_ids if indeg[i] == 0)
    seen = 0
    while queue:
        node = queue.pop()
        seen += 1
        for nxt in succ[node]:
            indeg[nxt] -= 1
            if indeg[nxt] == 0:
                queue.append(nxt)
    if seen == len(idx_ids):
        return None
    cyclic = sorted(i for i in idx_ids if indeg[i] > 0)
    return Violation(PRECEDENCE_CYCLE, cyclic[0], f"cycle among indexes {cyclic}")


def validate(instance: Instance) -> list[Violation]:
    """Return every invariant violation; an empty list means valid.

    Violations carry a machine-readable code and the offending identifier.
    """
    out: list[Violation] = []

    for label, ids in (
        ("indexes", [ix.id for ix in instance.indexes]),
        ("queries", [q.id for q in instance.queries]),
        ("plans", [p.id for p in instance.plans]),
    ):
        seen: set[int] = set()
        for i in ids:
            if i in seen:
                out.append(Violation(DUPLICATE_ID, i, f"duplicate id in {label}"))
            seen.add(i)
        if seen == set(ids) and sorted(ids) != list(range(len(ids))):
            offender = next(
                (i for i in sorted(ids) if i >= len(ids) or i < 0), sorted(ids)[0] if ids else 0
            )
            out.append(Violation(ID_NOT_DENSE, offender, f"{label} ids are not dense from 0"))

    for ix in instance.indexes:
        if not ix.ctime > 0:
            out.append(Violation(NONPOSITIVE_CTIME, ix.id, f"ctime={ix.ctime}"))
    for q in instance.queries:
        if q.qtime < 0:
            out.append(Violation(NEGATIVE_QTIME, q.id, f"qtime={q.qtime}"))

    out.extend(_reference_violations(instance))
    qtime_of = {q.id: q.qtime for q in instance.queries}
    ctime_of = {ix.id: ix.ctime for ix in instance.indexes}

    seen_plan: set[tuple[int, frozenset[int]]] = set()
    for p in instance.plans:
        if not p.indexes:
            out.append(Violation(EMPTY_PLAN, p.id, "plan has no indexes"))
        if p.qspdup < 0:
            out.append(Violation(NEGATIVE_QSPDUP, p.id, f"qspdup={p.qspdup}"))
        elif p.query in qtime_of and p.qspdup > qtime_of[p.query]:
            out.append(
                Violation(QSPDUP_GT_QTIME, p.id, f"qspdup={p.qspdup} > qtime={qtime_of[p.query]}")
            )
        key = (p.query, p.indexes)
        if key in seen_plan:
            out.append(Violation(DUPLICATE_PLAN, p.id, "same query and index set as another plan"))
        seen_plan.add(key)

    seen_bi: set[tuple[int, int]] = set()
    for b in instance.build_interactions:
        if b.target == b.helper:
            out.append(Violation(SELF_BUILD_INTERACTION, b.target, "target equals helper"))
        if not b.cspdup > 0:
            out.append(Violation(NONPOSITIVE_CSPDUP, b.target, f"cspdup={b.cspdup}"))
        elif b.target in ctime_of and b.cspdup >= ctime_of[b.target]:
            out.append(
                Violation(CSPDUP_GE_CTIME, b.target, f"cspdup={b.cspdup} >= ctime={ctime_of[b.target]}")
            )
        key = (b.target, b.helper)
        if key in seen_bi:
            out.append(Violation(DUPLICATE_BUILD_INTERACTION, b.target, f"pair {key} repeated"))
        seen_bi.add(key)

    for pr in instance.precedences:
        if pr.before == pr.after:
            out.append(Violation(PRECEDENCE_CYCLE, pr.before, "index precedes itself"))
    cyc = _cycle_violation(instance)
    if cyc is not None:
        out.append(cyc)
    return out


# ---------------------------------------------------------------------------
# Canonicalization
# ---------------------------------------------------------------------------


def canonicalize(instance: Instance) -> Instance:
    """Return the canonical form: duplicates merged (max wins), identifiers
    re-densified, deterministic ordering. Idempotent.

    Requires all cross references to resolve; raises InvalidInstanceError
    otherwise.
    """
    refv = _reference_violations(instance)
    if refv:
        raise InvalidInstanceError(refv)

    idx_map = {old: new for new, old in enumerate(sorted({ix.id for ix in instance.indexes}))}
    qry_map = {old: new for new, old in enumerate(sorted({q.id for q in instance.queries}))}

    ctime_of: dict[int, float] = {}
    for ix in instance.indexes:
        new = idx_map[ix.id]
        ctime_of[new] = max(ctime_of.get(new, ix.ctime), ix.ctime)
    indexes = tuple(IndexDef(i, ctime_of[i]) for i in range(len(ctime_of)))

    qtime_of: dict[int, float] = {}
    for q in instance.queries:
        new = qry_map[q.id]
        qtime_of[new] = max(qtime_of.get(new, q.qtime), q.qtime)
    queries = tuple(QueryDef(i, qtime_of[i]) for i in range(len(qtime_of)))

    merged_plans: dict[tuple[int, frozenset[int]], float] = {}
    for p in instance.plans:
        key = (qry_map[p.query], frozenset(idx_map[i] for i in p.indexes))
        merged_plans[key] = max(merged_plans.get(key, p.qspdup), p.qspdup)
    plan_keys = sorted(merged_plans, key=lambda k: (k[0], tuple(sorted(k[1]))))
    plans = tuple(
        PlanDef(pid, q, xs, merged_plans[(q, xs)]) for pid, (q, xs) in enumerate(plan_keys)
    )

    merged_bi: dict[tuple[int, int], float] = {}
    for b in instance.build_interactions:
        key = (idx_map[b.target], idx_map[b.helper])
        merged_bi[key] = max(merged_bi.get(key, b.cspdup), b.cspdup)
    build_interactions = tuple(
        BuildInteraction(t, h, merged_bi[(t, h)]) for t, h in sorted(merged_bi)
    )

    prec = sorted({(idx_map[p.before], idx_map[p.after]) for p in instance.precedences})
    precedences = tuple(Precedence(b, a) for b, a in prec)

    return Instance(
        name=instance.name,
        indexes=indexes,
        queries=queries,
        plans=plans,
        build_interactions=build_interactions,
        precedences=precedences,
    )


# ---------------------------------------------------------------------------
# JSON instance format
# ---------------------------------------------------------------------------

_TOP_KEYS = {"name", "indexes", "queries", "plans", "build_interactions", "precedences"}


def _require_keys(obj: dict, keys: set[str], where: str) -> None:
    if not isinstance(obj, dict):
        raise InstanceFormatError(f"{where}: expected an object")
    unknown = set(obj) - keys
    if unknown:
        raise InstanceFormatError(f"{where}: unknown field '{sorted(unknown)[0]}'")
    missing = keys - set(obj)
    if missing:
        raise InstanceFormatError(f"{where}: missing field '{sorted(missing)[0]}'")


def _num(value, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise InstanceFormatError(f"{where}: expected a number, got {value!r}")
    return float(value)


def _int(value, where: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise InstanceFormatError(f"{where}: expected an integer, got {value!r}")
    return value


def instance_from_doc(doc: dict) -> Instance:
    """Build an Instance from a parsed JSON document. Strict schema."""
    _require_keys(doc, _TOP_KEYS, "instance")
    if not isinstance(doc["name"], str):
        raise InstanceFormatError("name: expected a string")
    for key in sorted(_TOP_KEYS - {"name"}):
        if not isinstance(doc[key], list):
            raise InstanceFormatError(f"{key}: expected an array")

    indexes = []
    for k, entry in enumerate(doc["indexes"]):
        where = f"indexes[{k}]"
        _require_keys(entry, {"id", "ctime"}, where)
        indexes.append(IndexDef(_int(entry["id"], where + ".id"), _num(entry["ctime"], where + ".ctime")))
    queries = []
    for k, entry in enumerate(doc["queries"]):
        where = f"queries[{k}]"
        _require_keys(entry, {"id", "qtime"}, where)
        queries.append(QueryDef(_int(entry["id"], where + ".id"), _num(entry["qtime"], where + ".qtime")))
    plans = []
    for k, entry in enumerate(doc["plans"]):
        where = f"plans[{k}]"
        _require_keys(entry, {"id", "query", "indexes", "qspdup"}, where)
        if not isinstance(entry["indexes"], list):
            raise InstanceFormatError(f"{where}.indexes: expected an array")
        plans.append(
            PlanDef(
                _int(entry["id"], where + ".id"),
                _int(entry["query"], where + ".query"),
                frozenset(_int(i, where + ".indexes[]") for i in entry["indexes"]),
                _num(entry["qspdup"], where + ".qspdup"),
            )
        )
    interactions = []
    for k, entry in enumerate(doc["build_interactions"]):
        where = f"build_interactions[{k}]"
        _require_keys(entry, {"target", "helper", "cspdup"}, where)
        interactions.append(
            BuildInteraction(
                _int(entry["target"], where + ".target"),
                _int(entry["helper"], where + ".helper"),
                _num(entry["cspdup"], where + ".cspdup"),
            )
        )
    precedences = []
    for k, entry in enumerate(doc["precedences"]):
        where = f"precedences[{k}]"
        _require_keys(entry, {"before", "after"}, where)
        precedences.append(
            Precedence(_int(entry["before"], where + ".before"), _int(entry["after"], where + ".after"))
        )
    return Instance(
        name=doc["name"],
        indexes=tuple(indexes),
        queries=tuple(queries),
        plans=tuple(plans),
        build_interactions=tuple(interactions),
        precedences=tuple(precedences),
    )


def instance_to_doc(instance: Instance) -> dict:
    return {
        "name": instance.name,
        "indexes": [{"id": ix.id, "ctime": ix.ctime} for ix in instance.indexes],
        "queries": [{"id": q.id, "qtime": q.qtime} for q in instance.queries],
        "plans": [
            {"id": p.id, "query": p.query, "indexes": sorted(p.indexes), "qspdup": p.qspdup}
            for p in instance.plans
        ],
        "build_interactions": [
            {"target": b.target, "helper": b.helper, "cspdup": b.cspdup}
            for b in instance.build_interactions
        ],
        "precedences": [{"before": p.before, "after": p.after} for p in instance.precedences],
    }


def load(path: str | Path) -> Instance:
    """Load, canonicalize, and validate an instance file.

    Raises InstanceFormatError on parse/schema problems and
    InvalidInstanceError when the canonical instance fails validation.
    """
    text = Path(path).read_text(encoding="utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceFormatError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    instance = canonicalize(instance_from_doc(doc))
    violations = validate(instance)
    if violations:
        raise InvalidInstanceError(violations)
    return instance


def store(instance: Instance, path: str | Path) -> None:
    """Write the instance as a canonical-format JSON document."""
    doc = instance_to_doc(instance)
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")
